//! Exact simulation of entanglement-free variational circuits.

mod circuit;
mod gate;
mod gradient;
mod noise;
mod state;

pub use circuit::{run_circuit, CircuitSpec, FeatureMap, Replication};
pub use gate::{gate_matrix, AngleSource, Gate, GateKind, Mat2};
pub use gradient::{circuit_vjp, shift_gradient, shift_gradient_sampled, GradientMode};
pub use noise::{noisy_expectation, sample_expectation, NoiseModel, Shots};
pub use state::{apply_gate, expectation_z, QubitState};
