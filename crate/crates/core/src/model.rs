//! Trainable function approximators used as actor and critic: the SVQC
//! (circuit + reuse + scaling head) and the dense baseline.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::head::{head_backward, head_forward, HeadParams};
use crate::nn::{Activation, DenseNet, FCN_HIDDEN};
use crate::quantum::{circuit_vjp, noisy_expectation, CircuitSpec, GradientMode, NoiseModel};
use crate::scalar::Scalar;

/// Circuit outputs followed by output reuse and an affine head.
///
/// Flat parameter layout: circuit angles, then head weights, then head bias.
#[derive(Clone, Debug, PartialEq)]
pub struct SvqcModel<T> {
    pub circuit: CircuitSpec,
    pub angles: Vec<T>,
    pub head: HeadParams<T>,
    pub gradient: GradientMode,
}

impl<T: Scalar> SvqcModel<T> {
    pub fn new(circuit: CircuitSpec, angles: Vec<T>, head: HeadParams<T>) -> Result<Self> {
        if angles.len() != circuit.n_angles() {
            return Err(Error::config(format!(
                "circuit needs {} angles, got {}",
                circuit.n_angles(),
                angles.len()
            )));
        }
        if head.n_inputs() != circuit.n_qubits() {
            return Err(Error::config(format!(
                "head reads {} outputs but circuit has {} qubits",
                head.n_inputs(),
                circuit.n_qubits()
            )));
        }
        Ok(SvqcModel {
            circuit,
            angles,
            head,
            gradient: GradientMode::Analytic,
        })
    }

    /// Angles `~ U(init.low, init.high)`, head weights and bias
    /// `~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn random<R: Rng + ?Sized>(
        circuit: CircuitSpec,
        reuse: usize,
        n_outputs: usize,
        init: AngleInit,
        rng: &mut R,
    ) -> Result<Self> {
        init.validate()?;
        let angles = (0..circuit.n_angles()).map(|_| T::of(init.sample(rng))).collect();
        let head = HeadParams::random(circuit.n_qubits(), reuse, n_outputs, rng)?;
        SvqcModel::new(circuit, angles, head)
    }

    pub fn n_inputs(&self) -> usize {
        self.circuit.n_features()
    }

    pub fn n_outputs(&self) -> usize {
        self.head.n_outputs()
    }

    pub fn param_count(&self) -> usize {
        self.angles.len() + self.head.param_count()
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        let y = self.circuit.run(x, &self.angles)?;
        head_forward(&self.head, &y)
    }

    /// Head applied to sampled and noisy circuit outputs.
    pub fn forward_noisy<R: Rng + ?Sized>(&self, x: &[T], noise: &NoiseModel, rng: &mut R) -> Result<Vec<T>> {
        let states = self.circuit.states(x, &self.angles)?;
        let counts = self.circuit.gate_counts();
        let y = states
            .iter()
            .zip(counts)
            .map(|(s, g)| noisy_expectation(s, g, noise, rng))
            .collect::<Result<Vec<T>>>()?;
        head_forward(&self.head, &y)
    }

    /// Outputs and the gradient of `sum_o upstream[o] * out_o` in flat layout.
    pub fn gradient(&self, x: &[T], upstream: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let y = self.circuit.run(x, &self.angles)?;
        let out = head_forward(&self.head, &y)?;
        let hg = head_backward(&self.head, &y, upstream)?;
        let (_, angle_grad) = circuit_vjp(&self.circuit, x, &self.angles, &hg.inputs, self.gradient)?;
        let mut flat = angle_grad;
        flat.extend(hg.weights);
        flat.extend(hg.bias);
        Ok((out, flat))
    }

    pub fn flat(&self) -> Vec<T> {
        let mut v = self.angles.clone();
        v.extend(self.head.flat());
        v
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::config("flat parameter vector has the wrong length"));
        }
        let (a, h) = flat.split_at(self.angles.len());
        self.angles.copy_from_slice(a);
        self.head.set_flat(h)
    }
}

/// Range of the uniform draw for the trainable circuit angles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleInit {
    pub low: f64,
    pub high: f64,
}

impl AngleInit {
    pub const FULL_TURN: AngleInit = AngleInit {
        low: 0.0,
        high: std::f64::consts::TAU,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.low.is_finite() && self.high.is_finite() && self.low <= self.high) {
            return Err(Error::config(format!(
                "angle init range [{}, {}) is not a finite interval",
                self.low, self.high
            )));
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.low == self.high {
            self.low
        } else {
            rng.random_range(self.low..self.high)
        }
    }
}

/// Near zero, where every standard qubit responds to the sign of its feature.
impl Default for AngleInit {
    fn default() -> Self {
        AngleInit { low: -0.1, high: 0.1 }
    }
}

/// Architecture description, shared by actor and critic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Svqc {
        circuit: CircuitSpec,
        reuse: usize,
        #[serde(default)]
        gradient: GradientMode,
        #[serde(default)]
        init: AngleInit,
    },
    Fcn {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default)]
        activation: Activation,
    },
}

fn default_hidden() -> Vec<usize> {
    FCN_HIDDEN.to_vec()
}

impl ModelSpec {
    pub fn fcn() -> Self {
        ModelSpec::Fcn {
            hidden: default_hidden(),
            activation: Activation::Tanh,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Svqc { .. } => "svqc",
            ModelSpec::Fcn { .. } => "fcn",
        }
    }

    /// Randomly initialised model mapping `n_inputs` features to `n_outputs`.
    pub fn build<R: Rng + ?Sized>(&self, n_inputs: usize, n_outputs: usize, rng: &mut R) -> Result<Model> {
        match self {
            ModelSpec::Svqc {
                circuit,
                reuse,
                gradient,
                init,
            } => {
                if circuit.n_features() != n_inputs {
                    return Err(Error::config(format!(
                        "circuit takes {} features, environment emits {n_inputs}",
                        circuit.n_features()
                    )));
                }
                let mut m = SvqcModel::random(circuit.clone(), *reuse, n_outputs, *init, rng)?;
                m.gradient = *gradient;
                Ok(Model::Svqc(m))
            }
            ModelSpec::Fcn { hidden, activation } => {
                let sizes: Vec<usize> = std::iter::once(n_inputs)
                    .chain(hidden.iter().copied())
                    .chain(std::iter::once(n_outputs))
                    .collect();
                Ok(Model::Fcn(DenseNet::random(&sizes, *activation, rng)?))
            }
        }
    }

    /// Zero-parameter model, for shape bookkeeping and checkpoint loading.
    pub fn build_zeros(&self, n_inputs: usize, n_outputs: usize) -> Result<Model> {
        let mut model = self.build(n_inputs, n_outputs, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0))?;
        let zeros = vec![0.0; model.param_count()];
        model.set_params(&zeros)?;
        Ok(model)
    }
}

/// Double-precision actor or critic as seen by the trainer.
#[derive(Clone, Debug)]
pub enum Model {
    Svqc(SvqcModel<f64>),
    Fcn(DenseNet<f64>),
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Svqc(_) => "svqc",
            Model::Fcn(_) => "fcn",
        }
    }

    pub fn n_inputs(&self) -> usize {
        match self {
            Model::Svqc(m) => m.n_inputs(),
            Model::Fcn(n) => n.n_inputs(),
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            Model::Svqc(m) => m.n_outputs(),
            Model::Fcn(n) => n.n_outputs(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Svqc(m) => m.param_count(),
            Model::Fcn(n) => n.param_count(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Model::Svqc(m) => m.flat(),
            Model::Fcn(n) => n.flat(),
        }
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        match self {
            Model::Svqc(m) => m.set_flat(p),
            Model::Fcn(n) => n.set_flat(p),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Svqc(m) => m.forward(x),
            Model::Fcn(n) => n.forward(x),
        }
    }

    /// Forward pass under a noise model; the dense baseline ignores it.
    pub fn forward_noisy(&self, x: &[f64], noise: &NoiseModel, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        match self {
            Model::Svqc(m) if !noise.is_ideal() => m.forward_noisy(x, noise, rng),
            _ => self.forward(x),
        }
    }

    pub fn gradient(&self, x: &[f64], upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            Model::Svqc(m) => m.gradient(x, upstream),
            Model::Fcn(n) => n.gradient(x, upstream),
        }
    }
}
