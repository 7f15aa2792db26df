//! Single-qubit variational circuit agents for discrete-action control.

pub mod agent;
pub mod env;
pub mod error;
pub mod head;
pub mod model;
pub mod nn;
pub mod quantum;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type QubitState64 = quantum::QubitState<f64>;
pub type QubitState32 = quantum::QubitState<f32>;
pub type HeadParams64 = head::HeadParams<f64>;
pub type HeadParams32 = head::HeadParams<f32>;
pub type SvqcModel64 = model::SvqcModel<f64>;
pub type SvqcModel32 = model::SvqcModel<f32>;
pub type DenseNet64 = nn::DenseNet<f64>;
pub type DenseNet32 = nn::DenseNet<f32>;
pub type Adam64 = agent::Adam<f64>;
