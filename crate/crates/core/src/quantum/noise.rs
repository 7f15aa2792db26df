//! Measurement emulation: finite shots, readout bit flips and per-gate
//! depolarizing noise.
//!
//! Single-qubit depolarizing noise with probability `p` shrinks the Bloch
//! vector by `1 - p`. Every gate here is a rotation of the Bloch sphere, so
//! after `G` noisy gates the Z component is `(1 - p)^G <Z>` and each shot is
//! an independent Bernoulli draw with `P(1) = (1 - (1 - p)^G <Z>) / 2`.
//! A readout flip with probability `r` then maps `P(1)` to
//! `P(1) (1 - r) + (1 - P(1)) r`. Shots are drawn as one binomial count.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::state::QubitState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of measurement repetitions, or the exact expectation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Shots {
    #[default]
    Exact,
    Count(u64),
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Shots> {
        match s.trim() {
            "exact" => Ok(Shots::Exact),
            other => match other.parse::<u64>() {
                Ok(0) => Err(Error::invalid("shot count must be positive")),
                Ok(n) => Ok(Shots::Count(n)),
                Err(_) => Err(Error::Parse(format!("shots must be a positive count or `exact`, got `{s}`"))),
            },
        }
    }
}

impl TryFrom<String> for Shots {
    type Error = Error;
    fn try_from(s: String) -> Result<Shots> {
        s.parse()
    }
}

impl From<Shots> for String {
    fn from(s: Shots) -> String {
        s.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Flip probability per measured bit, in `[0, 0.5]`.
    #[serde(default)]
    pub readout_p: f64,
    /// Depolarizing probability after every gate, in `[0, 1]`.
    #[serde(default)]
    pub gate_p: f64,
    #[serde(default)]
    pub shots: Shots,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::ideal()
    }
}

impl NoiseModel {
    pub const fn ideal() -> Self {
        NoiseModel {
            readout_p: 0.0,
            gate_p: 0.0,
            shots: Shots::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.readout_p) {
            return Err(Error::invalid(format!("readout_p {} outside [0, 0.5]", self.readout_p)));
        }
        if !(0.0..=1.0).contains(&self.gate_p) {
            return Err(Error::invalid(format!("gate_p {} outside [0, 1]", self.gate_p)));
        }
        if self.shots == Shots::Count(0) {
            return Err(Error::invalid("shot count must be positive"));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.readout_p == 0.0 && self.gate_p == 0.0 && self.shots == Shots::Exact
    }
}

fn estimate_from_p1<R: Rng + ?Sized>(p1: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(Error::invalid("shot count must be positive"));
    }
    let dist = Binomial::new(shots, p1.clamp(0.0, 1.0)).map_err(|e| Error::Numeric(e.to_string()))?;
    let ones = dist.sample(rng);
    Ok((shots as f64 - 2.0 * ones as f64) / shots as f64)
}

/// `(n0 - n1) / shots` with each shot reading `1` with probability `|amp1|^2`.
pub fn sample_expectation<T: Scalar, R: Rng + ?Sized>(
    state: &QubitState<T>,
    shots: u64,
    rng: &mut R,
) -> Result<T> {
    estimate_from_p1(state.prob_one().to_f64_lossy(), shots, rng).map(T::of)
}

/// Estimate of `<Z>` for `state` after a program of `n_gates` gates, under
/// `model`. In exact mode this is the mean of the noisy channel.
pub fn noisy_expectation<T: Scalar, R: Rng + ?Sized>(
    state: &QubitState<T>,
    n_gates: usize,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<T> {
    model.validate()?;
    let ideal = state.expectation_z().to_f64_lossy();
    let shrunk = ideal * (1.0 - model.gate_p).powi(n_gates as i32);
    let r = model.readout_p;
    match model.shots {
        Shots::Exact => Ok(T::of((1.0 - 2.0 * r) * shrunk)),
        Shots::Count(n) => {
            let p1 = (1.0 - shrunk) / 2.0;
            let observed = p1 * (1.0 - r) + (1.0 - p1) * r;
            estimate_from_p1(observed, n, rng).map(T::of)
        }
    }
}
