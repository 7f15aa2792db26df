//! Derivatives of circuit outputs with respect to trainable angles.
//!
//! Two independent routes: adjoint differentiation on the amplitudes
//! (`CircuitSpec::vjp_analytic`) and the parameter-shift rule, which only
//! re-runs the circuit and therefore also works on sampled estimates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::circuit::CircuitSpec;
use super::noise::{noisy_expectation, NoiseModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    #[default]
    Analytic,
    Shift,
}

/// Every `(qubit, gate_index)` at which trainable angle `param` is used.
fn occurrences(spec: &CircuitSpec, param: usize) -> Result<Vec<(usize, usize)>> {
    if param >= spec.n_angles() {
        return Err(Error::config(format!(
            "parameter {param} out of range ({} angles)",
            spec.n_angles()
        )));
    }
    let hits: Vec<_> = (0..spec.n_qubits())
        .flat_map(|q| {
            spec.program(q)
                .iter()
                .enumerate()
                .filter(move |(_, g)| g.param() == Some(param))
                .map(move |(i, _)| (q, i))
        })
        .collect();
    if hits.is_empty() {
        return Err(Error::config(format!("parameter {param} drives no rotation gate")));
    }
    Ok(hits)
}

/// `d<Z_q>/d(theta_param)` for every qubit `q` by the parameter-shift rule,
/// `[f(theta + pi/2) - f(theta - pi/2)] / 2`, summed over every gate that
/// uses the angle.
pub fn shift_gradient<T: Scalar>(
    spec: &CircuitSpec,
    features: &[T],
    angles: &[T],
    param: usize,
) -> Result<Vec<T>> {
    spec.run(features, angles)?;
    let half_pi = T::FRAC_PI_2();
    let two = T::of(2.0);
    let mut grad = vec![T::zero(); spec.n_qubits()];
    for (q, gate) in occurrences(spec, param)? {
        let plus = spec.run_shifted(q, gate, half_pi, features, angles)?.expectation_z();
        let minus = spec.run_shifted(q, gate, -half_pi, features, angles)?.expectation_z();
        grad[q] += (plus - minus) / two;
    }
    Ok(grad)
}

/// Same rule evaluated with sampled (and possibly noisy) expectations.
pub fn shift_gradient_sampled<T: Scalar, R: Rng + ?Sized>(
    spec: &CircuitSpec,
    features: &[T],
    angles: &[T],
    param: usize,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<T>> {
    spec.run(features, angles)?;
    let half_pi = T::FRAC_PI_2();
    let two = T::of(2.0);
    let counts = spec.gate_counts();
    let mut grad = vec![T::zero(); spec.n_qubits()];
    for (q, gate) in occurrences(spec, param)? {
        let plus = spec.run_shifted(q, gate, half_pi, features, angles)?;
        let minus = spec.run_shifted(q, gate, -half_pi, features, angles)?;
        let ep = noisy_expectation(&plus, counts[q], noise, rng)?;
        let em = noisy_expectation(&minus, counts[q], noise, rng)?;
        grad[q] += (ep - em) / two;
    }
    Ok(grad)
}

/// `sum_q upstream[q] * d<Z_q>/d(theta)` for all angles, by either route.
pub fn circuit_vjp<T: Scalar>(
    spec: &CircuitSpec,
    features: &[T],
    angles: &[T],
    upstream: &[T],
    mode: GradientMode,
) -> Result<(Vec<T>, Vec<T>)> {
    match mode {
        GradientMode::Analytic => spec.vjp_analytic(features, angles, upstream),
        GradientMode::Shift => {
            if upstream.len() != spec.n_qubits() {
                return Err(Error::config("upstream length does not match qubit count"));
            }
            let out = spec.run(features, angles)?;
            let mut grad = vec![T::zero(); spec.n_angles()];
            for (p, g) in grad.iter_mut().enumerate() {
                // unused angles have zero derivative
                let Ok(col) = shift_gradient(spec, features, angles, p) else {
                    continue;
                };
                *g = col.iter().zip(upstream).map(|(&d, &w)| d * w).sum();
            }
            Ok((out, grad))
        }
    }
}
