use num_complex::Complex;

use super::gate::{gate_matrix, GateKind, Mat2};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pure state of one qubit, `amp0 |0> + amp1 |1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState<T> {
    pub amp0: Complex<T>,
    pub amp1: Complex<T>,
}

impl<T: Scalar> QubitState<T> {
    pub fn zero() -> Self {
        QubitState {
            amp0: Complex::new(T::one(), T::zero()),
            amp1: Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn one() -> Self {
        QubitState {
            amp0: Complex::new(T::zero(), T::zero()),
            amp1: Complex::new(T::one(), T::zero()),
        }
    }

    /// Builds a state from raw amplitudes, rejecting anything not normalized
    /// to within `1e-9`.
    pub fn new(amp0: Complex<T>, amp1: Complex<T>) -> Result<Self> {
        let s = QubitState { amp0, amp1 };
        let dev = (s.norm_sqr() - T::one()).abs().to_f64_lossy();
        if !(dev < 1e-9) {
            return Err(Error::invalid(format!("state not normalized (|norm^2 - 1| = {dev:e})")));
        }
        Ok(s)
    }

    pub fn norm_sqr(&self) -> T {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    /// Probability of reading `1` in the computational basis.
    pub fn prob_one(&self) -> T {
        self.amp1.norm_sqr()
    }

    pub fn expectation_z(&self) -> T {
        self.amp0.norm_sqr() - self.amp1.norm_sqr()
    }

    pub(crate) fn apply_matrix(&self, m: &Mat2<T>) -> Self {
        QubitState {
            amp0: m[0][0] * self.amp0 + m[0][1] * self.amp1,
            amp1: m[1][0] * self.amp0 + m[1][1] * self.amp1,
        }
    }

    /// `<self| other>`
    pub(crate) fn inner(&self, other: &Self) -> Complex<T> {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    pub fn apply(&self, kind: GateKind, angle: T) -> Result<Self> {
        apply_gate(self, kind, angle)
    }
}

/// Applies `kind` at `angle` (ignored for H). Non-finite angles are rejected.
pub fn apply_gate<T: Scalar>(state: &QubitState<T>, kind: GateKind, angle: T) -> Result<QubitState<T>> {
    if kind.is_rotation() && !angle.is_finite() {
        return Err(Error::invalid(format!("non-finite angle {angle} for {kind:?}")));
    }
    Ok(state.apply_matrix(&gate_matrix(kind, angle)))
}

/// Pauli-Z expectation `|amp0|^2 - |amp1|^2`.
pub fn expectation_z<T: Scalar>(state: &QubitState<T>) -> T {
    state.expectation_z()
}
