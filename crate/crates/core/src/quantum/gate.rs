use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 2x2 complex matrix, row-major.
pub type Mat2<T> = [[Complex<T>; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    Rx,
    Ry,
    Rz,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        !matches!(self, GateKind::H)
    }

    fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::Rx => "Rx",
            GateKind::Ry => "Ry",
            GateKind::Rz => "Rz",
        }
    }
}

/// Where a rotation gate takes its angle from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleSource {
    /// The gate carries no angle (Hadamard).
    None,
    Constant(f64),
    /// Raw feature `x_j`, used verbatim as the angle.
    Feature(usize),
    /// Row `r` of the circuit's affine feature map.
    Mapped(usize),
    /// Trainable angle `theta_p`.
    Param(usize),
}

/// A gate together with the source of its angle.
///
/// The text form is `H`, `Ry(x3)` (feature 3), `Rz(m1)` (feature-map row 1),
/// `Ry(p0)` (trainable angle 0) or `Rx(0.25)` (constant).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Gate {
    pub kind: GateKind,
    pub angle: AngleSource,
}

impl Gate {
    pub const H: Gate = Gate {
        kind: GateKind::H,
        angle: AngleSource::None,
    };

    pub fn rotation(kind: GateKind, angle: AngleSource) -> Result<Gate> {
        if !kind.is_rotation() || matches!(angle, AngleSource::None) {
            return Err(Error::config(format!("{kind:?} cannot take angle {angle:?}")));
        }
        Ok(Gate { kind, angle })
    }

    pub fn rx(angle: AngleSource) -> Gate {
        Gate { kind: GateKind::Rx, angle }
    }

    pub fn ry(angle: AngleSource) -> Gate {
        Gate { kind: GateKind::Ry, angle }
    }

    pub fn rz(angle: AngleSource) -> Gate {
        Gate { kind: GateKind::Rz, angle }
    }

    pub fn param(&self) -> Option<usize> {
        match self.angle {
            AngleSource::Param(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        match self.angle {
            AngleSource::None => Ok(()),
            AngleSource::Constant(c) => write!(f, "({c:?})"),
            AngleSource::Feature(j) => write!(f, "(x{j})"),
            AngleSource::Mapped(r) => write!(f, "(m{r})"),
            AngleSource::Param(p) => write!(f, "(p{p})"),
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Gate> {
        let s = s.trim();
        let bad = || Error::Parse(format!("malformed gate `{s}`"));
        if s == "H" {
            return Ok(Gate::H);
        }
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open..]
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?
            .trim();
        let kind = match &s[..open] {
            "Rx" => GateKind::Rx,
            "Ry" => GateKind::Ry,
            "Rz" => GateKind::Rz,
            _ => return Err(bad()),
        };
        let index = |rest: &str| rest.parse::<usize>().map_err(|_| bad());
        let angle = if let Some(rest) = inner.strip_prefix('x') {
            AngleSource::Feature(index(rest)?)
        } else if let Some(rest) = inner.strip_prefix('m') {
            AngleSource::Mapped(index(rest)?)
        } else if let Some(rest) = inner.strip_prefix('p') {
            AngleSource::Param(index(rest)?)
        } else {
            let c: f64 = inner.parse().map_err(|_| bad())?;
            if !c.is_finite() {
                return Err(Error::invalid(format!("non-finite constant angle in `{s}`")));
            }
            AngleSource::Constant(c)
        };
        Gate::rotation(kind, angle)
    }
}

impl TryFrom<String> for Gate {
    type Error = Error;

    fn try_from(s: String) -> Result<Gate> {
        s.parse()
    }
}

impl From<Gate> for String {
    fn from(g: Gate) -> String {
        g.to_string()
    }
}

/// Unitary of `kind` at `angle`, with `R_a(phi) = exp(-i phi sigma_a / 2)`.
pub fn gate_matrix<T: Scalar>(kind: GateKind, angle: T) -> Mat2<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let two = T::of(2.0);
    match kind {
        GateKind::H => {
            let r = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
            [[r, r], [r, -r]]
        }
        GateKind::Rx => {
            let (s, c) = (angle / two).sin_cos();
            let c = Complex::new(c, T::zero());
            let mis = Complex::new(T::zero(), -s);
            [[c, mis], [mis, c]]
        }
        GateKind::Ry => {
            let (s, c) = (angle / two).sin_cos();
            [
                [Complex::new(c, T::zero()), Complex::new(-s, T::zero())],
                [Complex::new(s, T::zero()), Complex::new(c, T::zero())],
            ]
        }
        GateKind::Rz => {
            let (s, c) = (angle / two).sin_cos();
            [[Complex::new(c, -s), zero], [zero, Complex::new(c, s)]]
        }
    }
}

/// Pauli generator of a rotation gate.
pub(crate) fn pauli<T: Scalar>(kind: GateKind) -> Mat2<T> {
    let o = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    match kind {
        GateKind::Rx => [[o, one], [one, o]],
        GateKind::Ry => [[o, -i], [i, o]],
        GateKind::Rz => [[one, o], [o, -one]],
        GateKind::H => panic!("Hadamard has no rotation generator"),
    }
}

pub(crate) fn adjoint<T: Scalar>(m: &Mat2<T>) -> Mat2<T> {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}
