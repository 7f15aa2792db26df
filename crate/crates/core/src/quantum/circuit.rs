use serde::{Deserialize, Serialize};

use super::gate::{adjoint, gate_matrix, pauli, AngleSource, Gate, GateKind};
use super::state::QubitState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How the base per-qubit programs are re-uploaded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Replication {
    /// Each base program is repeated `repeats` times in depth on its own qubit.
    Temporal { repeats: usize },
    /// The whole register is copied `copies` times side by side.
    Spatial { copies: usize },
}

impl Replication {
    pub fn factor(self) -> usize {
        match self {
            Replication::Temporal { repeats } => repeats,
            Replication::Spatial { copies } => copies,
        }
    }
}

impl Default for Replication {
    fn default() -> Self {
        Replication::Spatial { copies: 1 }
    }
}

/// Affine map from the feature vector to encoding angles:
/// `angle_r = offsets[r] + sum_j weights[r][j] * x_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub offsets: Vec<f64>,
}

impl FeatureMap {
    fn angle<T: Scalar>(&self, row: usize, features: &[T]) -> T {
        let offset = self.offsets.get(row).copied().unwrap_or(0.0);
        self.weights[row]
            .iter()
            .zip(features)
            .fold(T::of(offset), |acc, (&w, &x)| acc + T::of(w) * x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct QubitDoc {
    gates: Vec<Gate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CircuitDoc {
    n_features: usize,
    n_params: usize,
    #[serde(default)]
    replication: Replication,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_map: Option<FeatureMap>,
    qubits: Vec<QubitDoc>,
}

/// Product-state circuit: one independent gate program per qubit, no
/// entangling gates.
///
/// Trainable angles are laid out replica-major: replica `k` of base angle
/// `p` is angle `k * n_params + p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitDoc", into = "CircuitDoc")]
pub struct CircuitSpec {
    n_features: usize,
    n_params: usize,
    qubits: Vec<Vec<Gate>>,
    replication: Replication,
    feature_map: Option<FeatureMap>,
    physical: Vec<Vec<Gate>>,
}

impl CircuitSpec {
    pub fn new(
        n_features: usize,
        n_params: usize,
        qubits: Vec<Vec<Gate>>,
        replication: Replication,
        feature_map: Option<FeatureMap>,
    ) -> Result<Self> {
        let mut spec = CircuitSpec {
            n_features,
            n_params,
            qubits,
            replication,
            feature_map,
            physical: Vec::new(),
        };
        spec.validate()?;
        spec.physical = spec.expand();
        Ok(spec)
    }

    /// `|0>-H-Ry(x_q)-Rz(x_q)-Ry(theta_q)` on each of `d` qubits.
    pub fn standard(d: usize, replication: Replication) -> Result<Self> {
        let qubits = (0..d)
            .map(|q| {
                vec![
                    Gate::H,
                    Gate::ry(AngleSource::Feature(q)),
                    Gate::rz(AngleSource::Feature(q)),
                    Gate::ry(AngleSource::Param(q)),
                ]
            })
            .collect();
        CircuitSpec::new(d, d, qubits, replication, None)
    }

    /// The standard circuit with qubit `q` encoding `scales[q] * x_q`.
    pub fn scaled(scales: &[f64], replication: Replication) -> Result<Self> {
        let d = scales.len();
        let weights = (0..d)
            .map(|r| (0..d).map(|j| if r == j { scales[r] } else { 0.0 }).collect())
            .collect();
        let qubits = (0..d)
            .map(|q| {
                vec![
                    Gate::H,
                    Gate::ry(AngleSource::Mapped(q)),
                    Gate::rz(AngleSource::Mapped(q)),
                    Gate::ry(AngleSource::Param(q)),
                ]
            })
            .collect();
        let map = FeatureMap {
            weights,
            offsets: Vec::new(),
        };
        CircuitSpec::new(d, d, qubits, replication, Some(map))
    }

    fn validate(&self) -> Result<()> {
        if self.replication.factor() == 0 {
            return Err(Error::config("replication count must be at least 1"));
        }
        if self.qubits.is_empty() {
            return Err(Error::config("circuit has no qubits"));
        }
        if let Some(map) = &self.feature_map {
            if map.weights.iter().any(|row| row.len() != self.n_features) {
                return Err(Error::config(format!(
                    "feature map rows must have {} columns",
                    self.n_features
                )));
            }
            if !map.offsets.is_empty() && map.offsets.len() != map.weights.len() {
                return Err(Error::config("feature map offsets and rows differ in length"));
            }
        }
        for (q, program) in self.qubits.iter().enumerate() {
            for gate in program {
                match (gate.kind, gate.angle) {
                    (GateKind::H, AngleSource::None) => {}
                    (GateKind::H, _) | (_, AngleSource::None) => {
                        return Err(Error::config(format!("qubit {q}: malformed gate {gate:?}")))
                    }
                    (_, AngleSource::Constant(c)) if !c.is_finite() => {
                        return Err(Error::invalid(format!("qubit {q}: non-finite constant angle")))
                    }
                    (_, AngleSource::Feature(j)) if j >= self.n_features => {
                        return Err(Error::config(format!(
                            "qubit {q}: feature index {j} out of range (d = {})",
                            self.n_features
                        )))
                    }
                    (_, AngleSource::Mapped(r)) => {
                        let rows = self.feature_map.as_ref().map_or(0, |m| m.weights.len());
                        if r >= rows {
                            return Err(Error::config(format!(
                                "qubit {q}: feature-map row {r} out of range ({rows} rows)"
                            )));
                        }
                    }
                    (_, AngleSource::Param(p)) if p >= self.n_params => {
                        return Err(Error::config(format!(
                            "qubit {q}: parameter index {p} out of range ({} params)",
                            self.n_params
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn expand(&self) -> Vec<Vec<Gate>> {
        let shift = |gate: &Gate, k: usize| match gate.angle {
            AngleSource::Param(p) => Gate {
                kind: gate.kind,
                angle: AngleSource::Param(k * self.n_params + p),
            },
            _ => *gate,
        };
        match self.replication {
            Replication::Temporal { repeats } => self
                .qubits
                .iter()
                .map(|prog| (0..repeats).flat_map(|k| prog.iter().map(move |g| shift(g, k))).collect())
                .collect(),
            Replication::Spatial { copies } => (0..copies)
                .flat_map(|k| self.qubits.iter().map(move |prog| prog.iter().map(|g| shift(g, k)).collect()))
                .collect(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Trainable angles per replica.
    pub fn n_base_params(&self) -> usize {
        self.n_params
    }

    /// Total trainable angles after replication.
    pub fn n_angles(&self) -> usize {
        self.n_params * self.replication.factor()
    }

    /// Physical qubit count, which is also the number of circuit outputs.
    pub fn n_qubits(&self) -> usize {
        self.physical.len()
    }

    pub fn replication(&self) -> Replication {
        self.replication
    }

    pub fn base_programs(&self) -> &[Vec<Gate>] {
        &self.qubits
    }

    pub fn feature_map(&self) -> Option<&FeatureMap> {
        self.feature_map.as_ref()
    }

    /// Gate program of physical qubit `q`, with replica-resolved angle indices.
    pub fn program(&self, q: usize) -> &[Gate] {
        &self.physical[q]
    }

    pub fn gate_counts(&self) -> Vec<usize> {
        self.physical.iter().map(Vec::len).collect()
    }

    fn check_inputs<T>(&self, features: &[T], angles: &[T]) -> Result<()> {
        if features.len() != self.n_features {
            return Err(Error::config(format!(
                "expected {} features, got {}",
                self.n_features,
                features.len()
            )));
        }
        if angles.len() != self.n_angles() {
            return Err(Error::config(format!(
                "expected {} trainable angles, got {}",
                self.n_angles(),
                angles.len()
            )));
        }
        Ok(())
    }

    fn resolve<T: Scalar>(&self, gate: &Gate, features: &[T], angles: &[T]) -> T {
        match gate.angle {
            AngleSource::None => T::zero(),
            AngleSource::Constant(c) => T::of(c),
            AngleSource::Feature(j) => features[j],
            AngleSource::Mapped(r) => self
                .feature_map
                .as_ref()
                .expect("validated feature map")
                .angle(r, features),
            AngleSource::Param(p) => angles[p],
        }
    }

    /// Runs qubit `q`; `shift = Some((gate_index, delta))` adds `delta` to that gate's angle.
    fn run_qubit<T: Scalar>(
        &self,
        q: usize,
        features: &[T],
        angles: &[T],
        shift: Option<(usize, T)>,
    ) -> Result<QubitState<T>> {
        let mut state = QubitState::zero();
        for (i, gate) in self.physical[q].iter().enumerate() {
            let mut angle = self.resolve(gate, features, angles);
            if let Some((at, delta)) = shift {
                if at == i {
                    angle += delta;
                }
            }
            state = state.apply(gate.kind, angle)?;
        }
        Ok(state)
    }

    /// Final state of every physical qubit.
    pub fn states<T: Scalar>(&self, features: &[T], angles: &[T]) -> Result<Vec<QubitState<T>>> {
        self.check_inputs(features, angles)?;
        (0..self.n_qubits())
            .map(|q| self.run_qubit(q, features, angles, None))
            .collect()
    }

    /// Per-qubit `<Z>`, exact.
    pub fn run<T: Scalar>(&self, features: &[T], angles: &[T]) -> Result<Vec<T>> {
        Ok(self
            .states(features, angles)?
            .iter()
            .map(QubitState::expectation_z)
            .collect())
    }

    /// `<Z>` of qubit `q` with gate `gate_index` shifted by `delta`.
    pub(crate) fn run_shifted<T: Scalar>(
        &self,
        q: usize,
        gate_index: usize,
        delta: T,
        features: &[T],
        angles: &[T],
    ) -> Result<QubitState<T>> {
        self.run_qubit(q, features, angles, Some((gate_index, delta)))
    }

    /// Exact `<Z>` of every qubit plus the vector-Jacobian product
    /// `sum_q upstream[q] * d<Z_q>/d(theta)` by adjoint differentiation.
    pub fn vjp_analytic<T: Scalar>(
        &self,
        features: &[T],
        angles: &[T],
        upstream: &[T],
    ) -> Result<(Vec<T>, Vec<T>)> {
        self.check_inputs(features, angles)?;
        if upstream.len() != self.n_qubits() {
            return Err(Error::config(format!(
                "upstream has {} entries, circuit has {} outputs",
                upstream.len(),
                self.n_qubits()
            )));
        }
        let mut grad = vec![T::zero(); self.n_angles()];
        let mut out = Vec::with_capacity(self.n_qubits());
        for (q, &w) in upstream.iter().enumerate() {
            out.push(self.adjoint_qubit(q, features, angles, |p, d| grad[p] += w * d)?);
        }
        Ok((out, grad))
    }

    /// Dense Jacobian `d<Z_q>/d(theta_p)` (rows are qubits), plus outputs.
    pub fn jacobian_analytic<T: Scalar>(&self, features: &[T], angles: &[T]) -> Result<(Vec<T>, Vec<Vec<T>>)> {
        self.check_inputs(features, angles)?;
        let mut out = Vec::with_capacity(self.n_qubits());
        let mut jac = vec![vec![T::zero(); self.n_angles()]; self.n_qubits()];
        for (q, row) in jac.iter_mut().enumerate() {
            out.push(self.adjoint_qubit(q, features, angles, |p, d| row[p] += d)?);
        }
        Ok((out, jac))
    }

    /// Forward pass of qubit `q`, then a reverse sweep that uncomputes the
    /// state and carries `lambda = U_{k+1}^dag ... U_m^dag Z psi_m`.
    /// For gate `k` at angle `phi`, `d<Z>/dphi = Im <lambda_k| sigma psi_k>`.
    fn adjoint_qubit<T: Scalar>(
        &self,
        q: usize,
        features: &[T],
        angles: &[T],
        mut emit: impl FnMut(usize, T),
    ) -> Result<T> {
        let program = &self.physical[q];
        let mut mats = Vec::with_capacity(program.len());
        let mut psi = QubitState::zero();
        for gate in program {
            let angle = self.resolve(gate, features, angles);
            if gate.kind.is_rotation() && !angle.is_finite() {
                return Err(Error::invalid(format!("non-finite angle on qubit {q}")));
            }
            let m = gate_matrix(gate.kind, angle);
            psi = psi.apply_matrix(&m);
            mats.push(m);
        }
        let value = psi.expectation_z();
        let mut lambda = QubitState {
            amp0: psi.amp0,
            amp1: -psi.amp1,
        };
        for (gate, m) in program.iter().zip(&mats).rev() {
            if let Some(p) = gate.param() {
                let sigma_psi = psi.apply_matrix(&pauli(gate.kind));
                emit(p, lambda.inner(&sigma_psi).im);
            }
            let m_dag = adjoint(m);
            psi = psi.apply_matrix(&m_dag);
            lambda = lambda.apply_matrix(&m_dag);
        }
        Ok(value)
    }
}

impl TryFrom<CircuitDoc> for CircuitSpec {
    type Error = Error;

    fn try_from(doc: CircuitDoc) -> Result<Self> {
        CircuitSpec::new(
            doc.n_features,
            doc.n_params,
            doc.qubits.into_iter().map(|q| q.gates).collect(),
            doc.replication,
            doc.feature_map,
        )
    }
}

impl From<CircuitSpec> for CircuitDoc {
    fn from(spec: CircuitSpec) -> Self {
        CircuitDoc {
            n_features: spec.n_features,
            n_params: spec.n_params,
            replication: spec.replication,
            feature_map: spec.feature_map,
            qubits: spec.qubits.into_iter().map(|gates| QubitDoc { gates }).collect(),
        }
    }
}

impl CircuitSpec {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Per-qubit `<Z>` of `spec` at the given features and trainable angles.
pub fn run_circuit<T: Scalar>(spec: &CircuitSpec, features: &[T], angles: &[T]) -> Result<Vec<T>> {
    spec.run(features, angles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_circuit_matches_standard_on_scaled_features() {
        let scales = [1.0, 0.25, -2.0];
        let scaled = CircuitSpec::scaled(&scales, Replication::default()).unwrap();
        let plain = CircuitSpec::standard(3, Replication::default()).unwrap();
        let x = [0.3, -5.0, 1.1];
        let theta = [0.2, -0.4, 2.5];
        let sx: Vec<f64> = x.iter().zip(&scales).map(|(a, b)| a * b).collect();
        let a = scaled.run(&x, &theta).unwrap();
        let b = plain.run(&sx, &theta).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-15);
        }
        assert_eq!(scaled.n_angles(), 3);
    }
}
