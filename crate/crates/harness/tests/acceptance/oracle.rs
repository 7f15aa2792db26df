//! Independent reference computations: gate matrices written from their
//! definitions and a plain state-vector loop over each qubit's program.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use svqc_core::model::ModelSpec;
use svqc_core::quantum::{AngleSource, CircuitSpec, FeatureMap, Gate, GateKind, Replication};

type M2 = [[Complex64; 2]; 2];

fn matrix(kind: GateKind, a: f64) -> M2 {
    let c = Complex64::new((a / 2.0).cos(), 0.0);
    let s = (a / 2.0).sin();
    let z = Complex64::new(0.0, 0.0);
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    match kind {
        GateKind::H => [[h, h], [h, -h]],
        GateKind::Rx => [[c, Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), c]],
        GateKind::Ry => [[c, Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), c]],
        GateKind::Rz => [
            [Complex64::from_polar(1.0, -a / 2.0), z],
            [z, Complex64::from_polar(1.0, a / 2.0)],
        ],
    }
}

fn angle(gate: &Gate, x: &[f64], theta: &[f64], map: Option<&FeatureMap>) -> f64 {
    match gate.angle {
        AngleSource::None => 0.0,
        AngleSource::Constant(c) => c,
        AngleSource::Feature(j) => x[j],
        AngleSource::Param(p) => theta[p],
        AngleSource::Mapped(r) => {
            let m = map.expect("mapped angle without a feature map");
            m.offsets.get(r).copied().unwrap_or(0.0) + m.weights[r].iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }
    }
}

/// `<Z>` of every qubit.
pub fn run(spec: &CircuitSpec, x: &[f64], theta: &[f64]) -> Vec<f64> {
    (0..spec.n_qubits())
        .map(|q| {
            let mut v = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
            for g in spec.program(q) {
                let m = matrix(g.kind, angle(g, x, theta, spec.feature_map()));
                v = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            }
            v[0].norm_sqr() - v[1].norm_sqr()
        })
        .collect()
}

/// Circuits of every built-in SVQC preset.
pub fn preset_circuits() -> Vec<CircuitSpec> {
    svqc_harness::PRESETS
        .iter()
        .filter_map(|name| match svqc_harness::preset(name).unwrap().model {
            ModelSpec::Svqc { circuit, .. } => Some(circuit),
            ModelSpec::Fcn { .. } => None,
        })
        .collect()
}

/// A random circuit on at most eight features: standard layouts with either
/// replication, or free-form programs mixing every angle source.
pub fn random_circuit(rng: &mut ChaCha8Rng) -> CircuitSpec {
    let d = rng.random_range(1..=8);
    match rng.random_range(0..4) {
        0 => CircuitSpec::standard(d, Replication::default()).unwrap(),
        1 => CircuitSpec::standard(d, Replication::Temporal { repeats: rng.random_range(1..4) }).unwrap(),
        2 => CircuitSpec::standard(d, Replication::Spatial { copies: rng.random_range(1..4) }).unwrap(),
        _ => {
            let n_params = rng.random_range(1..=4);
            let rows = rng.random_range(1..=3);
            let map = FeatureMap {
                weights: (0..rows)
                    .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect(),
                offsets: (0..rows).map(|_| rng.random_range(-0.5..0.5)).collect(),
            };
            let n_qubits = rng.random_range(1..=4);
            let mut qubits: Vec<Vec<Gate>> = (0..n_qubits)
                .map(|_| {
                    let mut prog = vec![];
                    if rng.random_bool(0.7) {
                        prog.push(Gate::H);
                    }
                    for _ in 0..rng.random_range(1..6) {
                        let kind = [GateKind::Rx, GateKind::Ry, GateKind::Rz][rng.random_range(0..3)];
                        let source = match rng.random_range(0..4) {
                            0 => AngleSource::Feature(rng.random_range(0..d)),
                            1 => AngleSource::Mapped(rng.random_range(0..rows)),
                            2 => AngleSource::Constant(rng.random_range(-3.0..3.0)),
                            _ => AngleSource::Param(rng.random_range(0..n_params)),
                        };
                        prog.push(Gate::rotation(kind, source).unwrap());
                    }
                    prog
                })
                .collect();
            for p in 0..n_params {
                let q = rng.random_range(0..n_qubits);
                let kind = [GateKind::Rx, GateKind::Ry][rng.random_range(0..2)];
                qubits[q].push(Gate::rotation(kind, AngleSource::Param(p)).unwrap());
            }
            let rep = if rng.random_bool(0.5) {
                Replication::Temporal { repeats: rng.random_range(1..3) }
            } else {
                Replication::Spatial { copies: rng.random_range(1..3) }
            };
            CircuitSpec::new(d, n_params, qubits, rep, Some(map)).unwrap()
        }
    }
}

pub fn random_inputs(spec: &CircuitSpec, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let x = (0..spec.n_features()).map(|_| rng.random_range(-2.0..2.0)).collect();
    let theta = (0..spec.n_angles())
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    (x, theta)
}
