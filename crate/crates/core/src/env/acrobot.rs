use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvSpec, Environment, Episode, Step};
use crate::error::{Error, Result};

const DT: f64 = 0.2;
const M1: f64 = 1.0;
const M2: f64 = 1.0;
const L1: f64 = 1.0;
const LC1: f64 = 0.5;
const LC2: f64 = 0.5;
const MOI: f64 = 1.0;
const G: f64 = 9.8;
const MAX_VEL_1: f64 = 4.0 * PI;
const MAX_VEL_2: f64 = 9.0 * PI;
const TORQUES: [f64; 3] = [-1.0, 0.0, 1.0];

/// Two-link underactuated pendulum, torque on the second joint, integrated
/// with one fourth-order Runge-Kutta step per action.
///
/// Internal state is `(theta1, theta2, omega1, omega2)`; the observation is
/// `(cos theta1, sin theta1, cos theta2, sin theta2, omega1, omega2)`.
/// Each non-terminal step pays -1, reaching the goal height pays 0.
#[derive(Clone, Debug)]
pub struct Acrobot {
    spec: EnvSpec,
    state: [f64; 4],
    episode: Episode,
}

impl Default for Acrobot {
    fn default() -> Self {
        Acrobot::new()
    }
}

/// `[theta1, theta2, omega1, omega2, torque]`
type Augmented = [f64; 5];

fn derivatives(s: &Augmented) -> Augmented {
    let [theta1, theta2, dtheta1, dtheta2, a] = *s;
    let d1 = M1 * LC1.powi(2) + M2 * (L1.powi(2) + LC2.powi(2) + 2.0 * L1 * LC2 * theta2.cos()) + MOI + MOI;
    let d2 = M2 * (LC2.powi(2) + L1 * LC2 * theta2.cos()) + MOI;
    let phi2 = M2 * LC2 * G * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -M2 * L1 * LC2 * dtheta2.powi(2) * theta2.sin()
        - 2.0 * M2 * L1 * LC2 * dtheta2 * dtheta1 * theta2.sin()
        + (M1 * LC1 + M2 * L1) * G * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (a + d2 / d1 * phi1 - M2 * L1 * LC2 * dtheta1.powi(2) * theta2.sin() - phi2)
        / (M2 * LC2.powi(2) + MOI - d2.powi(2) / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0]
}

fn axpy(y: &Augmented, h: f64, k: &Augmented) -> Augmented {
    std::array::from_fn(|i| y[i] + h * k[i])
}

fn rk4(y0: &Augmented, dt: f64) -> Augmented {
    let dt2 = dt / 2.0;
    let k1 = derivatives(y0);
    let k2 = derivatives(&axpy(y0, dt2, &k1));
    let k3 = derivatives(&axpy(y0, dt2, &k2));
    let k4 = derivatives(&axpy(y0, dt, &k3));
    std::array::from_fn(|i| y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn wrap(mut x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    while x > hi {
        x -= span;
    }
    while x < lo {
        x += span;
    }
    x
}

impl Acrobot {
    pub fn new() -> Self {
        Acrobot {
            spec: EnvSpec::acrobot_v1(),
            state: [0.0; 4],
            episode: Episode::default(),
        }
    }

    fn observation(&self) -> Vec<f64> {
        let [t1, t2, w1, w2] = self.state;
        vec![t1.cos(), t1.sin(), t2.cos(), t2.sin(), w1, w2]
    }

    fn terminal(&self) -> bool {
        let [t1, t2, _, _] = self.state;
        -t1.cos() - (t2 + t1).cos() > 1.0
    }
}

impl Environment for Acrobot {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut self.state {
            *s = rng.random_range(-0.1..0.1);
        }
        self.episode.begin();
        Ok(self.observation())
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        self.episode.check(action, 3)?;
        let [t1, t2, w1, w2] = self.state;
        let ns = rk4(&[t1, t2, w1, w2, TORQUES[action]], DT);
        self.state = [
            wrap(ns[0], -PI, PI),
            wrap(ns[1], -PI, PI),
            ns[2].clamp(-MAX_VEL_1, MAX_VEL_1),
            ns[3].clamp(-MAX_VEL_2, MAX_VEL_2),
        ];
        if self.state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Environment("acrobot state became non-finite".into()));
        }
        let terminated = self.terminal();
        let truncated = self.episode.advance(terminated, self.spec.max_steps);
        Ok(Step {
            obs: self.observation(),
            reward: if terminated { 0.0 } else { -1.0 },
            terminated,
            truncated,
        })
    }

    fn inject_state(&mut self, raw: &[f64]) -> Result<Vec<f64>> {
        let state: [f64; 4] = raw
            .try_into()
            .map_err(|_| Error::invalid(format!("acrobot state has 4 components, got {}", raw.len())))?;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("acrobot state must be finite"));
        }
        self.state = state;
        if !self.episode.started {
            self.episode.begin();
        }
        self.episode.done = false;
        Ok(self.observation())
    }

    fn raw_state(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}
