use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvSpec, Environment, Episode, Step};
use crate::error::{Error, Result};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * HALF_LENGTH;
const FORCE: f64 = 10.0;
const TAU: f64 = 0.02;
const X_LIMIT: f64 = 2.4;
const THETA_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;

/// Cart-pole balancing with explicit Euler integration.
///
/// State and observation are `(x, x_dot, theta, theta_dot)`. Action 0
/// pushes left, action 1 pushes right; every step pays +1.
#[derive(Clone, Debug)]
pub struct CartPole {
    spec: EnvSpec,
    state: [f64; 4],
    episode: Episode,
}

impl CartPole {
    pub fn v0() -> Self {
        CartPole::with_spec(EnvSpec::cartpole_v0())
    }

    pub fn v1() -> Self {
        CartPole::with_spec(EnvSpec::cartpole_v1())
    }

    fn with_spec(spec: EnvSpec) -> Self {
        CartPole {
            spec,
            state: [0.0; 4],
            episode: Episode::default(),
        }
    }

    fn terminal(&self) -> bool {
        let [x, _, theta, _] = self.state;
        !(-X_LIMIT..=X_LIMIT).contains(&x) || !(-THETA_LIMIT..=THETA_LIMIT).contains(&theta)
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut self.state {
            *s = rng.random_range(-0.05..0.05);
        }
        self.episode.begin();
        Ok(self.state.to_vec())
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        self.episode.check(action, 2)?;
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { FORCE } else { -FORCE };
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc =
            (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        let terminated = self.terminal();
        let truncated = self.episode.advance(terminated, self.spec.max_steps);
        Ok(Step {
            obs: self.state.to_vec(),
            reward: 1.0,
            terminated,
            truncated,
        })
    }

    fn inject_state(&mut self, raw: &[f64]) -> Result<Vec<f64>> {
        let state: [f64; 4] = raw
            .try_into()
            .map_err(|_| Error::invalid(format!("cart-pole state has 4 components, got {}", raw.len())))?;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cart-pole state must be finite"));
        }
        self.state = state;
        if !self.episode.started {
            self.episode.begin();
        }
        self.episode.done = false;
        Ok(self.state.to_vec())
    }

    fn raw_state(&self) -> Vec<f64> {
        self.state.to_vec()
    }
}
