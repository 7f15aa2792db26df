//! Control environments behind one interface: native CartPole and Acrobot,
//! a one-step bandit for sanity checks, and a client for external
//! environments served over a line protocol.

mod acrobot;
mod bandit;
pub mod bridge;
mod cartpole;

use serde::{Deserialize, Serialize};

pub use acrobot::Acrobot;
pub use bandit::Bandit;
pub use bridge::{remote_id, BridgeClient, BridgeEnv, Request, Response};
pub use cartpole::CartPole;

use crate::error::{Error, Result};

/// Static description of an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub id: String,
    pub obs_dim: usize,
    pub n_actions: usize,
    pub max_steps: usize,
    /// Mean reward over `solve_window` episodes that counts as solved.
    pub solve_threshold: Option<f64>,
    pub solve_window: usize,
}

impl EnvSpec {
    pub fn cartpole_v0() -> Self {
        EnvSpec {
            id: "cartpole-v0".into(),
            obs_dim: 4,
            n_actions: 2,
            max_steps: 200,
            solve_threshold: Some(195.0),
            solve_window: 100,
        }
    }

    pub fn cartpole_v1() -> Self {
        EnvSpec {
            id: "cartpole-v1".into(),
            obs_dim: 4,
            n_actions: 2,
            max_steps: 500,
            solve_threshold: Some(475.0),
            solve_window: 100,
        }
    }

    /// No official solve condition exists; trailing-20 mean of -100 is used.
    pub fn acrobot_v1() -> Self {
        EnvSpec {
            id: "acrobot-v1".into(),
            obs_dim: 6,
            n_actions: 3,
            max_steps: 500,
            solve_threshold: Some(-100.0),
            solve_window: 20,
        }
    }

    pub fn lunarlander_v2() -> Self {
        EnvSpec {
            id: "bridge:LunarLander-v2".into(),
            obs_dim: 8,
            n_actions: 4,
            max_steps: 1000,
            solve_threshold: Some(200.0),
            solve_window: 100,
        }
    }

    pub fn bandit() -> Self {
        EnvSpec {
            id: "bandit".into(),
            obs_dim: 1,
            n_actions: 2,
            max_steps: 1,
            solve_threshold: Some(0.95),
            solve_window: 20,
        }
    }

    /// Spec of a built-in environment id.
    pub fn builtin(id: &str) -> Result<Self> {
        match id {
            "cartpole-v0" => Ok(EnvSpec::cartpole_v0()),
            "cartpole-v1" => Ok(EnvSpec::cartpole_v1()),
            "acrobot-v1" => Ok(EnvSpec::acrobot_v1()),
            "bandit" => Ok(EnvSpec::bandit()),
            "bridge:LunarLander-v2" => Ok(EnvSpec::lunarlander_v2()),
            other => Err(Error::config(format!("unknown environment id `{other}`"))),
        }
    }

    /// Threshold reached, for curves where `window` trailing means are known.
    pub fn is_solved(&self, rewards: &[f64]) -> bool {
        is_solved(rewards, self.solve_window, self.solve_threshold)
    }
}

/// True iff some complete `window`-episode mean is `>= threshold`.
pub fn is_solved(rewards: &[f64], window: usize, threshold: Option<f64>) -> bool {
    first_solved(rewards, window, threshold).is_some()
}

/// Index of the last episode of the first complete window whose mean meets
/// the threshold.
pub fn first_solved(rewards: &[f64], window: usize, threshold: Option<f64>) -> Option<usize> {
    let threshold = threshold?;
    if window == 0 || rewards.len() < window {
        return None;
    }
    let mut sum: f64 = rewards[..window].iter().sum();
    if sum / window as f64 >= threshold {
        return Some(window - 1);
    }
    for i in window..rewards.len() {
        sum += rewards[i] - rewards[i - window];
        if sum / window as f64 >= threshold {
            return Some(i);
        }
    }
    None
}

/// Mean of the last `window` entries (fewer at the start).
pub fn trailing_mean(rewards: &[f64], window: usize) -> f64 {
    let start = rewards.len().saturating_sub(window.max(1));
    let tail = &rewards[start..];
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// Reached a terminal state of the task.
    pub terminated: bool,
    /// Cut by the step limit.
    pub truncated: bool,
}

impl Step {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;

    fn step(&mut self, action: usize) -> Result<Step>;

    /// Overwrite the internal physical state and return the matching
    /// observation. The step counter is left alone.
    fn inject_state(&mut self, raw: &[f64]) -> Result<Vec<f64>>;

    /// Internal physical state, as accepted by `inject_state`.
    fn raw_state(&self) -> Vec<f64>;
}

/// Native environment for a built-in id.
pub fn make_env(id: &str) -> Result<Box<dyn Environment>> {
    match id {
        "cartpole-v0" => Ok(Box::new(CartPole::v0())),
        "cartpole-v1" => Ok(Box::new(CartPole::v1())),
        "acrobot-v1" => Ok(Box::new(Acrobot::new())),
        "bandit" => Ok(Box::new(Bandit::new())),
        other if other.starts_with("bridge:") => Err(Error::config(format!(
            "`{other}` needs a bridge command; use BridgeEnv::launch"
        ))),
        other => Err(Error::config(format!("unknown environment id `{other}`"))),
    }
}

/// Episode bookkeeping shared by the native environments.
#[derive(Clone, Debug, Default)]
pub(crate) struct Episode {
    pub steps: usize,
    pub done: bool,
    pub started: bool,
}

impl Episode {
    pub fn begin(&mut self) {
        *self = Episode {
            steps: 0,
            done: false,
            started: true,
        };
    }

    pub fn check(&self, action: usize, n_actions: usize) -> Result<()> {
        if !self.started {
            return Err(Error::Usage("step called before reset".into()));
        }
        if self.done {
            return Err(Error::Usage("step called after episode end".into()));
        }
        if action >= n_actions {
            return Err(Error::invalid(format!("action {action} outside [0, {n_actions})")));
        }
        Ok(())
    }

    pub fn advance(&mut self, terminated: bool, max_steps: usize) -> bool {
        self.steps += 1;
        let truncated = !terminated && self.steps >= max_steps;
        self.done = terminated || truncated;
        truncated
    }
}
