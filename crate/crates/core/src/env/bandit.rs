use super::{EnvSpec, Environment, Episode, Step};
use crate::error::{Error, Result};

/// Two-armed bandit with one-step episodes: arm 1 pays 1, arm 0 pays 0.
/// The observation is the constant `[0]`.
#[derive(Clone, Debug)]
pub struct Bandit {
    spec: EnvSpec,
    episode: Episode,
}

impl Default for Bandit {
    fn default() -> Self {
        Bandit::new()
    }
}

impl Bandit {
    pub const BEST_ARM: usize = 1;

    pub fn new() -> Self {
        Bandit {
            spec: EnvSpec::bandit(),
            episode: Episode::default(),
        }
    }
}

impl Environment for Bandit {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Result<Vec<f64>> {
        self.episode.begin();
        Ok(vec![0.0])
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        self.episode.check(action, 2)?;
        self.episode.advance(true, 1);
        Ok(Step {
            obs: vec![0.0],
            reward: if action == Bandit::BEST_ARM { 1.0 } else { 0.0 },
            terminated: true,
            truncated: false,
        })
    }

    fn inject_state(&mut self, raw: &[f64]) -> Result<Vec<f64>> {
        if !raw.is_empty() {
            return Err(Error::invalid("bandit has no internal state"));
        }
        Ok(vec![0.0])
    }

    fn raw_state(&self) -> Vec<f64> {
        Vec::new()
    }
}
