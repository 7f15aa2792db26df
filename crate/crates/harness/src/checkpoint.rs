//! Versioned checkpoint documents. Every float is stored as the 16 hex
//! digits of its IEEE-754 bit pattern, so save, load and save again is
//! byte-identical and a resumed run continues bit for bit.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use svqc_core::agent::{Adam, FreezeState, TrainerState};
use svqc_core::model::Model;
use svqc_core::{Error, Result};

use crate::config::ExperimentConfig;

pub const FORMAT_VERSION: u32 = 1;

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    if s.len() != 16 {
        return Err(Error::Parse(format!("`{s}` is not a 16-digit float encoding")));
    }
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| Error::Parse(format!("`{s}` is not a hex float encoding")))
}

fn hex_vec(v: &[f64]) -> Vec<String> {
    v.iter().copied().map(hex).collect()
}

fn unhex_vec(v: &[String]) -> Result<Vec<f64>> {
    v.iter().map(|s| unhex(s)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerDoc {
    pub lr: String,
    pub t: u64,
    pub m: Vec<String>,
    pub v: Vec<String>,
}

impl OptimizerDoc {
    fn from_adam(a: &Adam<f64>) -> Self {
        OptimizerDoc {
            lr: hex(a.lr),
            t: a.t,
            m: hex_vec(&a.m),
            v: hex_vec(&a.v),
        }
    }

    fn to_adam(&self) -> Result<Adam<f64>> {
        Ok(Adam {
            lr: unhex(&self.lr)?,
            m: unhex_vec(&self.m)?,
            v: unhex_vec(&self.v)?,
            t: self.t,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngDoc {
    /// 32-byte key, hex.
    pub key: String,
    pub stream: String,
    pub word_pos: String,
}

impl RngDoc {
    fn from_rng(rng: &ChaCha8Rng) -> Self {
        RngDoc {
            key: rng.get_seed().iter().map(|b| format!("{b:02x}")).collect(),
            stream: format!("{:016x}", rng.get_stream()),
            word_pos: format!("{:032x}", rng.get_word_pos()),
        }
    }

    fn to_rng(&self) -> Result<ChaCha8Rng> {
        let bad = || Error::Parse("malformed generator state".into());
        if self.key.len() != 64 {
            return Err(bad());
        }
        let mut key = [0u8; 32];
        for (i, b) in key.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.key[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(u64::from_str_radix(&self.stream, 16).map_err(|_| bad())?);
        rng.set_word_pos(u128::from_str_radix(&self.word_pos, 16).map_err(|_| bad())?);
        Ok(rng)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreezeDoc {
    pub frozen: bool,
    pub count: u64,
    pub best_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_actor: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_critic: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub model_kind: String,
    pub seed: u64,
    pub obs_dim: usize,
    pub n_actions: usize,
    /// Episodes completed.
    pub episode: usize,
    pub fingerprint: String,
    pub rewards: Vec<String>,
    pub actor: Vec<String>,
    pub critic: Vec<String>,
    pub rng: RngDoc,
    pub actor_opt: OptimizerDoc,
    pub critic_opt: OptimizerDoc,
    pub freeze: FreezeDoc,
    pub config: ExperimentConfig,
}

impl Checkpoint {
    pub fn capture(config: &ExperimentConfig, seed: u64, state: &TrainerState) -> Result<Self> {
        Ok(Checkpoint {
            version: FORMAT_VERSION,
            model_kind: state.actor.kind_name().to_string(),
            seed,
            obs_dim: state.actor.n_inputs(),
            n_actions: state.actor.n_outputs(),
            episode: state.episode,
            fingerprint: config.fingerprint()?,
            rewards: hex_vec(&state.rewards),
            actor: hex_vec(&state.actor.params()),
            critic: hex_vec(&state.critic.params()),
            rng: RngDoc::from_rng(&state.rng),
            actor_opt: OptimizerDoc::from_adam(&state.actor_opt),
            critic_opt: OptimizerDoc::from_adam(&state.critic_opt),
            freeze: FreezeDoc {
                frozen: state.freeze.frozen,
                count: state.freeze.count,
                best_count: state.freeze.best_count,
                best_actor: state.freeze.best.as_ref().map(|b| hex_vec(&b.0)),
                best_critic: state.freeze.best.as_ref().map(|b| hex_vec(&b.1)),
            },
            config: config.clone(),
        })
    }

    /// Actor network with the stored parameters.
    pub fn actor(&self) -> Result<Model> {
        let mut m = self.config.model.build_zeros(self.obs_dim, self.n_actions)?;
        m.set_params(&unhex_vec(&self.actor)?)?;
        Ok(m)
    }

    pub fn critic(&self) -> Result<Model> {
        let mut m = self.config.model.build_zeros(self.obs_dim, 1)?;
        m.set_params(&unhex_vec(&self.critic)?)?;
        Ok(m)
    }

    pub fn trainer_state(&self) -> Result<TrainerState> {
        let best = match (&self.freeze.best_actor, &self.freeze.best_critic) {
            (Some(a), Some(c)) => Some((unhex_vec(a)?, unhex_vec(c)?)),
            (None, None) => None,
            _ => return Err(Error::Parse("freeze snapshot is incomplete".into())),
        };
        let state = TrainerState {
            actor: self.actor()?,
            critic: self.critic()?,
            actor_opt: self.actor_opt.to_adam()?,
            critic_opt: self.critic_opt.to_adam()?,
            rng: self.rng.to_rng()?,
            episode: self.episode,
            rewards: unhex_vec(&self.rewards)?,
            freeze: FreezeState {
                frozen: self.freeze.frozen,
                count: self.freeze.count,
                best_count: self.freeze.best_count,
                best,
            },
        };
        if state.actor_opt.m.len() != state.actor.param_count()
            || state.critic_opt.m.len() != state.critic.param_count()
        {
            return Err(Error::Parse("optimizer moments do not match the model".into()));
        }
        Ok(state)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let ck: Checkpoint = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if ck.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "checkpoint format {} is not supported (expected {FORMAT_VERSION})",
                ck.version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_toml()?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read checkpoint {}: {e}", path.display())))?;
        Checkpoint::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trips_special_values() {
        for v in [0.0, -0.0, 1.0 / 3.0, f64::MIN_POSITIVE, f64::MAX, -1e-300, f64::INFINITY] {
            assert_eq!(unhex(&hex(v)).unwrap().to_bits(), v.to_bits());
        }
        assert!(unhex("xyz").is_err());
        assert!(unhex("3ff00000000000000").is_err());
    }

    #[test]
    fn rng_state_round_trips() {
        use rand::RngCore;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        rng.set_stream(3);
        for _ in 0..37 {
            rng.next_u32();
        }
        let mut back = RngDoc::from_rng(&rng).to_rng().unwrap();
        for _ in 0..100 {
            assert_eq!(rng.next_u64(), back.next_u64());
        }
    }
}
