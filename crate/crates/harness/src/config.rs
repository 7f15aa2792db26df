//! Experiment configuration files and the built-in presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use svqc_core::agent::{FreezeConfig, TrainerConfig};
use svqc_core::env::EnvSpec;
use svqc_core::model::ModelSpec;
use svqc_core::quantum::{AngleSource, CircuitSpec, FeatureMap, Gate, NoiseModel, Replication};
use svqc_core::{Error, Result};

pub const PRESETS: [&str; 9] = [
    "cartpole-table3",
    "acrobot-table3",
    "lunarlander-table3",
    "cartpole-ibm",
    "acrobot-ibm",
    "lunarlander-ibm",
    "cartpole-fcn",
    "acrobot-fcn",
    "lunarlander-fcn",
];

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Name of the output subdirectory.
    pub label: String,
    /// Built-in environment id, or `bridge:<remote id>`.
    pub env: String,
    /// Shell command that starts the environment bridge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub model: ModelSpec,
    /// `seed` here is overridden by each entry of `seeds`.
    pub trainer: TrainerConfig,
    /// Noise applied when evaluating checkpoints of this experiment.
    #[serde(default)]
    pub noise: NoiseModel,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.is_empty() || self.label.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid label `{}`", self.label)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.seeds.iter().any(|&s| s > i64::MAX as u64) {
            return Err(Error::Config("seeds must fit in a signed 64-bit integer".into()));
        }
        if self.env.starts_with("bridge:") && self.bridge.is_none() {
            return Err(Error::Config(format!("`{}` needs a bridge command", self.env)));
        }
        match EnvSpec::builtin(&self.env) {
            Ok(spec) => {
                self.model.build_zeros(spec.obs_dim, spec.n_actions)?;
            }
            Err(e) if !self.env.starts_with("bridge:") => return Err(e),
            Err(_) => {}
        }
        self.noise.validate()?;
        self.trainer.validate()
    }

    /// Trainer settings for one seed of the sweep.
    pub fn trainer_for(&self, seed: u64) -> TrainerConfig {
        TrainerConfig {
            seed,
            ..self.trainer.clone()
        }
    }

    /// SHA-256 over the configuration with seeds and output location removed.
    pub fn fingerprint(&self) -> Result<String> {
        let mut pinned = self.clone();
        pinned.seeds.clear();
        pinned.out = None;
        pinned.trainer.seed = 0;
        let text = pinned.to_toml()?;
        Ok(Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }
}

fn trainer(actor_lr: f64, critic_lr: f64, gamma: f64, max_episodes: usize) -> TrainerConfig {
    TrainerConfig {
        actor_lr,
        critic_lr,
        gamma,
        epochs: 4,
        clip: 0.1,
        max_episodes,
        update_horizon: 128,
        seed: 0,
        normalize_advantages: false,
        normalize_returns: false,
        entropy_coef: 0.0,
        gae_lambda: None,
        freeze: None,
        minibatch: None,
    }
}

fn svqc(circuit: CircuitSpec, reuse: usize) -> ModelSpec {
    ModelSpec::Svqc {
        circuit,
        reuse,
        gradient: Default::default(),
        init: Default::default(),
    }
}

fn standard(n: usize, replication: Replication) -> CircuitSpec {
    CircuitSpec::standard(n, replication).expect("standard circuit is valid")
}

/// Encoding scales for Acrobot: the trigonometric features are used as they
/// are, the angular velocities (bounded by 4pi and 9pi) are brought into
/// `[-pi, pi]`.
pub const ACROBOT_SCALES: [f64; 6] = [1.0, 1.0, 1.0, 1.0, 0.25, 1.0 / 9.0];

fn acrobot_circuit() -> CircuitSpec {
    CircuitSpec::scaled(&ACROBOT_SCALES, Replication::default()).expect("preset circuit is valid")
}

/// One qubit, `H - Rz(x1) - Ry(x2) - Rz(x3) - Rx(p0)`: cart velocity, pole
/// angle and pole angular velocity in order. Cart position is not encoded.
pub fn cartpole_ibm_circuit() -> CircuitSpec {
    let map = FeatureMap {
        weights: vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ],
        offsets: Vec::new(),
    };
    let program = vec![
        Gate::H,
        Gate::rz(AngleSource::Mapped(0)),
        Gate::ry(AngleSource::Mapped(1)),
        Gate::rz(AngleSource::Mapped(2)),
        Gate::rx(AngleSource::Param(0)),
    ];
    CircuitSpec::new(4, 1, vec![program], Replication::default(), Some(map)).expect("preset circuit is valid")
}

/// Built-in experiment by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = |label: &str, env: &str, model: ModelSpec, trainer: TrainerConfig| ExperimentConfig {
        label: label.to_string(),
        env: env.to_string(),
        bridge: None,
        seeds: default_seeds(),
        out: None,
        model,
        trainer,
        noise: NoiseModel::ideal(),
    };
    let lunar_bridge = |mut cfg: ExperimentConfig| {
        cfg.bridge = Some("python3 gym_bridge.py".into());
        cfg.seeds = (0..10).collect();
        cfg.trainer.freeze = Some(FreezeConfig::default());
        cfg
    };
    let cfg = match name {
        "cartpole-table3" => base(
            name,
            "cartpole-v1",
            svqc(standard(4, Replication::default()), 16),
            trainer(0.001, 0.01, 0.99, 600),
        ),
        "acrobot-table3" => base(
            name,
            "acrobot-v1",
            svqc(acrobot_circuit(), 8),
            trainer(0.004, 0.04, 0.98, 300),
        ),
        "lunarlander-table3" => lunar_bridge(base(
            name,
            "bridge:LunarLander-v2",
            svqc(standard(8, Replication::Spatial { copies: 3 }), 8),
            trainer(0.002, 0.02, 0.98, 2000),
        )),
        "cartpole-ibm" => base(
            name,
            "cartpole-v1",
            svqc(cartpole_ibm_circuit(), 1),
            trainer(0.004, 0.04, 0.99, 600),
        ),
        "acrobot-ibm" => base(
            name,
            "acrobot-v1",
            svqc(acrobot_circuit(), 1),
            trainer(0.004, 0.04, 0.98, 300),
        ),
        "lunarlander-ibm" => lunar_bridge(base(
            name,
            "bridge:LunarLander-v2",
            svqc(standard(8, Replication::Spatial { copies: 3 }), 1),
            trainer(0.002, 0.02, 0.98, 2000),
        )),
        "cartpole-fcn" => base(name, "cartpole-v1", ModelSpec::fcn(), trainer(0.0003, 0.001, 0.98, 600)),
        "acrobot-fcn" => base(name, "acrobot-v1", ModelSpec::fcn(), trainer(0.0003, 0.001, 0.98, 300)),
        "lunarlander-fcn" => lunar_bridge(base(
            name,
            "bridge:LunarLander-v2",
            ModelSpec::fcn(),
            trainer(0.0003, 0.001, 0.98, 2000),
        )),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; available: {}",
                PRESETS.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
