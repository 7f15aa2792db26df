//! Replaying a trained actor, optionally through a noisy device model.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use svqc_core::agent::{argmax, sample_action};
use svqc_core::env::Environment;
use svqc_core::head::softmax;
use svqc_core::model::Model;
use svqc_core::quantum::NoiseModel;
use svqc_core::{Error, Result};

pub const DEFAULT_EPISODES: usize = 20;
/// Size of the short summary reported next to the full statistics.
pub const SHORT_RUN: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub episodes: usize,
    /// Sample actions from the policy instead of taking the argmax.
    pub sample: bool,
    pub noise: NoiseModel,
    /// Seeds environment resets, measurement noise and action sampling.
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            episodes: DEFAULT_EPISODES,
            sample: false,
            noise: NoiseModel::ideal(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub episodes: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Stats {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Stats {
            episodes: xs.len(),
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub rewards: Vec<f64>,
    pub full: Stats,
    pub first: Stats,
}

/// Run `options.episodes` episodes with `actor`, which must match `env`.
pub fn evaluate(actor: &Model, env: &mut dyn Environment, options: &EvalOptions) -> Result<EvalReport> {
    let spec = env.spec();
    if actor.n_inputs() != spec.obs_dim || actor.n_outputs() != spec.n_actions {
        return Err(Error::Config(format!(
            "actor maps {} -> {} but `{}` has {} observations and {} actions",
            actor.n_inputs(),
            actor.n_outputs(),
            spec.id,
            spec.obs_dim,
            spec.n_actions
        )));
    }
    if options.episodes == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    options.noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut rewards = Vec::with_capacity(options.episodes);
    for _ in 0..options.episodes {
        let mut obs = env.reset(rng.next_u64())?;
        let mut total = 0.0;
        loop {
            let logits = actor.forward_noisy(&obs, &options.noise, &mut rng)?;
            let action = if options.sample {
                sample_action(&softmax(&logits), &mut rng)
            } else {
                argmax(&logits)
            };
            let step = env.step(action)?;
            total += step.reward;
            if step.done() {
                break;
            }
            obs = step.obs;
        }
        rewards.push(total);
    }
    let full = Stats::of(&rewards);
    let first = Stats::of(&rewards[..rewards.len().min(SHORT_RUN)]);
    Ok(EvalReport { rewards, full, first })
}
