use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::buffer::{TrajectoryBuffer, Transition};
use super::freeze::FreezeState;
use super::returns::{advantages, discounted_returns, gae, normalize, ppo_clip_objective, ppo_clip_slope, value_loss};
use crate::env::{trailing_mean, EnvSpec, Environment};
use crate::error::{Error, Result};
use crate::head::softmax;
use crate::model::{Model, ModelSpec};

fn default_horizon() -> usize {
    128
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreezeConfig {
    pub threshold: f64,
    pub window: usize,
}

impl Default for FreezeConfig {
    fn default() -> Self {
        FreezeConfig {
            threshold: 200.0,
            window: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub epochs: usize,
    pub clip: f64,
    pub max_episodes: usize,
    /// Steps between updates inside an episode; episode ends always update.
    #[serde(default = "default_horizon")]
    pub update_horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub normalize_advantages: bool,
    /// Standardize the discounted returns of each batch before they are
    /// used as critic targets and advantage baselines.
    #[serde(default)]
    pub normalize_returns: bool,
    #[serde(default)]
    pub entropy_coef: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gae_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freeze: Option<FreezeConfig>,
    /// Split each epoch into consecutive minibatches of this size; `None`
    /// takes one full-batch step per epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minibatch: Option<usize>,
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::config(msg.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("discount must lie in [0, 1)");
        }
        if !(self.clip > 0.0) {
            return bad("clip range must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.update_horizon == 0 {
            return bad("update horizon must be at least 1");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if let Some(l) = self.gae_lambda {
            if !(0.0..=1.0).contains(&l) {
                return bad("gae lambda must lie in [0, 1]");
            }
        }
        if self.normalize_returns && self.gae_lambda.is_some() {
            return bad("return normalization cannot be combined with gae");
        }
        if self.minibatch == Some(0) {
            return bad("minibatch size must be at least 1");
        }
        if self.entropy_coef < 0.0 {
            return bad("entropy coefficient must be non-negative");
        }
        Ok(())
    }
}

/// One update's worth of training data.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub old_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    /// Entries `range` as their own batch.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Batch {
        Batch {
            obs: self.obs[range.clone()].to_vec(),
            actions: self.actions[range.clone()].to_vec(),
            old_probs: self.old_probs[range.clone()].to_vec(),
            advantages: self.advantages[range.clone()].to_vec(),
            returns: self.returns[range].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

/// Mean clipped surrogate (plus entropy bonus) and its gradient with
/// respect to the actor parameters.
pub fn actor_objective(actor: &Model, batch: &Batch, clip: f64, entropy_coef: f64) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let n = batch.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; actor.param_count()];
    for i in 0..batch.len() {
        let logits = actor.forward(&batch.obs[i])?;
        let probs = softmax(&logits);
        let a = batch.actions[i];
        let adv = batch.advantages[i];
        let ratio = probs[a] / batch.old_probs[i];
        total += ppo_clip_objective(ratio, adv, clip)? / n;
        let slope = ppo_clip_slope(ratio, adv, clip) * ratio / n;
        let mut upstream: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(j, &p)| slope * (f64::from(u8::from(j == a)) - p))
            .collect();
        if entropy_coef > 0.0 {
            let plogp = |p: f64| if p > 0.0 { p * p.ln() } else { 0.0 };
            let h: f64 = -probs.iter().map(|&p| plogp(p)).sum::<f64>();
            total += entropy_coef * h / n;
            for (u, &p) in upstream.iter_mut().zip(&probs) {
                let lnp = if p > 0.0 { p.ln() } else { 0.0 };
                *u -= entropy_coef * p * (lnp + h) / n;
            }
        }
        if upstream.iter().all(|&u| u == 0.0) {
            continue;
        }
        let (_, g) = actor.gradient(&batch.obs[i], &upstream)?;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    Ok((total, grad))
}

/// Mean squared value error and its gradient with respect to the critic
/// parameters.
pub fn critic_loss(critic: &Model, batch: &Batch) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let n = batch.len() as f64;
    let mut values = Vec::with_capacity(batch.len());
    let mut grad = vec![0.0; critic.param_count()];
    for (x, &r) in batch.obs.iter().zip(&batch.returns) {
        let v = critic.forward(x)?[0];
        values.push(v);
        let (_, g) = critic.gradient(x, &[2.0 * (v - r) / n])?;
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    Ok((value_loss(&values, &batch.returns)?, grad))
}

/// Index drawn from `probs` with one uniform variate.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

/// Everything that evolves during training; saving and restoring it
/// resumes a run exactly.
#[derive(Clone, Debug)]
pub struct TrainerState {
    pub actor: Model,
    pub critic: Model,
    pub actor_opt: Adam<f64>,
    pub critic_opt: Adam<f64>,
    pub rng: ChaCha8Rng,
    /// Episodes completed so far.
    pub episode: usize,
    pub rewards: Vec<f64>,
    pub freeze: FreezeState,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based episode number.
    pub episode: usize,
    pub reward: f64,
    pub steps: usize,
    pub updates: usize,
    pub frozen: bool,
}

/// Actor-critic PPO-clip trainer.
#[derive(Clone, Debug)]
pub struct Trainer {
    config: TrainerConfig,
    state: TrainerState,
    buffer: TrajectoryBuffer,
}

impl Trainer {
    /// Fresh actor and critic for `env`, initialised from the config seed.
    pub fn new(config: TrainerConfig, model: &ModelSpec, env: &EnvSpec) -> Result<Self> {
        config.validate()?;
        let mut init = ChaCha8Rng::seed_from_u64(config.seed);
        init.set_stream(1);
        let actor = model.build(env.obs_dim, env.n_actions, &mut init)?;
        let critic = model.build(env.obs_dim, 1, &mut init)?;
        let state = TrainerState {
            actor_opt: Adam::new(actor.param_count(), config.actor_lr),
            critic_opt: Adam::new(critic.param_count(), config.critic_lr),
            actor,
            critic,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            episode: 0,
            rewards: Vec::new(),
            freeze: FreezeState::default(),
        };
        Trainer::from_state(config, state)
    }

    pub fn from_state(config: TrainerConfig, state: TrainerState) -> Result<Self> {
        config.validate()?;
        if state.actor.n_inputs() != state.critic.n_inputs() || state.critic.n_outputs() != 1 {
            return Err(Error::config("actor and critic shapes disagree"));
        }
        let buffer = TrajectoryBuffer::new(config.update_horizon);
        Ok(Trainer { config, state, buffer })
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.config
    }

    pub fn state(&self) -> &TrainerState {
        &self.state
    }

    pub fn into_state(self) -> TrainerState {
        self.state
    }

    pub fn is_finished(&self) -> bool {
        self.state.episode >= self.config.max_episodes
    }

    pub fn policy(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.state.actor.forward(obs)?))
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.state.critic.forward(obs)?[0])
    }

    /// Run episodes until `max_episodes`, calling `on_episode` after each.
    pub fn train<F>(&mut self, env: &mut dyn Environment, mut on_episode: F) -> Result<()>
    where
        F: FnMut(&EpisodeRecord, &Trainer) -> Result<()>,
    {
        self.check_env(env.spec())?;
        while !self.is_finished() {
            let record = self.run_episode(env)?;
            on_episode(&record, self)?;
        }
        Ok(())
    }

    fn check_env(&self, spec: &EnvSpec) -> Result<()> {
        if spec.obs_dim != self.state.actor.n_inputs() || spec.n_actions != self.state.actor.n_outputs() {
            return Err(Error::config(format!(
                "model maps {} -> {} but `{}` has {} observations and {} actions",
                self.state.actor.n_inputs(),
                self.state.actor.n_outputs(),
                spec.id,
                spec.obs_dim,
                spec.n_actions
            )));
        }
        Ok(())
    }

    /// Collect one episode, updating every `update_horizon` steps and at the
    /// end of the episode.
    pub fn run_episode(&mut self, env: &mut dyn Environment) -> Result<EpisodeRecord> {
        self.check_env(env.spec())?;
        let seed = self.state.rng.next_u64();
        let mut obs = env.reset(seed)?;
        let (mut total, mut steps, mut updates) = (0.0, 0, 0);
        loop {
            let probs = self.policy(&obs)?;
            let action = sample_action(&probs, &mut self.state.rng);
            let value = self.value(&obs)?;
            let step = env.step(action)?;
            total += step.reward;
            steps += 1;
            self.buffer.push(Transition {
                obs,
                action,
                reward: step.reward,
                action_prob: probs[action],
                value,
                done: step.terminated,
            });
            if step.done() || self.buffer.is_full() {
                let bootstrap = if step.terminated { 0.0 } else { self.value(&step.obs)? };
                if !self.state.freeze.frozen {
                    self.update(bootstrap)?;
                    updates += 1;
                }
                self.buffer.clear();
            }
            if step.done() {
                break;
            }
            obs = step.obs;
        }
        self.state.episode += 1;
        self.state.rewards.push(total);
        if let Some(fc) = &self.config.freeze {
            let avg = trailing_mean(&self.state.rewards, fc.window);
            let (actor, critic) = (&self.state.actor, &self.state.critic);
            self.state
                .freeze
                .observe(total, avg, fc.threshold, || (actor.params(), critic.params()));
        }
        Ok(EpisodeRecord {
            episode: self.state.episode,
            reward: total,
            steps,
            updates,
            frozen: self.state.freeze.frozen,
        })
    }

    /// Batch built from the current buffer with the given bootstrap value.
    pub fn batch(&self, bootstrap: f64) -> Result<Batch> {
        let items = self.buffer.transitions();
        let rewards: Vec<f64> = items.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = items.iter().map(|t| t.value).collect();
        let (returns, mut adv) = match self.config.gae_lambda {
            Some(lambda) => {
                let mut ext = values.clone();
                ext.push(bootstrap);
                let adv = gae(&rewards, &ext, self.config.gamma, lambda)?;
                let ret = adv.iter().zip(&values).map(|(a, v)| a + v).collect();
                (ret, adv)
            }
            None => {
                let mut ret = discounted_returns(&rewards, self.config.gamma, bootstrap);
                if self.config.normalize_returns {
                    normalize(&mut ret);
                }
                let adv = advantages(&ret, &values)?;
                (ret, adv)
            }
        };
        if self.config.normalize_advantages {
            normalize(&mut adv);
        }
        Ok(Batch {
            obs: items.iter().map(|t| t.obs.clone()).collect(),
            actions: items.iter().map(|t| t.action).collect(),
            old_probs: items.iter().map(|t| t.action_prob).collect(),
            advantages: adv,
            returns,
        })
    }

    /// `epochs` passes over the buffer; each minibatch takes one critic
    /// descent step and then one actor ascent step.
    fn update(&mut self, bootstrap: f64) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        let full = self.batch(bootstrap)?;
        let size = self.config.minibatch.unwrap_or(full.len()).min(full.len());
        let chunks: Vec<Batch> = (0..full.len())
            .step_by(size)
            .map(|start| full.slice(start..(start + size).min(full.len())))
            .collect();
        let s = &mut self.state;
        for batch in (0..self.config.epochs).flat_map(|_| chunks.iter()) {
            let (_, g) = critic_loss(&s.critic, batch)?;
            let mut p = s.critic.params();
            s.critic_opt.step(&mut p, &g)?;
            s.critic.set_params(&p)?;

            let (_, g) = actor_objective(&s.actor, batch, self.config.clip, self.config.entropy_coef)?;
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut p = s.actor.params();
            s.actor_opt.step(&mut p, &neg)?;
            s.actor.set_params(&p)?;
        }
        Ok(())
    }
}
