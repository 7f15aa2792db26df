//! Native-versus-reference environment cross-checks. Both sides start every
//! step from the same injected physical state and take the same action, so
//! any deviation is a one-step dynamics error rather than accumulated drift.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use svqc_core::env::{make_env, remote_id, BridgeEnv, Environment, Step};
use svqc_core::{Error, Result};

pub const TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct XcheckReport {
    pub env: String,
    pub steps: usize,
    pub episodes: usize,
    pub max_obs_deviation: f64,
    pub max_state_deviation: f64,
    pub reward_mismatches: usize,
    pub done_mismatches: usize,
    /// First step (0-based) with any mismatch beyond tolerance.
    pub first_failure: Option<usize>,
}

impl XcheckReport {
    fn new(env: &str) -> Self {
        XcheckReport {
            env: env.to_string(),
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.steps > 0
            && self.max_obs_deviation < TOLERANCE
            && self.max_state_deviation < TOLERANCE
            && self.reward_mismatches == 0
            && self.done_mismatches == 0
    }

    fn record(&mut self, native: &Step, obs: &[f64], reward: f64, terminated: bool, truncated: bool) {
        let dev = max_deviation(&native.obs, obs);
        let failed = dev >= TOLERANCE
            || native.reward != reward
            || native.terminated != terminated
            || native.truncated != truncated;
        self.max_obs_deviation = self.max_obs_deviation.max(dev);
        self.reward_mismatches += usize::from(native.reward != reward);
        self.done_mismatches += usize::from(native.terminated != terminated || native.truncated != truncated);
        if failed && self.first_failure.is_none() {
            self.first_failure = Some(self.steps);
        }
        self.steps += 1;
    }

    fn note_state(&mut self, native: &[f64], reference: &[f64]) {
        let dev = max_deviation(native, reference);
        self.max_state_deviation = self.max_state_deviation.max(dev);
        if dev >= TOLERANCE && self.first_failure.is_none() {
            self.first_failure = Some(self.steps.saturating_sub(1));
        }
    }
}

/// Largest componentwise difference; a length mismatch counts as infinite.
fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn native_env(id: &str) -> Result<Box<dyn Environment>> {
    if remote_id(id).is_none() {
        return Err(Error::Config(format!(
            "no reference environment for `{id}`; cross-checks cover cartpole-v0, cartpole-v1 and acrobot-v1"
        )));
    }
    make_env(id)
}

/// Drive the native environment and a bridge-served reference for `steps`
/// steps with uniformly random actions.
pub fn xcheck_bridge(id: &str, steps: usize, command: &str, seed: u64) -> Result<XcheckReport> {
    let mut native = native_env(id)?;
    let remote = remote_id(id).expect("checked by native_env");
    let mut reference = BridgeEnv::launch(command, remote)?;
    let spec = native.spec().clone();
    if reference.spec().obs_dim != spec.obs_dim || reference.spec().n_actions != spec.n_actions {
        return Err(Error::Bridge(format!(
            "bridge reports {} observations and {} actions for {remote}, native has {} and {}",
            reference.spec().obs_dim,
            reference.spec().n_actions,
            spec.obs_dim,
            spec.n_actions
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = XcheckReport::new(id);
    let mut need_reset = true;
    while report.steps < steps {
        if need_reset {
            let episode_seed = rng.random::<u32>() as u64;
            native.reset(episode_seed)?;
            reference.reset(episode_seed)?;
            report.episodes += 1;
        }
        let state = native.raw_state();
        let native_obs = native.inject_state(&state)?;
        let reference_obs = reference.inject_state(&state)?;
        report.max_obs_deviation = report.max_obs_deviation.max(max_deviation(&native_obs, &reference_obs));
        let action = rng.random_range(0..spec.n_actions);
        let n = native.step(action)?;
        let r = reference.step(action)?;
        report.record(&n, &r.obs, r.reward, r.terminated, r.truncated);
        report.note_state(&native.raw_state(), &reference.raw_state());
        need_reset = n.done() || r.done();
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub reset: bool,
    pub state: Vec<f64>,
    pub action: usize,
    pub next_state: Vec<f64>,
    pub obs: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// A reference trajectory recorded from the reference implementation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub env: String,
    pub source: String,
    pub seed: u64,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn load(path: &Path) -> Result<Trace> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read trace {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// Replay a recorded trace through the native environment, injecting each
/// recorded pre-step state.
pub fn xcheck_trace(id: &str, steps: usize, trace: &Trace) -> Result<XcheckReport> {
    if trace.env != id {
        return Err(Error::Config(format!("trace records `{}`, not `{id}`", trace.env)));
    }
    let mut native = native_env(id)?;
    if trace.steps.len() < steps {
        return Err(Error::Config(format!(
            "trace holds {} steps, {steps} requested",
            trace.steps.len()
        )));
    }
    let mut report = XcheckReport::new(id);
    for (i, s) in trace.steps[..steps].iter().enumerate() {
        if s.reset || i == 0 {
            native.reset(0)?;
            report.episodes += 1;
        }
        native.inject_state(&s.state)?;
        let n = native.step(s.action)?;
        report.record(&n, &s.obs, s.reward, s.terminated, s.truncated);
        report.note_state(&native.raw_state(), &s.next_state);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsupported_environment_is_a_config_error() {
        assert!(matches!(xcheck_bridge("bandit", 10, "true", 0), Err(Error::Config(_))));
        assert!(matches!(xcheck_bridge("pong-v9", 10, "true", 0), Err(Error::Config(_))));
    }

    #[test]
    fn deviation_handles_length_mismatch() {
        assert_eq!(max_deviation(&[1.0, 2.0], &[1.0, 2.5]), 0.5);
        assert_eq!(max_deviation(&[1.0], &[1.0, 2.0]), f64::INFINITY);
    }
}
