//! Seed sweeps: one training worker per seed, each writing its own curve
//! and checkpoints.

use std::path::{Path, PathBuf};
use std::time::Instant;

use svqc_core::agent::{Trainer, TrainerState};
use svqc_core::env::{make_env, BridgeEnv, Environment};
use svqc_core::model::ModelSpec;
use svqc_core::{Error, Result};

use crate::checkpoint::Checkpoint;
use crate::config::ExperimentConfig;
use crate::curve::{avg20, CurveRow, CurveWriter, CURVE_WINDOW};

pub const RUN_FILE: &str = "run.toml";
pub const CURVE_FILE: &str = "curve.csv";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

/// Remote id served by the bridge for a `bridge:` environment id.
pub fn bridge_remote(env: &str) -> Option<&str> {
    env.strip_prefix("bridge:")
}

/// Fresh environment instance for `config`, launching the bridge if needed.
pub fn open_env(config: &ExperimentConfig) -> Result<Box<dyn Environment>> {
    match (bridge_remote(&config.env), &config.bridge) {
        (Some(remote), Some(cmd)) => Ok(Box::new(BridgeEnv::launch(cmd, remote)?)),
        (Some(_), None) => Err(Error::Config(format!("`{}` needs a bridge command", config.env))),
        (None, _) => make_env(&config.env),
    }
}

pub fn seed_dir(run_dir: &Path, seed: u64) -> PathBuf {
    run_dir.join(format!("seed-{seed}"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub dir: PathBuf,
    pub rewards: Vec<f64>,
    pub best_avg20: Option<f64>,
}

/// Train every seed of `config` concurrently under `root/<label>/`.
pub fn run_experiment(config: &ExperimentConfig, root: &Path) -> Result<Vec<SeedResult>> {
    config.validate()?;
    let run_dir = root.join(&config.label);
    std::fs::create_dir_all(&run_dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", run_dir.display())))?;
    std::fs::write(run_dir.join(RUN_FILE), run_document(config)?)?;
    let results: Vec<Result<SeedResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .seeds
            .iter()
            .map(|&seed| {
                let dir = seed_dir(&run_dir, seed);
                scope.spawn(move || train_seed(config, seed, &dir))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Numeric("training worker panicked".into()))))
            .collect()
    });
    results.into_iter().collect()
}

fn run_document(config: &ExperimentConfig) -> Result<String> {
    Ok(format!("fingerprint = \"{}\"\n\n{}", config.fingerprint()?, config.to_toml()?))
}

/// Train one seed from scratch into `dir`.
pub fn train_seed(config: &ExperimentConfig, seed: u64, dir: &Path) -> Result<SeedResult> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut env = open_env(config)?;
    let trainer = Trainer::new(config.trainer_for(seed), &config.model, env.spec())?;
    let curve = CurveWriter::create(&dir.join(CURVE_FILE))?;
    drive(config, seed, dir, trainer, env.as_mut(), curve)
}

/// Continue a run from a checkpoint, appending to the curve in `dir`.
pub fn resume_seed(checkpoint: &Checkpoint, dir: &Path) -> Result<SeedResult> {
    let config = &checkpoint.config;
    let state: TrainerState = checkpoint.trainer_state()?;
    let trainer = Trainer::from_state(config.trainer_for(checkpoint.seed), state)?;
    let mut env = open_env(config)?;
    let path = dir.join(CURVE_FILE);
    let curve = if path.exists() {
        truncate_curve(&path, checkpoint.episode)?;
        CurveWriter::append(&path)?
    } else {
        CurveWriter::create(&path)?
    };
    drive(config, checkpoint.seed, dir, trainer, env.as_mut(), curve)
}

/// Drop rows written after the checkpoint so a resumed curve has no
/// duplicated episodes.
fn truncate_curve(path: &Path, episodes: usize) -> Result<()> {
    let rows = crate::curve::read_curve(path)?;
    if rows.len() <= episodes {
        return Ok(());
    }
    let mut w = CurveWriter::create(path)?;
    for row in &rows[..episodes] {
        w.write(row)?;
    }
    Ok(())
}

fn drive(
    config: &ExperimentConfig,
    seed: u64,
    dir: &Path,
    mut trainer: Trainer,
    env: &mut dyn Environment,
    mut curve: CurveWriter,
) -> Result<SeedResult> {
    let start = Instant::now();
    let mut best: Option<f64> = None;
    trainer.train(env, |record, t| {
        let rewards = &t.state().rewards;
        let avg = avg20(rewards);
        curve.write(&CurveRow {
            episode: record.episode,
            reward: record.reward,
            avg20: avg,
            steps: record.steps,
            wall_ms: start.elapsed().as_millis() as u64,
        })?;
        if rewards.len() >= CURVE_WINDOW && best.map_or(true, |b| avg > b) {
            best = Some(avg);
            Checkpoint::capture(config, seed, t.state())?.save(&dir.join(BEST_CHECKPOINT))?;
        }
        Ok(())
    })?;
    Checkpoint::capture(config, seed, trainer.state())?.save(&dir.join(FINAL_CHECKPOINT))?;
    Ok(SeedResult {
        seed,
        dir: dir.to_path_buf(),
        rewards: trainer.state().rewards.clone(),
        best_avg20: best,
    })
}

/// Copies of an SVQC experiment differing only in output reuse, labelled
/// `<label>-l<reuse>`.
pub fn reuse_variants(base: &ExperimentConfig, reuse: &[usize]) -> Result<Vec<ExperimentConfig>> {
    if reuse.is_empty() {
        return Err(Error::Config("reuse list is empty".into()));
    }
    reuse
        .iter()
        .map(|&l| {
            let mut cfg = base.clone();
            match &mut cfg.model {
                ModelSpec::Svqc { reuse, .. } => *reuse = l,
                ModelSpec::Fcn { .. } => return Err(Error::Config("reuse sweeps need an svqc model".into())),
            }
            cfg.label = format!("{}-l{l}", base.label);
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}
