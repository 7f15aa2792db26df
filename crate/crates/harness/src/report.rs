//! Aggregation of finished runs: episodes-to-threshold, parameter counts,
//! SVQC-versus-dense speedups and mean/band series across seeds.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use svqc_core::env::{first_solved, trailing_mean, EnvSpec};
use svqc_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::curve::{read_curve, CURVE_WINDOW};
use crate::experiment::{CURVE_FILE, RUN_FILE};

pub const NOT_REACHED: &str = "not reached";

/// First episode (1-based) whose full trailing-20 window averages at least
/// `threshold`.
pub fn episodes_to_threshold(rewards: &[f64], threshold: f64) -> Option<usize> {
    (CURVE_WINDOW..=rewards.len()).find(|&n| trailing_mean(&rewards[..n], CURVE_WINDOW) >= threshold)
}

/// Median with unreached entries ordered after every reached one; `None` if
/// the median itself is unreached.
pub fn median_episodes(values: &[Option<usize>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|e| e.map_or(f64::INFINITY, |n| n as f64)).collect();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    let m = if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 };
    m.is_finite().then_some(m)
}

pub fn format_episodes(e: Option<f64>) -> String {
    e.map_or_else(|| NOT_REACHED.to_string(), |v| format!("{v}"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: String,
    pub episodes: usize,
    pub to_threshold: Option<usize>,
    /// Episode at which the environment's solve criterion first holds.
    pub solved_at: Option<usize>,
    pub final_avg20: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub episode: usize,
    /// Seeds contributing to this episode.
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub env: String,
    pub model: String,
    pub fingerprint: String,
    pub actor_params: Option<usize>,
    pub total_params: Option<usize>,
    pub threshold: Option<f64>,
    pub seeds: Vec<SeedSummary>,
    pub median_to_threshold: Option<f64>,
    pub solved: usize,
    /// Per-episode statistics of the trailing-20 mean across seeds.
    pub series: Vec<SeriesPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub env: String,
    pub svqc: String,
    pub fcn: String,
    pub svqc_median: Option<f64>,
    pub fcn_median: Option<f64>,
    /// FCN episodes divided by SVQC episodes.
    pub speedup: Option<f64>,
    /// Set when the dense run never reached the threshold, so the ratio
    /// uses its episode budget and understates the speedup.
    pub lower_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub runs: Vec<RunSummary>,
    pub comparisons: Vec<Comparison>,
}

/// Mean/std/min/max across curves, per episode index.
pub fn aggregate(curves: &[Vec<f64>]) -> Vec<SeriesPoint> {
    let longest = curves.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .map(|i| {
            let xs: Vec<f64> = curves.iter().filter_map(|c| c.get(i).copied()).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            SeriesPoint {
                episode: i + 1,
                n: xs.len(),
                mean,
                std: var.sqrt(),
                min: xs.iter().copied().fold(f64::INFINITY, f64::min),
                max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Read `run.toml` as written by the experiment runner.
pub fn read_run(dir: &Path) -> Result<(String, ExperimentConfig)> {
    let path = dir.join(RUN_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let fingerprint = match table.remove("fingerprint") {
        Some(toml::Value::String(s)) => s,
        _ => return Err(Error::Parse(format!("{} has no fingerprint", path.display()))),
    };
    let config: ExperimentConfig = table
        .try_into()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok((fingerprint, config))
}

fn seed_dirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if let Some(seed) = name.strip_prefix("seed-") {
            if path.join(CURVE_FILE).is_file() {
                out.push((seed.to_string(), path));
            }
        }
    }
    out.sort_by_key(|(s, _)| (s.parse::<u64>().unwrap_or(u64::MAX), s.clone()));
    Ok(out)
}

pub fn summarize_run(dir: &Path) -> Result<RunSummary> {
    let (fingerprint, config) = read_run(dir)?;
    let spec = EnvSpec::builtin(&config.env).ok();
    let threshold = spec.as_ref().and_then(|s| s.solve_threshold);
    let (actor_params, total_params) = match &spec {
        Some(s) => {
            let actor = config.model.build_zeros(s.obs_dim, s.n_actions)?.param_count();
            let critic = config.model.build_zeros(s.obs_dim, 1)?.param_count();
            (Some(actor), Some(actor + critic))
        }
        None => (None, None),
    };
    let mut seeds = Vec::new();
    let mut avg_curves = Vec::new();
    for (seed, path) in seed_dirs(dir)? {
        let rows = read_curve(&path.join(CURVE_FILE))?;
        let rewards: Vec<f64> = rows.iter().map(|r| r.reward).collect();
        avg_curves.push(rows.iter().map(|r| r.avg20).collect::<Vec<_>>());
        seeds.push(SeedSummary {
            seed,
            episodes: rewards.len(),
            to_threshold: threshold.and_then(|t| episodes_to_threshold(&rewards, t)),
            solved_at: spec
                .as_ref()
                .and_then(|s| first_solved(&rewards, s.solve_window, s.solve_threshold))
                .map(|i| i + 1),
            final_avg20: trailing_mean(&rewards, CURVE_WINDOW),
        });
    }
    if seeds.is_empty() {
        return Err(Error::Config(format!("{} holds no curves", dir.display())));
    }
    let median_to_threshold = median_episodes(&seeds.iter().map(|s| s.to_threshold).collect::<Vec<_>>());
    Ok(RunSummary {
        label: config.label.clone(),
        env: config.env.clone(),
        model: config.model.kind_name().to_string(),
        fingerprint,
        actor_params,
        total_params,
        threshold,
        solved: seeds.iter().filter(|s| s.solved_at.is_some()).count(),
        median_to_threshold,
        seeds,
        series: aggregate(&avg_curves),
    })
}

/// Summaries for `dir` itself if it is a run, otherwise for each run
/// directory directly below it.
pub fn report(dir: &Path) -> Result<Report> {
    let mut runs = Vec::new();
    if dir.join(RUN_FILE).is_file() {
        runs.push(summarize_run(dir)?);
    } else {
        let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(RUN_FILE).is_file())
            .collect();
        subdirs.sort();
        for sub in subdirs {
            runs.push(summarize_run(&sub)?);
        }
    }
    if runs.is_empty() {
        return Err(Error::Config(format!("no runs found under {}", dir.display())));
    }
    let comparisons = compare(&runs);
    Ok(Report { runs, comparisons })
}

/// Pair every SVQC run with every dense run on the same environment.
pub fn compare(runs: &[RunSummary]) -> Vec<Comparison> {
    let mut out = Vec::new();
    for s in runs.iter().filter(|r| r.model == "svqc") {
        for f in runs.iter().filter(|r| r.model == "fcn" && r.env == s.env) {
            let budget = f.seeds.iter().map(|x| x.episodes).max().unwrap_or(0) as f64;
            let (speedup, lower_bound) = match (s.median_to_threshold, f.median_to_threshold) {
                (Some(a), Some(b)) => (Some(b / a), false),
                (Some(a), None) => (Some(budget / a), true),
                _ => (None, false),
            };
            out.push(Comparison {
                env: s.env.clone(),
                svqc: s.label.clone(),
                fcn: f.label.clone(),
                svqc_median: s.median_to_threshold,
                fcn_median: f.median_to_threshold,
                speedup,
                lower_bound,
            });
        }
    }
    out
}

fn count(n: Option<usize>) -> String {
    n.map_or_else(|| "-".into(), |v| v.to_string())
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{} [{} on {}] actor params {} (with critic {}) fingerprint {}",
                r.label,
                r.model,
                r.env,
                count(r.actor_params),
                count(r.total_params),
                &r.fingerprint[..r.fingerprint.len().min(12)]
            );
            let threshold = r.threshold.map_or_else(|| "-".into(), |t| t.to_string());
            for seed in &r.seeds {
                let _ = writeln!(
                    s,
                    "  seed {:>4}: {:>5} episodes, avg20 >= {threshold} at {}, solved at {}, final avg20 {:.2}",
                    seed.seed,
                    seed.episodes,
                    seed.to_threshold.map_or_else(|| NOT_REACHED.into(), |v| v.to_string()),
                    seed.solved_at.map_or_else(|| NOT_REACHED.into(), |v| v.to_string()),
                    seed.final_avg20
                );
            }
            let _ = writeln!(
                s,
                "  median episodes to threshold: {}; solved {}/{}",
                format_episodes(r.median_to_threshold),
                r.solved,
                r.seeds.len()
            );
        }
        for c in &self.comparisons {
            let speedup = match (c.speedup, c.lower_bound) {
                (Some(v), false) => format!("{v:.2}x"),
                (Some(v), true) => format!(">= {v:.2}x"),
                (None, _) => "n/a".into(),
            };
            let _ = writeln!(
                s,
                "{}: {} {} vs {} {} -> speedup {speedup}",
                c.env,
                c.svqc,
                format_episodes(c.svqc_median),
                c.fcn,
                format_episodes(c.fcn_median)
            );
        }
        s
    }

    /// Write `aggregate.csv` (per-episode mean and band of the trailing-20
    /// mean) into each run directory below `dir`.
    pub fn write_series(&self, dir: &Path) -> Result<()> {
        for r in &self.runs {
            let run_dir = if dir.join(RUN_FILE).is_file() { dir.to_path_buf() } else { dir.join(&r.label) };
            let mut w = csv::Writer::from_path(run_dir.join("aggregate.csv")).map_err(|e| Error::Parse(e.to_string()))?;
            for p in &r.series {
                w.serialize(p).map_err(|e| Error::Parse(e.to_string()))?;
            }
            w.flush()?;
        }
        Ok(())
    }
}
