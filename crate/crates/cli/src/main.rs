//! `svqc`: train, evaluate and cross-check single-qubit variational circuit
//! agents.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svqc_core::quantum::{NoiseModel, Shots};
use svqc_core::Error;
use svqc_harness::evaluate::{evaluate, EvalOptions, DEFAULT_EPISODES, SHORT_RUN};
use svqc_harness::experiment::{open_env, resume_seed, reuse_variants, run_experiment};
use svqc_harness::report::report;
use svqc_harness::xcheck::{xcheck_bridge, xcheck_trace, Trace, XcheckReport};
use svqc_harness::{preset, Checkpoint, ExperimentConfig, PRESETS};

/// Write to stdout, exiting quietly when the reader has gone away.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = write!(std::io::stdout().lock(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(Error::Io(e));
        }
    }};
}

macro_rules! outln {
    ($($arg:tt)*) => {{
        out!("{}\n", format_args!($($arg)*))
    }};
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Environment to evaluate on, if not the one the checkpoint was trained on.
    #[arg(long)]
    env: Option<String>,
    #[arg(long, default_value_t = DEFAULT_EPISODES)]
    episodes: usize,
    /// Measurement repetitions per circuit output, or `exact`.
    #[arg(long, default_value = "exact")]
    shots: Shots,
    /// Readout bit-flip probability.
    #[arg(long, default_value_t = 0.0)]
    readout_p: f64,
    /// Depolarizing probability per gate.
    #[arg(long, default_value_t = 0.0)]
    gate_p: f64,
    /// Sample actions instead of taking the most likely one.
    #[arg(long)]
    sample: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Parser)]
#[command(name = "svqc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Source {
    /// Experiment configuration file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment preset.
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated seeds overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Episode budget overriding the configuration.
    #[arg(long)]
    episodes: Option<usize>,
    /// Root output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train every seed of an experiment, or resume one seed from a checkpoint.
    Train {
        #[command(flatten)]
        source: Source,
        /// Continue from this checkpoint, appending to the curve next to it.
        #[arg(long, conflicts_with_all = ["config", "preset", "seeds"])]
        resume: Option<PathBuf>,
    },
    /// Replay a checkpointed actor.
    Eval(EvalArgs),
    /// Compare a native environment against the reference implementation.
    Xcheck {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Command that starts a bridge serving the reference environment.
        #[arg(long, required_unless_present = "trace", conflicts_with = "trace")]
        bridge: Option<String>,
        /// Recorded reference trajectory to replay instead of a live bridge.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarize finished runs.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Train the same SVQC experiment at several output-reuse counts.
    SweepReuse {
        #[arg(long = "l", value_delimiter = ',', default_value = "4,8,16,32")]
        reuse: Vec<usize>,
        #[command(flatten)]
        source: Source,
    },
    /// Print a preset configuration, or list the presets.
    Preset { name: Option<String> },
}

const DEFAULT_OUT: &str = "runs";

fn load(source: &Source, fallback: &str) -> svqc_core::Result<ExperimentConfig> {
    let mut cfg = match (&source.config, &source.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => preset(fallback)?,
    };
    if let Some(seeds) = &source.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(n) = source.episodes {
        cfg.trainer.max_episodes = n;
    }
    if let Some(out) = &source.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_root(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn train(source: &Source, resume: Option<&Path>) -> svqc_core::Result<()> {
    if let Some(path) = resume {
        let ck = Checkpoint::load(path)?;
        let dir = match &source.out {
            Some(d) => d.clone(),
            None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        let mut ck = ck;
        if let Some(n) = source.episodes {
            ck.config.trainer.max_episodes = n;
        }
        eprintln!("resuming seed {} at episode {} into {}", ck.seed, ck.episode, dir.display());
        let result = resume_seed(&ck, &dir)?;
        outln!("seed {}: {} episodes", result.seed, result.rewards.len());
        return Ok(());
    }
    let cfg = load(source, "cartpole-table3")?;
    let root = out_root(&cfg);
    eprintln!(
        "training {} on {} with seeds {:?} into {}",
        cfg.label,
        cfg.env,
        cfg.seeds,
        root.join(&cfg.label).display()
    );
    run_experiment(&cfg, &root)?;
    out!("{}", report(&root.join(&cfg.label))?.to_text());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval(args: &EvalArgs) -> svqc_core::Result<()> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let actor = ck.actor()?;
    let mut config = ck.config.clone();
    if let Some(env) = &args.env {
        config.env = env.clone();
        config.validate()?;
    }
    let mut env = open_env(&config)?;
    let options = EvalOptions {
        episodes: args.episodes,
        sample: args.sample,
        noise: NoiseModel {
            readout_p: args.readout_p,
            gate_p: args.gate_p,
            shots: args.shots,
        },
        seed: args.seed,
    };
    let r = evaluate(&actor, env.as_mut(), &options)?;
    if args.json {
        outln!("{}", serde_json::to_string_pretty(&r).map_err(|e| Error::Parse(e.to_string()))?);
    } else {
        outln!(
            "{} episodes: mean {:.2} std {:.2}; first {}: mean {:.2} std {:.2}",
            r.full.episodes,
            r.full.mean,
            r.full.std,
            SHORT_RUN.min(r.full.episodes),
            r.first.mean,
            r.first.std
        );
        let list: Vec<String> = r.rewards.iter().map(|v| format!("{v}")).collect();
        outln!("rewards: {}", list.join(" "));
    }
    Ok(())
}

fn print_xcheck(r: &XcheckReport) -> svqc_core::Result<()> {
    outln!(
        "{}: {} steps over {} episodes; max |dobs| {:.3e}, max |dstate| {:.3e}, reward mismatches {}, done mismatches {} -> {}",
        r.env,
        r.steps,
        r.episodes,
        r.max_obs_deviation,
        r.max_state_deviation,
        r.reward_mismatches,
        r.done_mismatches,
        if r.passed() { "ok" } else { "MISMATCH" }
    );
    if let Some(step) = r.first_failure {
        outln!("first mismatch at step {step}");
    }
    Ok(())
}

fn run(cli: Cli) -> svqc_core::Result<()> {
    match cli.command {
        Cmd::Train { source, resume } => train(&source, resume.as_deref()),
        Cmd::Eval(args) => eval(&args),
        Cmd::Xcheck {
            env,
            steps,
            bridge,
            trace,
            seed,
        } => {
            let report = match (bridge, trace) {
                (Some(cmd), _) => xcheck_bridge(&env, steps, &cmd, seed)?,
                (None, Some(path)) => xcheck_trace(&env, steps, &Trace::load(&path)?)?,
                (None, None) => return Err(Error::Usage("xcheck needs --bridge or --trace".into())),
            };
            print_xcheck(&report)?;
            if report.passed() {
                Ok(())
            } else {
                Err(Error::Environment(format!("{env} deviates from the reference")))
            }
        }
        Cmd::Report { input, json } => {
            let r = report(&input)?;
            r.write_series(&input)?;
            if json {
                outln!("{}", serde_json::to_string_pretty(&r).map_err(|e| Error::Parse(e.to_string()))?);
            } else {
                out!("{}", r.to_text());
            }
            Ok(())
        }
        Cmd::SweepReuse { reuse, source } => {
            let base = load(&source, "cartpole-table3")?;
            let root = out_root(&base);
            for cfg in reuse_variants(&base, &reuse)? {
                eprintln!("training {} with seeds {:?}", cfg.label, cfg.seeds);
                run_experiment(&cfg, &root)?;
            }
            let r = report(&root)?;
            r.write_series(&root)?;
            out!("{}", r.to_text());
            Ok(())
        }
        Cmd::Preset { name: None } => {
            for p in PRESETS {
                outln!("{p}");
            }
            Ok(())
        }
        Cmd::Preset { name: Some(name) } => {
            out!("{}", preset(&name)?.to_toml()?);
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Usage(_) | Error::Parse(_) => 2,
        Error::Bridge(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
