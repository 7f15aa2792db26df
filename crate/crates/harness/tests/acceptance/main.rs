//! Acceptance suite: one line per criterion, `[PASS]` or `[FAIL]`, and a
//! non-zero exit status if any criterion fails.

mod oracle;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svqc_core::agent::{actor_objective, critic_loss, Batch};
use svqc_core::env::make_env;
use svqc_core::head::{head_forward, softmax, HeadParams};
use svqc_core::model::{AngleInit, Model, ModelSpec};
use svqc_core::quantum::{
    noisy_expectation, sample_expectation, shift_gradient, GateKind, GradientMode, NoiseModel, QubitState, Shots,
};
use svqc_harness::evaluate::{evaluate, EvalOptions};
use svqc_harness::experiment::{reuse_variants, run_experiment, SeedResult, CURVE_FILE};
use svqc_harness::report::{episodes_to_threshold, median_episodes, report, Report, RunSummary};
use svqc_harness::xcheck::{xcheck_bridge, xcheck_trace, Trace};
use svqc_harness::{preset, Checkpoint};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome::new(false, detail)
}

// ---------------------------------------------------------------- gradients

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut circuits = oracle::preset_circuits();
    while circuits.len() < 200 {
        circuits.push(oracle::random_circuit(&mut rng));
    }
    for spec in &circuits {
        let (x, theta) = oracle::random_inputs(spec, &mut rng);
        let (_, jac) = spec.jacobian_analytic(&x, &theta).unwrap();
        for p in 0..spec.n_angles() {
            let shift = shift_gradient(spec, &x, &theta, p).unwrap();
            let mut tp = theta.clone();
            tp[p] += h;
            let mut tm = theta.clone();
            tm[p] -= h;
            let (fp, fm) = (oracle::run(spec, &x, &tp), oracle::run(spec, &x, &tm));
            for q in 0..spec.n_qubits() {
                let fd = (fp[q] - fm[q]) / (2.0 * h);
                worst = worst
                    .max((jac[q][p] - shift[q]).abs())
                    .max((jac[q][p] - fd).abs())
                    .max((shift[q] - fd).abs());
            }
        }
    }
    let mut worst_ppo: f64 = 0.0;
    let models = [
        (preset("cartpole-table3").unwrap().model, 4, 2),
        (preset("acrobot-table3").unwrap().model, 6, 3),
        (preset("cartpole-ibm").unwrap().model, 4, 2),
        (
            ModelSpec::Svqc {
                circuit: svqc_core::quantum::CircuitSpec::standard(8, svqc_core::quantum::Replication::Spatial { copies: 3 })
                    .unwrap(),
                reuse: 2,
                gradient: GradientMode::Shift,
                init: AngleInit::FULL_TURN,
            },
            8,
            4,
        ),
    ];
    for (i, (spec, n, k)) in models.iter().enumerate() {
        worst_ppo = worst_ppo.max(ppo_fd_error(spec, *n, *k, 100 + i as u64));
    }
    Outcome::new(
        worst < 1e-6 && worst_ppo < 1e-5,
        format!(
            "{} circuits, max pairwise gap {worst:.2e} (< 1e-6); PPO objective vs FD max gap {worst_ppo:.2e} (< 1e-5)",
            circuits.len()
        ),
    )
}

fn frozen_buffer(model: &Model, rng: &mut ChaCha8Rng, k: usize) -> Batch {
    let mut b = Batch::default();
    for _ in 0..8 {
        let x: Vec<f64> = (0..model.n_inputs()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let probs = softmax(&model.forward(&x).unwrap());
        let a = rng.random_range(0..k);
        b.old_probs.push((probs[a] * rng.random_range(0.7..1.3)).clamp(1e-3, 0.999));
        b.obs.push(x);
        b.actions.push(a);
        b.advantages.push(rng.random_range(-2.0..2.0));
        b.returns.push(rng.random_range(-5.0..5.0));
    }
    b
}

fn fd_gap(model: &Model, grad: &[f64], f: impl Fn(&Model) -> f64) -> f64 {
    let h = 1e-5;
    let p0 = model.params();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..p0.len() {
        let mut p = p0.clone();
        p[i] += h;
        probe.set_params(&p).unwrap();
        let up = f(&probe);
        p[i] -= 2.0 * h;
        probe.set_params(&p).unwrap();
        let down = f(&probe);
        worst = worst.max(((up - down) / (2.0 * h) - grad[i]).abs());
    }
    worst
}

fn ppo_fd_error(spec: &ModelSpec, n: usize, k: usize, seed: u64) -> f64 {
    let mut spec = spec.clone();
    if let ModelSpec::Svqc { init, .. } = &mut spec {
        *init = AngleInit::FULL_TURN;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actor = spec.build(n, k, &mut rng).unwrap();
    let critic = spec.build(n, 1, &mut rng).unwrap();
    let batch = frozen_buffer(&actor, &mut rng, k);
    let (_, ga) = actor_objective(&actor, &batch, 0.1, 0.0).unwrap();
    let (_, gc) = critic_loss(&critic, &batch).unwrap();
    let a = fd_gap(&actor, &ga, |m| actor_objective(m, &batch, 0.1, 0.0).unwrap().0);
    let c = fd_gap(&critic, &gc, |m| critic_loss(m, &batch).unwrap().0);
    a.max(c)
}

// ------------------------------------------------------------------- reuse

fn reuse_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let reuse = rng.random_range(1..=32);
        let n = rng.random_range(1..=8);
        let k = rng.random_range(1..=4);
        let mut head = HeadParams::<f64>::zeros(n, reuse, k).unwrap();
        for w in head.weights.iter_mut().chain(head.bias.iter_mut()) {
            *w = rng.random_range(-3.0..3.0);
        }
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        // duplicated outputs fed through the full layer, computed directly
        let width = n * reuse;
        let dup: Vec<f64> = (0..width).map(|i| y[i % n]).collect();
        let direct: Vec<f64> = (0..k)
            .map(|p| head.bias[p] + (0..width).map(|i| head.weights[p * width + i] * dup[i]).sum::<f64>())
            .collect();
        let single = HeadParams::from_parts(n, 1, head.summed_weights(), head.bias.clone()).unwrap();
        let summed = head_forward(&single, &y).unwrap();
        let lib = head_forward(&head, &y).unwrap();
        for p in 0..k {
            worst = worst.max((direct[p] - summed[p]).abs()).max((lib[p] - summed[p]).abs());
        }
    }
    Outcome::new(worst < 1e-12, format!("1000 instances, l in 1..=32, max gap {worst:.2e} (< 1e-12)"))
}

// ------------------------------------------------------------------- noise

fn noise_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let reps = 10_000;
    let shots = 1024u64;
    let p = 0.0116;
    let mut worst_bias_sigmas: f64 = 0.0;
    let mut worst_readout_sigmas: f64 = 0.0;
    let mut exact_gap: f64 = 0.0;
    for tilt in [0.0, 0.4, 1.1, 2.0, 2.9] {
        let state = QubitState::<f64>::zero().apply(GateKind::Ry, tilt).unwrap();
        let z = state.expectation_z();
        let mean = (0..reps).map(|_| sample_expectation(&state, shots, &mut rng).unwrap()).sum::<f64>() / reps as f64;
        let sigma = ((1.0 - z * z) / shots as f64 / reps as f64).sqrt().max(1e-12);
        worst_bias_sigmas = worst_bias_sigmas.max((mean - z).abs() / sigma);

        let model = NoiseModel {
            readout_p: p,
            gate_p: 0.0,
            shots: Shots::Count(shots),
        };
        let want = (1.0 - 2.0 * p) * z;
        let mean = (0..reps)
            .map(|_| noisy_expectation(&state, 1, &model, &mut rng).unwrap())
            .sum::<f64>()
            / reps as f64;
        let sigma = ((1.0 - want * want) / shots as f64 / reps as f64).sqrt();
        worst_readout_sigmas = worst_readout_sigmas.max((mean - want).abs() / sigma);
        let exact = NoiseModel {
            shots: Shots::Exact,
            ..model
        };
        exact_gap = exact_gap.max((noisy_expectation(&state, 1, &exact, &mut rng).unwrap() - want).abs());
    }
    Outcome::new(
        worst_bias_sigmas < 4.0 && worst_readout_sigmas < 3.0 && exact_gap < 1e-15,
        format!(
            "10^4 repetitions x 1024 shots: max bias {worst_bias_sigmas:.2} sigma (< 4); readout p = 0.0116 mean off (1-2p)<Z> by {worst_readout_sigmas:.2} sigma (< 3)"
        ),
    )
}

// ------------------------------------------------------------- environments

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect()
}

fn gymnasium_available() -> bool {
    Command::new("python3")
        .args(["-c", "import gymnasium"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn environment_equivalence() -> Outcome {
    let bridge: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "tests", "fixtures", "mock_bridge.py"]
        .iter()
        .collect();
    let live = gymnasium_available();
    let mut parts = Vec::new();
    let mut passed = true;
    for id in ["cartpole-v1", "acrobot-v1"] {
        let trace = Trace::load(&fixture(&format!("{id}.trace.json"))).unwrap();
        let r = xcheck_trace(id, 1000, &trace).unwrap();
        passed &= r.passed();
        parts.push(format!("{id} trace max dev {:.1e}", r.max_obs_deviation.max(r.max_state_deviation)));
        if live {
            match xcheck_bridge(id, 1000, &format!("python3 {}", bridge.display()), 1) {
                Ok(r) => {
                    passed &= r.passed();
                    parts.push(format!("{id} live max dev {:.1e}", r.max_obs_deviation.max(r.max_state_deviation)));
                }
                Err(e) => {
                    passed = false;
                    parts.push(format!("{id} live bridge error: {e}"));
                }
            }
        }
    }
    if !live {
        parts.push("live bridge skipped (gymnasium not importable)".into());
    }
    Outcome::new(passed, format!("1000 injected steps each; {}", parts.join(", ")))
}

// ---------------------------------------------------------- parameter counts

fn svqc_parts(name: &str, n: usize, k: usize) -> (usize, usize) {
    let model = preset(name).unwrap().model.build_zeros(n, k).unwrap();
    match model {
        Model::Svqc(m) => (m.angles.len(), m.head.param_count()),
        Model::Fcn(_) => unreachable!(),
    }
}

fn parameter_counts() -> Outcome {
    let svqc = preset("cartpole-table3").unwrap().model.build_zeros(4, 2).unwrap().param_count();
    let fcn = preset("cartpole-fcn").unwrap().model.build_zeros(4, 2).unwrap().param_count();
    let (acro_angles, acro_head) = svqc_parts("acrobot-ibm", 6, 3);
    let (lunar_angles, lunar_head) = svqc_parts("lunarlander-ibm", 8, 4);
    let (ibm_angles, ibm_head) = svqc_parts("cartpole-ibm", 4, 2);
    Outcome::new(
        svqc == 134
            && fcn == 4882
            && 10 * svqc <= fcn
            && acro_head == 21
            && acro_angles == 6
            && lunar_head == 100
            && lunar_angles == 24
            && ibm_head == 4
            && ibm_angles == 1,
        format!(
            "SVQC CartPole actor {svqc}, FCN actor {fcn} (ratio {:.1}); single-layer heads: CartPole {ibm_angles}+{ibm_head}, Acrobot {acro_angles}+{acro_head}, LunarLander {lunar_angles}+{lunar_head}",
            fcn as f64 / svqc as f64
        ),
    )
}

// ---------------------------------------------------------------- learning

struct Runs {
    root: PathBuf,
    report: Report,
    seconds: f64,
}

impl Runs {
    fn get(&self, label: &str) -> &RunSummary {
        self.report.runs.iter().find(|r| r.label == label).unwrap()
    }
}

fn train_presets(root: &Path, names: &[&str]) -> Runs {
    let start = Instant::now();
    std::thread::scope(|s| {
        for name in names {
            s.spawn(move || run_experiment(&preset(name).unwrap(), root).unwrap());
        }
    });
    Runs {
        root: root.to_path_buf(),
        report: report(root).unwrap(),
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn describe(r: &RunSummary) -> String {
    let hits: Vec<String> = r
        .seeds
        .iter()
        .map(|s| s.to_threshold.map_or_else(|| "-".into(), |v| v.to_string()))
        .collect();
    format!(
        "{}: solved {}/{}, episodes to threshold [{}], median {}",
        r.label,
        r.solved,
        r.seeds.len(),
        hits.join(" "),
        r.median_to_threshold.map_or_else(|| "not reached".into(), |m| m.to_string())
    )
}

fn cartpole_learning(runs: &Runs) -> Outcome {
    let r = runs.get("cartpole-table3");
    let median_ok = r.median_to_threshold.is_some_and(|m| m <= 300.0);
    Outcome::new(
        r.solved >= 3 && median_ok,
        format!("{} (need >= 3 solved, median <= 300)", describe(r)),
    )
}

fn acrobot_learning(runs: &Runs) -> Outcome {
    let r = runs.get("acrobot-table3");
    let reached = r.seeds.iter().filter(|s| s.to_threshold.is_some_and(|e| e <= 300)).count();
    Outcome::new(reached >= 3, format!("{} (need >= 3 of 5 reaching -100 within 300)", describe(r)))
}

fn sample_efficiency(runs: &Runs) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (svqc, fcn) in [("cartpole-table3", "cartpole-fcn"), ("acrobot-table3", "acrobot-fcn")] {
        let c = runs
            .report
            .comparisons
            .iter()
            .find(|c| c.svqc == svqc && c.fcn == fcn)
            .unwrap();
        let ok = c.speedup.is_some_and(|s| s >= 1.5);
        passed &= ok;
        let med = |m: Option<f64>| m.map_or_else(|| "not reached".into(), |v| v.to_string());
        parts.push(format!(
            "{}: SVQC {} vs FCN {} -> speedup {}",
            c.env,
            med(c.svqc_median),
            med(c.fcn_median),
            c.speedup.map_or_else(|| "n/a".into(), |s| format!("{}{s:.2}", if c.lower_bound { ">= " } else { "" }))
        ));
    }
    Outcome::new(passed, format!("{} (need >= 1.5 on both)", parts.join("; ")))
}

fn reuse_sweep(root: &Path) -> Outcome {
    let base = preset("cartpole-table3").unwrap();
    let variants = reuse_variants(&base, &[4, 8, 16, 32]).unwrap();
    let results: Vec<Vec<SeedResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = variants.iter().map(|cfg| s.spawn(move || run_experiment(cfg, root))).collect();
        handles.into_iter().map(|h| h.join().unwrap().unwrap()).collect()
    });
    let mut parts = Vec::new();
    let mut passed = true;
    for (cfg, res) in variants.iter().zip(&results) {
        let complete = res.iter().all(|r| {
            r.rewards.len() == cfg.trainer.max_episodes && r.dir.join(CURVE_FILE).is_file()
        });
        passed &= complete && res.len() == cfg.seeds.len();
        let hits: Vec<Option<usize>> = res.iter().map(|r| episodes_to_threshold(&r.rewards, 475.0)).collect();
        parts.push(format!(
            "l={} median {}",
            match &cfg.model {
                ModelSpec::Svqc { reuse, .. } => *reuse,
                ModelSpec::Fcn { .. } => 0,
            },
            median_episodes(&hits).map_or_else(|| "not reached".into(), |m| m.to_string())
        ));
    }
    Outcome::new(passed, format!("four curve sets emitted; {}", parts.join(", ")))
}

fn noisy_evaluation(root: &Path) -> Outcome {
    let cfg = preset("cartpole-ibm").unwrap();
    let results = run_experiment(&cfg, root).unwrap();
    let best = results
        .iter()
        .filter(|r| r.best_avg20.is_some())
        .max_by(|a, b| a.best_avg20.partial_cmp(&b.best_avg20).unwrap());
    let Some(best) = best else {
        return fail("no checkpoint was written");
    };
    let ck = Checkpoint::load(&best.dir.join("best.ckpt")).unwrap();
    let actor = ck.actor().unwrap();
    let mut env = make_env("cartpole-v0").unwrap();
    let exact = evaluate(&actor, env.as_mut(), &EvalOptions::default()).unwrap();
    let noisy = evaluate(
        &actor,
        env.as_mut(),
        &EvalOptions {
            noise: NoiseModel {
                readout_p: 0.0116,
                gate_p: 0.0,
                shots: Shots::Count(1024),
            },
            ..EvalOptions::default()
        },
    )
    .unwrap();
    let passed = exact.full.mean == 200.0 && exact.full.std == 0.0 && (185.0..=200.0).contains(&noisy.full.mean);
    Outcome::new(
        passed,
        format!(
            "cartpole-ibm seed {} best checkpoint (training avg20 {:.1}) on cartpole-v0: exact mean {:.2} std {:.2}; 1024 shots + readout 0.0116 mean {:.2} std {:.2} over {} episodes (need 200/0 and [185, 200])",
            best.seed,
            best.best_avg20.unwrap_or(f64::NAN),
            exact.full.mean,
            exact.full.std,
            noisy.full.mean,
            noisy.full.std,
            noisy.full.episodes
        ),
    )
}

// -------------------------------------------------------------------- main

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = f();
        let tag = if out.passed { "[PASS]" } else { "[FAIL]" };
        println!("{tag} {name} ({:.1}s): {}", start.elapsed().as_secs_f64(), out.detail);
        results.push((name, out));
    };
    run("gradient correctness", &mut gradient_correctness);
    run("reuse identity", &mut reuse_identity);
    run("shot and readout statistics", &mut noise_statistics);
    run("environment oracle equivalence", &mut environment_equivalence);
    run("parameter counts", &mut parameter_counts);

    let runs = train_presets(
        &dir.path().join("learning"),
        &["cartpole-table3", "cartpole-fcn", "acrobot-table3", "acrobot-fcn"],
    );
    eprintln!("learning runs finished in {:.0}s under {}", runs.seconds, runs.root.display());
    run("cartpole-v1 learning", &mut || cartpole_learning(&runs));
    run("acrobot-v1 learning", &mut || acrobot_learning(&runs));
    run("sample-efficiency ordering", &mut || sample_efficiency(&runs));
    let sweep_root = dir.path().join("reuse");
    run("reuse ablation", &mut || reuse_sweep(&sweep_root));
    let eval_root = dir.path().join("noisy");
    run("noisy evaluation", &mut || noisy_evaluation(&eval_root));

    let failed = results.iter().filter(|(_, o)| !o.passed).count();
    println!("{} of {} acceptance criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
