use std::path::Path;

use svqc_core::env::make_env;
use svqc_harness::curve::{read_curve, CurveRow, CurveWriter};
use svqc_harness::evaluate::{evaluate, EvalOptions};
use svqc_harness::experiment::{
    resume_seed, run_experiment, seed_dir, train_seed, CURVE_FILE, FINAL_CHECKPOINT, RUN_FILE,
};
use svqc_harness::report::report;
use svqc_harness::{preset, Checkpoint, ExperimentConfig};

fn short(name: &str, episodes: usize) -> ExperimentConfig {
    let mut cfg = preset(name).unwrap();
    cfg.seeds = vec![3];
    cfg.trainer.max_episodes = episodes;
    cfg
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn checkpoint_file_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short("cartpole-table3", 3);
    train_seed(&cfg, 3, dir.path()).unwrap();
    let path = dir.path().join(FINAL_CHECKPOINT);
    let text = std::fs::read_to_string(&path).unwrap();
    let ck = Checkpoint::load(&path).unwrap();
    assert_eq!(ck.to_toml().unwrap(), text);
    assert_eq!(ck.episode, 3);
    assert_eq!(ck.config, cfg);
    let again = dir.path().join("copy.ckpt");
    ck.save(&again).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), text.as_bytes());
}

#[test]
fn resumed_run_matches_uninterrupted_run_bit_for_bit() {
    for name in ["cartpole-table3", "acrobot-fcn"] {
        let whole = tempfile::tempdir().unwrap();
        let full = train_seed(&short(name, 10), 3, whole.path()).unwrap();

        let split = tempfile::tempdir().unwrap();
        train_seed(&short(name, 4), 3, split.path()).unwrap();
        let mut ck = Checkpoint::load(&split.path().join(FINAL_CHECKPOINT)).unwrap();
        ck.config.trainer.max_episodes = 10;
        let resumed = resume_seed(&ck, split.path()).unwrap();

        assert_eq!(bits(&resumed.rewards), bits(&full.rewards), "{name}");
        let a = Checkpoint::load(&whole.path().join(FINAL_CHECKPOINT)).unwrap();
        let b = Checkpoint::load(&split.path().join(FINAL_CHECKPOINT)).unwrap();
        assert_eq!(a.actor, b.actor, "{name}");
        assert_eq!(a.critic, b.critic, "{name}");
        assert_eq!(a.actor_opt, b.actor_opt, "{name}");
        assert_eq!(a.rng, b.rng, "{name}");
    }
}

#[test]
fn resume_discards_curve_rows_written_after_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    train_seed(&short("cartpole-table3", 5), 3, dir.path()).unwrap();
    let curve = dir.path().join(CURVE_FILE);
    let mut w = CurveWriter::append(&curve).unwrap();
    for episode in 6..9 {
        w.write(&CurveRow {
            episode,
            reward: -1.0,
            avg20: -1.0,
            steps: 1,
            wall_ms: 0,
        })
        .unwrap();
    }
    drop(w);
    assert_eq!(read_curve(&curve).unwrap().len(), 8);

    let mut ck = Checkpoint::load(&dir.path().join(FINAL_CHECKPOINT)).unwrap();
    ck.config.trainer.max_episodes = 9;
    let resumed = resume_seed(&ck, dir.path()).unwrap();
    let rows = read_curve(&curve).unwrap();
    assert_eq!(rows.iter().map(|r| r.episode).collect::<Vec<_>>(), (1..=9).collect::<Vec<_>>());
    assert_eq!(bits(&rows.iter().map(|r| r.reward).collect::<Vec<_>>()), bits(&resumed.rewards));
}

#[test]
fn single_episode_run_writes_one_row_and_a_readable_report() {
    let root = tempfile::tempdir().unwrap();
    let cfg = short("acrobot-table3", 1);
    let results = run_experiment(&cfg, root.path()).unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!(results[0].rewards.len(), 1);
    assert_eq!(results[0].best_avg20, None);
    let run_dir = root.path().join(&cfg.label);
    assert!(run_dir.join(RUN_FILE).is_file());
    let rows = read_curve(&seed_dir(&run_dir, 3).join(CURVE_FILE)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].episode, 1);
    let r = report(root.path()).unwrap();
    assert_eq!(r.runs.len(), 1);
    assert_eq!(r.runs[0].solved, 0);
    assert!(r.to_text().contains("acrobot-table3"));
}

#[test]
fn fingerprint_tracks_every_setting_but_seeds() {
    let base = preset("cartpole-table3").unwrap();
    let fp = base.fingerprint().unwrap();
    let mut reseeded = base.clone();
    reseeded.seeds = vec![10, 11];
    reseeded.out = Some("elsewhere".into());
    assert_eq!(reseeded.fingerprint().unwrap(), fp);

    let tweaks: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
        Box::new(|c| c.trainer.actor_lr = 0.0011),
        Box::new(|c| c.trainer.gamma = 0.98),
        Box::new(|c| c.trainer.update_horizon = 129),
        Box::new(|c| c.trainer.normalize_advantages = true),
        Box::new(|c| c.noise.readout_p = 0.01),
        Box::new(|c| c.label = "other".into()),
        Box::new(|c| c.env = "cartpole-v0".into()),
        Box::new(|c| c.model = preset("cartpole-fcn").unwrap().model),
    ];
    for (i, tweak) in tweaks.iter().enumerate() {
        let mut c = base.clone();
        tweak(&mut c);
        assert_ne!(c.fingerprint().unwrap(), fp, "tweak {i}");
    }
}

#[test]
fn config_files_round_trip_and_reject_unknown_keys() {
    for name in svqc_harness::PRESETS {
        let cfg = preset(name).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg, "{name}");
    }
    let text = preset("cartpole-table3").unwrap().to_toml().unwrap();
    assert!(ExperimentConfig::from_toml(&format!("bogus = 1\n{text}")).is_err());
    assert!(ExperimentConfig::load(Path::new("/nonexistent/config.toml")).is_err());
}

#[test]
fn uniform_policy_on_acrobot_scores_near_the_floor() {
    let cfg = preset("acrobot-table3").unwrap();
    let actor = cfg.model.build_zeros(6, 3).unwrap();
    let mut env = make_env("acrobot-v1").unwrap();
    let r = evaluate(
        &actor,
        env.as_mut(),
        &EvalOptions {
            sample: true,
            ..EvalOptions::default()
        },
    )
    .unwrap();
    assert_eq!(r.rewards.len(), 20);
    assert!(r.full.mean < -450.0, "mean {}", r.full.mean);
    assert!(r.rewards.iter().all(|&x| (-500.0..=0.0).contains(&x)));
}

#[test]
fn evaluating_on_a_mismatched_environment_is_an_error() {
    let actor = preset("cartpole-table3").unwrap().model.build_zeros(4, 2).unwrap();
    let mut env = make_env("acrobot-v1").unwrap();
    assert!(evaluate(&actor, env.as_mut(), &EvalOptions::default()).is_err());
}
