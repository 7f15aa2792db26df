use std::path::PathBuf;
use std::process::Command;

use svqc_core::env::{make_env, BridgeClient, BridgeEnv, Environment, Request};
use svqc_core::Error;

fn python_has(module: &str) -> bool {
    Command::new("python3")
        .args(["-c", &format!("import {module}")])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn bridge(flags: &str) -> Option<String> {
    if !python_has("json") {
        eprintln!("python3 not available; skipping");
        return None;
    }
    let script: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", "mock_bridge.py"].iter().collect();
    Some(format!("python3 {} {flags}", script.display()))
}

fn bridge_message(err: Error) -> String {
    match err {
        Error::Bridge(msg) => msg,
        other => panic!("expected a bridge error, got {other:?}"),
    }
}

#[test]
fn echo_environment_round_trip() {
    let Some(cmd) = bridge("") else { return };
    let mut env = BridgeEnv::launch(&cmd, "Echo-v0").unwrap();
    assert_eq!(env.spec().id, "bridge:Echo-v0");
    assert_eq!((env.spec().obs_dim, env.spec().n_actions, env.spec().max_steps), (2, 3, 5));
    assert_eq!(env.reset(10).unwrap(), vec![3.0, 0.0]);
    let mut total = 0.0;
    for t in 0..5 {
        let step = env.step(2).unwrap();
        assert_eq!(step.obs, vec![3.0, 2.0]);
        total += step.reward;
        assert_eq!(step.terminated, t == 4);
    }
    assert_eq!(total, 10.0);
    assert_eq!(env.inject_state(&[0.5, -0.25]).unwrap(), vec![0.5, -0.25]);
    assert_eq!(env.raw_state(), vec![0.5, -0.25]);
}

#[test]
fn floats_survive_the_wire_exactly() {
    let Some(cmd) = bridge("") else { return };
    let mut env = BridgeEnv::launch(&cmd, "Echo-v0").unwrap();
    env.reset(0).unwrap();
    for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456.78901234567, f64::MIN_POSITIVE] {
        let back = env.inject_state(&[v, -v]).unwrap();
        assert_eq!(back[0].to_bits(), v.to_bits());
        assert_eq!(back[1].to_bits(), (-v).to_bits());
    }
}

#[test]
fn remote_errors_keep_the_process_alive() {
    let Some(cmd) = bridge("") else { return };
    let mut env = BridgeEnv::launch(&cmd, "Echo-v0").unwrap();
    env.reset(1).unwrap();
    let msg = bridge_message(env.step(7).unwrap_err());
    assert!(msg.contains("out of range"), "{msg}");
    assert!(env.step(0).is_ok());
    let msg = bridge_message(env.client().call(Request::new("fly")).unwrap_err());
    assert!(msg.contains("unknown cmd"), "{msg}");
    assert!(env.step(1).is_ok());
}

#[test]
fn unknown_remote_environment_is_reported() {
    let Some(cmd) = bridge("") else { return };
    let msg = bridge_message(BridgeEnv::launch(&cmd, "Nope-v9").err().unwrap());
    assert!(msg.contains("unknown environment"), "{msg}");
}

#[test]
fn version_mismatch_is_rejected() {
    let Some(cmd) = bridge("--version 7") else { return };
    let msg = bridge_message(BridgeClient::launch(&cmd).err().unwrap());
    assert!(msg.contains("protocol Some(7)"), "{msg}");
}

#[test]
fn malformed_response_names_the_offending_line() {
    let Some(cmd) = bridge("--garbage-at 2") else { return };
    let mut env = BridgeEnv::launch(&cmd, "Echo-v0").unwrap();
    let msg = bridge_message(env.reset(0).unwrap_err());
    assert!(msg.contains("this is not json"), "{msg}");
}

#[test]
fn out_of_order_response_is_a_protocol_violation() {
    let Some(cmd) = bridge("--wrong-seq-at 1") else { return };
    let msg = bridge_message(BridgeEnv::launch(&cmd, "Echo-v0").err().unwrap());
    assert!(msg.contains("answers seq 101, expected 1"), "{msg}");
}

#[test]
fn bridge_exit_is_reported() {
    let Some(cmd) = bridge("--exit-at 2") else { return };
    let mut env = BridgeEnv::launch(&cmd, "Echo-v0").unwrap();
    let msg = bridge_message(env.reset(0).unwrap_err());
    assert!(msg.contains("exited before answering `reset`"), "{msg}");
}

#[test]
fn missing_program_fails_to_launch() {
    let msg = bridge_message(BridgeClient::launch("exec /nonexistent/bridge-binary").err().unwrap());
    assert!(msg.contains("exited before answering `hello`"), "{msg}");
}

#[test]
fn sequence_numbers_are_strictly_increasing() {
    let Some(cmd) = bridge("") else { return };
    let mut client = BridgeClient::launch(&cmd).unwrap();
    let mut last = 0;
    for _ in 0..200 {
        let r = client.call(Request::new("hello")).unwrap();
        assert!(r.seq > last);
        last = r.seq;
    }
}

#[test]
fn gym_cartpole_matches_native_under_injection() {
    if !python_has("gymnasium") {
        eprintln!("gymnasium not available; skipping");
        return;
    }
    let Some(cmd) = bridge("") else { return };
    let mut remote = BridgeEnv::launch(&cmd, "CartPole-v1").unwrap();
    let mut native = make_env("cartpole-v1").unwrap();
    remote.reset(3).unwrap();
    native.reset(3).unwrap();
    let obs = remote.inject_state(&native.raw_state()).unwrap();
    assert_eq!(obs, native.raw_state());
    for t in 0..30 {
        let a = t % 2;
        let (r, n) = (remote.step(a).unwrap(), native.step(a).unwrap());
        for (x, y) in r.obs.iter().zip(&n.obs) {
            assert!((x - y).abs() < 1e-12, "step {t}: {x} vs {y}");
        }
        assert_eq!((r.reward, r.terminated, r.truncated), (n.reward, n.terminated, n.truncated));
        if n.done() {
            break;
        }
    }
}
