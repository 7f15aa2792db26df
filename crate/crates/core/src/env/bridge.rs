//! Client side of the environment bridge: a child process speaking one JSON
//! object per line on stdin/stdout.
//!
//! Requests carry `seq` and `cmd` (`hello`, `spec`, `reset`, `step`,
//! `inject_state`, `close`); every request gets exactly one response line
//! echoing `seq` with an `ok` flag and either payload fields or `error`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EnvSpec, Environment, Step};
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;
pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);
pub const REQUEST_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub seq: u64,
    pub cmd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<f64>>,
}

impl Request {
    pub fn new(cmd: &str) -> Self {
        Request {
            cmd: cmd.to_string(),
            ..Request::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub seq: u64,
    pub ok: bool,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub version: Option<u32>,
    #[serde(default)]
    pub obs: Option<Vec<f64>>,
    #[serde(default)]
    pub state: Option<Vec<f64>>,
    #[serde(default)]
    pub reward: Option<f64>,
    #[serde(default)]
    pub terminated: Option<bool>,
    #[serde(default)]
    pub truncated: Option<bool>,
    #[serde(default)]
    pub done: Option<bool>,
    #[serde(default)]
    pub obs_dim: Option<usize>,
    #[serde(default)]
    pub n_actions: Option<usize>,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

/// Reference-suite id of a native environment id.
pub fn remote_id(native: &str) -> Option<&'static str> {
    match native {
        "cartpole-v0" => Some("CartPole-v0"),
        "cartpole-v1" => Some("CartPole-v1"),
        "acrobot-v1" => Some("Acrobot-v1"),
        _ => None,
    }
}

/// A running bridge process.
pub struct BridgeClient {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_seq: u64,
}

impl BridgeClient {
    /// Spawn `command` through the shell and complete the version handshake.
    pub fn launch(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Bridge(format!("cannot launch `{command}`: {e}")))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut client = BridgeClient {
            child,
            stdin,
            lines: rx,
            next_seq: 0,
        };
        let hello = client.call_with_timeout(Request::new("hello"), HANDSHAKE_TIMEOUT)?;
        match hello.version {
            Some(PROTOCOL_VERSION) => Ok(client),
            other => Err(Error::Bridge(format!(
                "bridge speaks protocol {other:?}, expected {PROTOCOL_VERSION}"
            ))),
        }
    }

    /// Send one request and wait for its response; `ok = false` becomes an error.
    pub fn call(&mut self, request: Request) -> Result<Response> {
        self.call_with_timeout(request, REQUEST_TIMEOUT)
    }

    fn call_with_timeout(&mut self, mut request: Request, timeout: Duration) -> Result<Response> {
        request.seq = self.next_seq;
        self.next_seq += 1;
        let line = serde_json::to_string(&request).map_err(|e| Error::Bridge(e.to_string()))?;
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Bridge("bridge already closed".into()))?;
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Bridge(format!("write to bridge failed: {e}")))?;
        let reply = match self.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(Error::Bridge(format!("read from bridge failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Bridge(format!(
                    "no response to `{}` within {} s",
                    request.cmd,
                    timeout.as_secs()
                )))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::Bridge(format!("bridge exited before answering `{}`", request.cmd)))
            }
        };
        let response: Response = serde_json::from_str(&reply)
            .map_err(|e| Error::Bridge(format!("malformed response `{reply}`: {e}")))?;
        if response.seq != request.seq {
            return Err(Error::Bridge(format!(
                "response `{reply}` answers seq {}, expected {}",
                response.seq, request.seq
            )));
        }
        if !response.ok {
            return Err(Error::Bridge(format!(
                "`{}` failed: {}",
                request.cmd,
                response.error.as_deref().unwrap_or("no error text")
            )));
        }
        Ok(response)
    }

    pub fn close(&mut self) {
        if self.stdin.is_some() {
            let _ = self.call_with_timeout(Request::new("close"), Duration::from_secs(2));
            self.stdin = None;
        }
        if matches!(self.child.try_wait(), Ok(None)) {
            thread::sleep(Duration::from_millis(50));
            if matches!(self.child.try_wait(), Ok(None)) {
                let _ = self.child.kill();
            }
        }
        let _ = self.child.wait();
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        self.close();
    }
}

fn field<T>(value: Option<T>, name: &str, cmd: &str) -> Result<T> {
    value.ok_or_else(|| Error::Bridge(format!("`{cmd}` response lacks `{name}`")))
}

/// An environment served by a bridge process.
pub struct BridgeEnv {
    client: BridgeClient,
    remote: String,
    spec: EnvSpec,
    state: Vec<f64>,
}

impl BridgeEnv {
    pub fn launch(command: &str, remote: &str) -> Result<Self> {
        let mut client = BridgeClient::launch(command)?;
        let mut req = Request::new("spec");
        req.env = Some(remote.to_string());
        let r = client.call(req)?;
        let id = format!("bridge:{remote}");
        let known = EnvSpec::builtin(&id).ok();
        let spec = EnvSpec {
            obs_dim: field(r.obs_dim, "obs_dim", "spec")?,
            n_actions: field(r.n_actions, "n_actions", "spec")?,
            max_steps: r
                .max_steps
                .or(known.as_ref().map(|k| k.max_steps))
                .unwrap_or(usize::MAX),
            solve_threshold: known.as_ref().and_then(|k| k.solve_threshold),
            solve_window: known.as_ref().map_or(100, |k| k.solve_window),
            id,
        };
        Ok(BridgeEnv {
            client,
            remote: remote.to_string(),
            spec,
            state: Vec::new(),
        })
    }

    pub fn client(&mut self) -> &mut BridgeClient {
        &mut self.client
    }

    fn observation(&self, r: &Response, cmd: &str) -> Result<Vec<f64>> {
        let obs = field(r.obs.clone(), "obs", cmd)?;
        if obs.len() != self.spec.obs_dim {
            return Err(Error::Bridge(format!(
                "`{cmd}` returned {} observation components, expected {}",
                obs.len(),
                self.spec.obs_dim
            )));
        }
        Ok(obs)
    }
}

impl Environment for BridgeEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut req = Request::new("reset");
        req.env = Some(self.remote.clone());
        req.seed = Some(seed);
        let r = self.client.call(req)?;
        self.state = r.state.clone().unwrap_or_default();
        self.observation(&r, "reset")
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let mut req = Request::new("step");
        req.action = Some(action);
        let r = self.client.call(req)?;
        self.state = r.state.clone().unwrap_or_default();
        let terminated = field(r.terminated, "terminated", "step")?;
        let truncated = r.truncated.unwrap_or(false);
        Ok(Step {
            obs: self.observation(&r, "step")?,
            reward: field(r.reward, "reward", "step")?,
            terminated,
            truncated,
        })
    }

    fn inject_state(&mut self, raw: &[f64]) -> Result<Vec<f64>> {
        let mut req = Request::new("inject_state");
        req.state = Some(raw.to_vec());
        let r = self.client.call(req)?;
        self.state = raw.to_vec();
        self.observation(&r, "inject_state")
    }

    fn raw_state(&self) -> Vec<f64> {
        self.state.clone()
    }
}
