"""Line-protocol environment server used by the bridge tests.

Serves a tiny deterministic `Echo-v0` environment, plus CartPole and Acrobot
through gymnasium when it is importable. Flags make it misbehave in
specific ways so the client's error paths can be exercised:

    --version N        answer hello with protocol version N
    --silent           never answer anything
    --garbage-at K     answer request K with a line that is not JSON
    --wrong-seq-at K   answer request K with the wrong sequence number
    --exit-at K        exit without answering request K
"""

import argparse
import json
import math
import sys

ECHO_STEPS = 5


class Echo:
    obs_dim = 2
    n_actions = 3
    max_steps = ECHO_STEPS

    def reset(self, seed):
        self.state = [float(seed % 7), 0.0]
        self.t = 0
        return list(self.state)

    def step(self, action):
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range")
        self.t += 1
        self.state = [self.state[0], float(action)]
        return list(self.state), float(action), self.t >= ECHO_STEPS, False

    def inject(self, state):
        if len(state) != 2:
            raise ValueError("Echo-v0 state has 2 components")
        self.state = list(state)
        return list(self.state)

    def raw(self):
        return list(self.state)


class Gym:
    def __init__(self, remote):
        import gymnasium
        import numpy

        self.np = numpy
        self.remote = remote
        self.env = gymnasium.make(remote)
        self.obs_dim = self.env.observation_space.shape[0]
        self.n_actions = int(self.env.action_space.n)
        self.max_steps = self.env.spec.max_episode_steps

    def obs(self):
        s = self.raw()
        if self.remote.startswith("Acrobot"):
            return [math.cos(s[0]), math.sin(s[0]), math.cos(s[1]), math.sin(s[1]), s[2], s[3]]
        return s

    def reset(self, seed):
        self.env.reset(seed=seed)
        return self.obs()

    def step(self, action):
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range")
        _, reward, terminated, truncated, _ = self.env.step(action)
        return self.obs(), float(reward), bool(terminated), bool(truncated)

    def inject(self, state):
        if len(state) != 4:
            raise ValueError(f"{self.remote} state has 4 components")
        self.env.unwrapped.state = self.np.array(state, dtype=self.np.float64)
        return self.obs()

    def raw(self):
        return [float(v) for v in self.env.unwrapped.state]


def make(remote):
    if remote == "Echo-v0":
        return Echo()
    if remote in ("CartPole-v0", "CartPole-v1", "Acrobot-v1"):
        return Gym(remote)
    raise ValueError(f"unknown environment {remote}")


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--version", type=int, default=1)
    p.add_argument("--silent", action="store_true")
    p.add_argument("--garbage-at", type=int, default=-1)
    p.add_argument("--wrong-seq-at", type=int, default=-1)
    p.add_argument("--exit-at", type=int, default=-1)
    args = p.parse_args()

    envs = {}
    current = None
    for count, line in enumerate(sys.stdin):
        if args.silent:
            continue
        if count == args.exit_at:
            return
        if count == args.garbage_at:
            print("this is not json", flush=True)
            continue
        seq = None
        try:
            req = json.loads(line)
            seq = req.get("seq")
            cmd = req.get("cmd")
            out = {}
            if cmd == "hello":
                out["version"] = args.version
            elif cmd == "spec":
                env = envs.setdefault(req["env"], make(req["env"]))
                out.update(obs_dim=env.obs_dim, n_actions=env.n_actions, max_steps=env.max_steps)
            elif cmd == "reset":
                current = envs.setdefault(req["env"], make(req["env"]))
                out["obs"] = current.reset(req.get("seed", 0))
                out["state"] = current.raw()
            elif cmd == "step":
                if current is None:
                    raise ValueError("step before reset")
                obs, reward, terminated, truncated = current.step(req["action"])
                out.update(
                    obs=obs,
                    state=current.raw(),
                    reward=reward,
                    terminated=terminated,
                    truncated=truncated,
                    done=terminated or truncated,
                )
            elif cmd == "inject_state":
                if current is None:
                    raise ValueError("inject_state before reset")
                out["obs"] = current.inject(req["state"])
            elif cmd == "close":
                print(json.dumps({"seq": seq, "ok": True}), flush=True)
                return
            else:
                raise ValueError(f"unknown cmd {cmd!r}")
            resp = {"seq": seq, "ok": True, **out}
        except Exception as e:
            resp = {"seq": seq, "ok": False, "error": str(e)}
        if count == args.wrong_seq_at:
            resp["seq"] = (seq or 0) + 100
        print(json.dumps(resp), flush=True)


if __name__ == "__main__":
    main()
