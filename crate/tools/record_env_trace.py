"""Record a reference trajectory from gymnasium for the native environments.

Each step stores the raw physical state before and after the action, the
observation computed from the post-step state in double precision, the
reward and both end flags. Episodes are reset with consecutive seeds and
actions are drawn uniformly from a fixed generator, except that on
even-numbered Acrobot episodes 70% of the actions follow the first joint's
swing so the trace also contains terminations.

    python3 tools/record_env_trace.py CartPole-v1 1000 crates/harness/tests/fixtures/cartpole-v1.trace.json
"""

import argparse
import json
import math

import gymnasium as gym
import numpy as np

NATIVE_IDS = {"CartPole-v0": "cartpole-v0", "CartPole-v1": "cartpole-v1", "Acrobot-v1": "acrobot-v1"}


def observation(remote, state):
    if remote.startswith("Acrobot"):
        t1, t2, w1, w2 = state
        return [math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), w1, w2]
    return list(state)


def choose(remote, env, rng, episode):
    n = env.action_space.n
    if remote.startswith("Acrobot") and episode % 2 == 0 and rng.random() >= 0.3:
        state = env.unwrapped.state
        return 2 if state[2] + state[3] > 0 else 0
    return int(rng.integers(n))


def raw_state(env):
    return [float(v) for v in env.unwrapped.state]


def record(remote, steps, seed):
    env = gym.make(remote)
    rng = np.random.default_rng(seed)
    records = []
    episode = 0
    env.reset(seed=seed + episode)
    start = True
    while len(records) < steps:
        state = raw_state(env)
        action = choose(remote, env, rng, episode)
        _, reward, terminated, truncated, _ = env.step(action)
        after = raw_state(env)
        records.append(
            {
                "reset": start,
                "state": state,
                "action": action,
                "next_state": after,
                "obs": observation(remote, after),
                "reward": float(reward),
                "terminated": bool(terminated),
                "truncated": bool(truncated),
            }
        )
        start = False
        if terminated or truncated:
            episode += 1
            env.reset(seed=seed + episode)
            start = True
    return {
        "env": NATIVE_IDS[remote],
        "source": f"gymnasium {gym.__version__} {remote}",
        "seed": seed,
        "steps": records,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("env", choices=sorted(NATIVE_IDS))
    parser.add_argument("steps", type=int)
    parser.add_argument("out")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    trace = record(args.env, args.steps, args.seed)
    with open(args.out, "w") as f:
        json.dump(trace, f, separators=(",", ":"))
        f.write("\n")


if __name__ == "__main__":
    main()
