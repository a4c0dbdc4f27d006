"""Line-delimited JSON environment server over stdio.

Foreign-language bindings spawn `python3 -m quadlab.envserver` and drive
one environment through it. Every request and response is a single JSON
object on its own line. Numbers cross the boundary as JSON doubles with
shortest round-trip formatting, so binary64 values survive unchanged.

Requests:
    {"op": "init", "config": {...}}    -> {"ok": true, "observation_length": 421, ...}
    {"op": "reset", "phase"?, "rsi"?}  -> {"ok": true, "observation": [...]}
    {"op": "step", "action": [12]}     -> {"ok": true, "observation": [...],
                                           "reward", "terminated", "truncated", "info"}
    {"op": "close"}                    -> {"ok": true} and the process exits

Errors come back as {"ok": false, "error": message, "type": class name}.

Run with `--trace N` to print a native N-step rollout (deterministic
action schedule) instead of serving; used to validate binding fidelity.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from quadlab.env import ACTION_WIDTH, OBSERVATION_LENGTH, EpisodeConfig, QuadEnv
from quadlab.morphology import (
    ConfigurationError,
    MorphologyConfig,
    preset_morphology,
)
from quadlab.randomization import RandomizationConfig
from quadlab.training import make_motion


def build_env(config: dict) -> QuadEnv:
    """Environment from a plain configuration document."""
    mode = config.get("mode", "fixed")
    gait = config.get("gait", "pace")
    motion = make_motion(gait)
    source = preset_morphology("A1")
    kw: dict = {
        "seed": int(config.get("seed", 0)),
        "kinematic_override": bool(config.get("kinematic_override", False)),
    }
    if "horizon" in config:
        kw["episode_config"] = EpisodeConfig(horizon=int(config["horizon"]))
    rand = config.get("randomization")
    if rand == "disabled":
        kw["randomization"] = RandomizationConfig.disabled()
    elif isinstance(rand, dict):
        kw["randomization"] = RandomizationConfig(**{
            k: tuple(v) if isinstance(v, list) else v for k, v in rand.items()})
    if mode == "fixed":
        kw["morphology"] = preset_morphology(config.get("preset", "A1"))
    elif mode == "generalized":
        morph = config.get("morphology", {})
        kw["morphology_config"] = MorphologyConfig(**{
            k: tuple(v) if isinstance(v, list) else v for k, v in morph.items()})
    else:
        raise ConfigurationError(f"unknown mode: {mode!r}")
    return QuadEnv(motion, source, **kw)


def _parse_action(payload) -> np.ndarray:
    action = np.asarray(payload, dtype=float)
    if action.shape != (ACTION_WIDTH,):
        raise ConfigurationError(
            f"action must have length {ACTION_WIDTH}, got shape {action.shape}")
    return action


def handle(env: QuadEnv | None, request: dict):
    """One request; returns (response dict, env, keep_running)."""
    op = request.get("op")
    if op == "init":
        env = build_env(request.get("config", {}))
        return ({"ok": True, "observation_length": OBSERVATION_LENGTH,
                 "action_length": ACTION_WIDTH}, env, True)
    if op == "close":
        return ({"ok": True}, env, False)
    if env is None:
        raise ConfigurationError("send an init request first")
    if op == "reset":
        obs = env.reset(phase=request.get("phase"), rsi=request.get("rsi"))
        return ({"ok": True, "observation": obs.tolist()}, env, True)
    if op == "step":
        obs, reward, done, info = env.step(_parse_action(request.get("action")))
        return ({"ok": True, "observation": obs.tolist(), "reward": reward,
                 "terminated": info["terminated"],
                 "truncated": info["truncated"],
                 "info": {"phase": info["phase"], "steps": info["steps"]}},
                env, True)
    raise ConfigurationError(f"unknown op: {op!r}")


def serve(stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    env: QuadEnv | None = None
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            response, env, keep = handle(env, json.loads(line))
        except Exception as exc:  # surface any failure to the client
            response, keep = {"ok": False, "error": str(exc),
                              "type": type(exc).__name__}, True
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
        if not keep:
            return


def trace_actions(step: int) -> list[float]:
    """Deterministic action schedule shared with the binding test suite.

    Multiplicative congruential generator chosen so every intermediate
    product stays below 2**53: the schedule is reproducible exactly in
    any language whose numbers are binary64 floats.
    """
    out = []
    x = (step * 2654435761) % 2147483646 + 1
    for _ in range(ACTION_WIDTH):
        x = (x * 48271) % 2147483647
        out.append(x / 2147483647 * 0.4 - 0.2)
    return out


def native_trace(config: dict, steps: int) -> dict:
    """Reference rollout used to check binding fidelity bit for bit."""
    env = build_env(config)
    obs = env.reset(rsi=False)
    rows = [{"observation": obs.tolist()}]
    for t in range(steps):
        action = trace_actions(t)
        obs, reward, done, info = env.step(np.asarray(action))
        rows.append({"observation": obs.tolist(), "reward": reward,
                     "terminated": info["terminated"],
                     "truncated": info["truncated"]})
        if done:
            obs = env.reset(rsi=False)
            rows.append({"observation": obs.tolist(), "reset": True})
    return {"steps": steps, "rows": rows}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="quadlab-envserver")
    parser.add_argument("--trace", type=int, metavar="N",
                        help="print an N-step native trace and exit")
    parser.add_argument("--config", help="JSON config document (trace mode)")
    args = parser.parse_args(argv)
    if args.trace is not None:
        config = json.loads(args.config) if args.config else {}
        json.dump(native_trace(config, args.trace), sys.stdout)
        sys.stdout.write("\n")
        return 0
    serve()
    return 0


if __name__ == "__main__":
    sys.exit(main())
