"""Evaluation harness: normalized returns, parameter sweeps, and the
preset zero-shot suite.

A policy is passed in as a plain callable mapping a flat observation to
a 12-vector action; `policy_fn` wraps a network plus its observation
normalizer into that form.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import torch

from quadlab.env import EpisodeConfig, QuadEnv
from quadlab.morphology import (
    PRESET_NAMES,
    ConfigurationError,
    Morphology,
    MorphologyConfig,
    preset_morphology,
    sample_morphology,
)
from quadlab.motions import ReferenceMotion
from quadlab.policy import ActorCritic, RunningNormalizer
from quadlab.randomization import RandomizationConfig

# the nominal base density, for converting body-mass factors to densities
_NOMINAL_DENSITY = MorphologyConfig.nominal_point().base_density_range[0]

# sweep axes, their training-range boundaries, and which knob they turn
MORPHOLOGY_AXES = {
    "size_factor": (0.8, 1.2),
    "calf_length": (0.11, 0.33),  # m
    "thigh_length": (0.15, 0.25),  # m, ratio bounds times the nominal calf
    "body_mass": (400.0 / _NOMINAL_DENSITY, 1200.0 / _NOMINAL_DENSITY),
}
DYNAMICS_AXES = {
    "ground_friction": (0.5, 1.25),
    "motor_strength": (0.8, 1.2),
    "pd_gain": (0.7, 1.3),
    "motor_damping": (0.0, 0.05),
    "latency": (0.0, 0.04),
    "link_mass": (0.8, 1.2),
}
SWEEP_AXES = tuple(MORPHOLOGY_AXES) + tuple(DYNAMICS_AXES)


@dataclass(frozen=True)
class EvalResult:
    mean: float
    std: float
    returns: tuple[float, ...]


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    mean: float
    std: float
    in_training_range: bool


def policy_fn(policy: ActorCritic, normalizer: RunningNormalizer):
    """Deterministic inference closure: normalized obs -> mean action."""

    def act(obs: np.ndarray) -> np.ndarray:
        t = torch.as_tensor(normalizer.normalize(obs), dtype=policy.dtype)
        with torch.no_grad():
            return policy.actor(t).numpy()

    return act


def random_policy_fn(seed: int = 0):
    """Freshly initialized network sampling with its initial stddev; the
    measured baseline that trained policies are compared against."""
    torch.manual_seed(seed)
    policy = ActorCritic()
    gen = torch.Generator()
    gen.manual_seed(seed)

    def act(obs: np.ndarray) -> np.ndarray:
        action, _, _ = policy.act(obs, rng=gen)
        return action

    return act


def evaluate(policy, morphology: Morphology, motion: ReferenceMotion,
             trials: int = 10, horizon: int = 100, seed: int = 0,
             randomization: RandomizationConfig | None = None,
             source_morphology: Morphology | None = None,
             kinematic_override: bool = False) -> EvalResult:
    """Mean and standard deviation of the normalized return.

    Every trial starts from the nominal standing pose (no reference-state
    initialization); an early-terminated episode keeps accumulating zero,
    so normalized return is total reward / horizon regardless of length.
    """
    if trials < 1:
        raise ConfigurationError("trials must be at least 1")
    source = source_morphology or preset_morphology("A1")
    env = QuadEnv(
        motion, source, morphology=morphology,
        randomization=randomization or RandomizationConfig.disabled(),
        episode_config=EpisodeConfig(horizon=horizon), seed=seed,
        kinematic_override=kinematic_override)
    returns = []
    for _ in range(trials):
        obs = env.reset(rsi=False)
        total = 0.0
        done = False
        while not done:
            obs, reward, done, _ = env.step(policy(obs))
            total += reward
        returns.append(total / horizon)
    r = np.asarray(returns)
    return EvalResult(float(r.mean()), float(r.std()), tuple(returns))


def _point(lo_hi: float) -> tuple[float, float]:
    return (lo_hi, lo_hi)


def morphology_at(axis: str, value: float) -> Morphology:
    """Nominal-point morphology with one generation knob moved."""
    cfg = MorphologyConfig.nominal_point()
    if axis == "size_factor":
        cfg = replace(cfg, size_factor_range=_point(value))
    elif axis == "calf_length":
        cfg = replace(cfg, calf_length_range=_point(value))
    elif axis == "thigh_length":
        nominal_calf = cfg.calf_length_range[0]
        cfg = replace(cfg, thigh_length_ratio_range=_point(value / nominal_calf))
    elif axis == "body_mass":
        lo, hi = cfg.base_density_range
        cfg = replace(cfg, base_density_range=_point(lo * value))
    else:
        raise ConfigurationError(f"not a morphology axis: {axis!r}")
    return sample_morphology(cfg, np.random.default_rng(0),
                             name=f"{axis}={value:g}")


def dynamics_at(axis: str, value: float) -> RandomizationConfig:
    base = RandomizationConfig.disabled()
    field = {
        "ground_friction": "ground_friction_range",
        "motor_strength": "motor_strength_factor_range",
        "pd_gain": "pd_gain_factor_range",
        "motor_damping": "motor_damping_range",
        "latency": "latency_range",
        "link_mass": "link_mass_factor_range",
    }[axis]
    return replace(base, **{field: _point(value)})


def sweep(policy, axis: str, values, motion: ReferenceMotion,
          trials: int = 10, seed: int = 0) -> list[SweepRow]:
    """One evaluation per value along a single morphology or dynamics
    axis, flagged against the training-range boundaries."""
    if axis not in SWEEP_AXES:
        raise ConfigurationError(
            f"unknown axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    lo, hi = (MORPHOLOGY_AXES.get(axis) or DYNAMICS_AXES[axis])
    rows = []
    for value in values:
        value = float(value)
        if axis in MORPHOLOGY_AXES:
            result = evaluate(policy, morphology_at(axis, value), motion,
                              trials=trials, seed=seed)
        else:
            result = evaluate(policy, preset_morphology("A1"), motion,
                              trials=trials, seed=seed,
                              randomization=dynamics_at(axis, value))
        rows.append(SweepRow(axis, value, result.mean, result.std,
                             lo - 1e-12 <= value <= hi + 1e-12))
    return rows


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "mean_return", "std_return",
                         "in_training_range"])
        for r in rows:
            writer.writerow([r.axis, r.value, r.mean, r.std,
                             int(r.in_training_range)])


def zero_shot_suite(policy, motion: ReferenceMotion, trials: int = 10,
                    seed: int = 0, floor: float | None = None) -> dict:
    """Evaluate on every built-in preset; returns name -> result dict."""
    report = {}
    for name in PRESET_NAMES:
        m = preset_morphology(name)
        result = evaluate(policy, m, motion, trials=trials, seed=seed)
        entry = dataclasses.asdict(result)
        entry["knee_sign"] = m.knee_sign
        if floor is not None:
            entry["passed"] = result.mean >= floor
        report[name] = entry
    return report


def write_zero_shot_csv(report: dict, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["preset", "mean_return", "std_return", "knee_sign"]
        if any("passed" in e for e in report.values()):
            header.append("passed")
        writer.writerow(header)
        for name, entry in report.items():
            row = [name, entry["mean"], entry["std"], entry["knee_sign"]]
            if "passed" in entry:
                row.append(int(entry["passed"]))
            writer.writerow(row)
