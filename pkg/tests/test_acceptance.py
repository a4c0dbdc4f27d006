"""Acceptance suite: one test per top-level criterion.

The three training-dependent checks load checkpoints from runs/ at the
repository root (produced by the CLI `train` jobs whose configs live
next to them); everything else is self-contained. Run the full suite
with `pytest -v tests/test_acceptance.py`.
"""

import json
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest
import torch

import oracles
from quadlab import morphology as mo
from quadlab.dynamics import (
    ActuatorCommand,
    RobotState,
    Simulation,
    total_energy,
)
from quadlab.env import EpisodeConfig, compute_reward
from quadlab.evaluation import evaluate, morphology_at, policy_fn, random_policy_fn, zero_shot_suite
from quadlab.motions import synth_pace
from quadlab.policy import ActorCritic
from quadlab.ppo import surrogate_loss
from quadlab.randomization import DynamicsDraw
from quadlab.training import TrainConfig, Trainer, load_policy
from test_dynamics import random_state

REPO = Path(__file__).resolve().parent.parent
RUNS = REPO / "runs"

RESULTS: list[str] = []


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} - {name}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def checkpoint(run: str) -> Path:
    path = RUNS / run / "checkpoint_final.pt"
    if not path.exists():
        pytest.fail(f"missing training artifact {path}; "
                    f"run: quadlab train --config runs/{run}.json --out runs/{run}")
    return path


def test_sampler_ranges():
    # 10,000 draws: every parameter inside its generation range, every
    # coupling equality exact, in under 10 seconds
    cfg = mo.MorphologyConfig()
    rng = np.random.default_rng(0)
    t0 = time.monotonic()
    for _ in range(10_000):
        m = mo.sample_morphology(cfg, rng)
        a = m.size_factor
        assert 0.8 <= a <= 1.2
        bl, bw, bh = m.base_dims
        assert a * 0.134 <= bl <= a * 0.400
        assert a * 0.097 <= bw <= a * 0.291
        assert a * 0.057 <= bh <= a * 0.171
        for leg in m.legs:
            assert a * 0.11 <= leg.calf_length <= a * 0.33
            assert 0.75 <= leg.thigh_length / leg.calf_length <= 1.25
            assert leg.foot_radius == 1.5 * leg.calf_radius
        density = m.base_mass / (bl * bw * bh)
        assert 400.0 - 1e-9 <= density <= 1200.0 + 1e-9
        assert 0.7 - 1e-12 <= m.p_gains["hip"] / (100.0 * m.total_mass / 12.458) \
            <= 1.3 + 1e-12
    elapsed = time.monotonic() - t0
    report("sampler ranges, 10k draws", elapsed < 10.0, f"{elapsed:.1f} s")


def test_reward_identity():
    motion = synth_pace()
    ref = motion.sample(0.25)
    s = RobotState(
        base_position=ref.base_position.copy(),
        base_orientation=ref.base_orientation.copy(),
        base_linear_velocity=ref.base_linear_velocity.copy(),
        base_angular_velocity=ref.base_angular_velocity.copy(),
        joint_positions=ref.joint_positions.copy(),
        joint_velocities=ref.joint_velocities.copy(),
    )
    cfg = EpisodeConfig()
    err = abs(compute_reward(s, ref, cfg) - 1.0)
    weights_ok = abs(cfg.weight_pose + cfg.weight_velocity + cfg.weight_base_pose
                     + cfg.weight_base_velocity - 1.0) <= 1e-15
    report("reward identity at reference", err <= 1e-12 and weights_ok,
           f"error {err:.2e}")


def test_dynamics_oracle():
    # articulated-body accelerations vs an independent dense composite
    # mass matrix + solve, 50 morphologies x 20 states
    rng = np.random.default_rng(42)
    worst = 0.0
    t0 = time.monotonic()
    for _ in range(50):
        m = mo.sample_morphology(mo.MorphologyConfig(), rng)
        sim = Simulation(m)
        for _ in range(20):
            s = random_state(rng)
            tau = rng.uniform(-30, 30, 12)
            feet = rng.uniform(-50, 50, (4, 3))
            got = sim.forward_dynamics(s, tau, feet)
            want, _ = oracles.forward_dynamics_dense(
                sim.model, s, tau, sim.gravity, feet)
            scale = max(1.0, np.abs(want).max())
            worst = max(worst, np.abs(got - want).max() / scale)
    elapsed = time.monotonic() - t0
    report("dynamics oracle 50x20", worst <= 1e-8 and elapsed < 30.0,
           f"max rel err {worst:.2e}, {elapsed:.1f} s")


def test_energy_drift():
    # unactuated contact-free tumble, 5 s at 1 kHz; gravity off so the
    # motion stays bounded and the shadow-energy offset of the symplectic
    # integrator cannot masquerade as drift
    m = mo.preset_morphology("A1")
    sim = Simulation(m)
    sim.gravity = 0.0
    sim.model.kp = np.zeros(12)
    sim.model.kd = np.zeros(12)
    s = RobotState.at_pose([0, 0, 5.0], m.nominal_pose)
    s.base_linear_velocity = np.array([2.0, 1.0, 0.0])
    s.base_angular_velocity = np.array([1.0, 2.0, 0.5])
    s.joint_velocities = np.full(12, 1.0)
    e0 = total_energy(sim, s)
    drift = 0.0
    for _ in range(50):
        s = sim.step(s, [], n_substeps=100)
        drift = max(drift, abs(total_energy(sim, s) - e0))
    report("energy drift 5 s unactuated", drift <= 0.02 * abs(e0),
           f"{100 * drift / abs(e0):.2f}% of E0")


def test_statics():
    m = mo.preset_morphology("A1")
    sim = Simulation(m)
    s = RobotState.at_pose([0, 0, m.standing_height()], m.nominal_pose)
    s = sim.step(s, [ActuatorCommand(m.nominal_pose, -1.0)], n_substeps=4000)
    forces = sim.contact_forces(s)
    mg = sim.model.total_mass * 9.81
    rel = abs(forces[:, 2].sum() - mg) / mg
    report("statics: sum Fn = mg, 4/4 contacts",
           bool(np.all(s.foot_contacts)) and rel < 0.01, f"error {100 * rel:.3f}%")


def test_filter_and_latency():
    from quadlab.env import FILTER_BETA, FilterState

    f = FilterState(np.zeros(12))
    step = np.full(12, 0.5)
    worst = 0.0
    for k in range(1, 80):
        out = f.apply(step)
        worst = max(worst, np.abs(out - (1.0 - FILTER_BETA**k) * step).max())

    m = mo.preset_morphology("A1")
    sim = Simulation(m, DynamicsDraw.neutral().replace(latency=0.04))
    sched = sim._target_schedule([ActuatorCommand(np.full(12, 0.5), 0.0)], 0.0, 80)
    switched = np.nonzero(np.all(sched == 0.5, axis=1))[0]
    latency_ok = switched[0] == 40 and bool(np.all(sched[:40] == m.nominal_pose))
    report("filter closed form + latency 40 substeps",
           worst <= 1e-9 and latency_ok, f"filter err {worst:.2e}")


def test_determinism(tmp_path):
    # two single-process runs, same seed: bit-identical learning curves
    # and rollout traces
    cfg = dict(total_samples=128, workers=2, rollout_length=32,
               minibatch_size=32, epochs=2, mode="generalized", seed=17)
    curves, traces = [], []
    for sub in ("a", "b"):
        tr = Trainer(TrainConfig(**cfg), tmp_path / sub)
        batch, _ = tr.collect()
        traces.append((batch.observations.copy(), batch.actions.copy(),
                       batch.rewards.copy()))
        tr2 = Trainer(TrainConfig(**cfg), tmp_path / (sub + "2"))
        tr2.train()
        curves.append([{k: v for k, v in row.items() if k != "seconds"}
                       for row in tr2.curve])
    trace_ok = all(np.array_equal(x, y) for x, y in zip(traces[0], traces[1]))
    report("seed determinism: curves and traces", curves[0] == curves[1]
           and trace_ok)


def test_gradient_check():
    # clipped-surrogate gradient vs central finite differences on a
    # 4-hidden-unit network, float64
    torch.manual_seed(3)
    p = ActorCritic(obs_dim=3, act_dim=2, hidden=(4,))
    rng = np.random.default_rng(4)
    obs = torch.as_tensor(rng.normal(size=(16, 3)))
    act = torch.as_tensor(rng.normal(size=(16, 2)))
    old_logp = p.evaluate_actions(obs, act)[0].detach() + 0.1
    adv = torch.as_tensor(rng.normal(size=16))

    loss = surrogate_loss(p, obs, act, old_logp, adv, 0.2)
    p.zero_grad()
    loss.backward()
    eps, worst = 1e-6, 0.0
    for param in list(p.actor.parameters()) + [p.log_std]:
        flat, grad = param.data.view(-1), param.grad.view(-1)
        for k in range(flat.numel()):
            orig = float(flat[k])
            flat[k] = orig + eps
            up = float(surrogate_loss(p, obs, act, old_logp, adv, 0.2))
            flat[k] = orig - eps
            down = float(surrogate_loss(p, obs, act, old_logp, adv, 0.2))
            flat[k] = orig
            fd = (up - down) / (2 * eps)
            denom = max(abs(fd), abs(float(grad[k])), 1e-8)
            worst = max(worst, abs(fd - float(grad[k])) / denom)
    report("gradient check vs finite differences", worst <= 1e-4,
           f"max rel err {worst:.2e}")


@pytest.mark.slow
def test_desk_scale_training():
    # random baseline first (measured oracle), then the trained policy
    motion = synth_pace()
    a1 = mo.preset_morphology("A1")
    baseline = evaluate(random_policy_fn(seed=0), a1, motion, trials=10)
    policy, normalizer, _ = load_policy(checkpoint("fixed_a1_2m"))
    trained = evaluate(policy_fn(policy, normalizer), a1, motion, trials=10)

    curve_path = RUNS / "fixed_a1_2m" / "learning_curve.csv"
    rows = [r for r in curve_path.read_text().splitlines()[1:] if r]
    returns = [float(r.split(",")[2]) for r in rows
               if r.split(",")[2] not in ("", "nan")]
    trend_ok = returns[-1] >= returns[0] + 0.2

    report("desk-scale training vs random baseline",
           trained.mean >= 0.5 and baseline.mean <= 0.2 and trend_ok,
           f"trained {trained.mean:.3f} +- {trained.std:.3f}, "
           f"baseline {baseline.mean:.3f}, "
           f"curve {returns[0]:.3f} -> {returns[-1]:.3f}")


@pytest.mark.slow
def test_directional_generalization():
    # generalized-morphology policy vs fixed-morphology policy at equal
    # budget, on three held-out scale factors
    motion = synth_pace()
    gen_p, gen_n, _ = load_policy(checkpoint("gen_narrow_5m"))
    fix_p, fix_n, _ = load_policy(checkpoint("fixed_a1_5m"))
    gen = policy_fn(gen_p, gen_n)
    fix = policy_fn(fix_p, fix_n)
    wins, detail = 0, []
    for alpha in (0.85, 1.15, 1.25):
        m = morphology_at("size_factor", alpha)
        rg = evaluate(gen, m, motion, trials=10, seed=100)
        rf = evaluate(fix, m, motion, trials=10, seed=100)
        wins += rg.mean >= rf.mean
        detail.append(f"a={alpha}: gen {rg.mean:.3f} vs fixed {rf.mean:.3f}")
    report("directional generalization 2-of-3", wins >= 2, "; ".join(detail))


@pytest.mark.slow
def test_zero_shot_suite():
    policy, normalizer, _ = load_policy(checkpoint("fixed_a1_2m"))
    motion = synth_pace()
    suite = zero_shot_suite(policy_fn(policy, normalizer), motion, trials=2)
    names = set(suite)
    knees = {name: suite[name]["knee_sign"] for name in suite}
    ok = (len(names) == 10 and set(mo.PRESET_NAMES) == names
          and knees["ANYmalB"] == -1.0 and knees["ANYmalC"] == -1.0
          and all(np.isfinite(e["mean"]) for e in suite.values()))
    report("zero-shot suite over 10 presets", ok,
           ", ".join(f"{n}={suite[n]['mean']:.2f}" for n in sorted(names)))


@pytest.mark.slow
def test_binding_fidelity():
    # secondary criterion: the foreign-binding test suite includes a
    # 1000-step bit-exact trace comparison and the 421-length check
    frontend = REPO / "frontend"
    if not (frontend / "node_modules").exists():
        pytest.fail("frontend dependencies not installed; run npm install")
    proc = subprocess.run(["npx", "vitest", "run"], cwd=frontend,
                          capture_output=True, text=True, timeout=3600)
    ok = proc.returncode == 0
    tail = "\n".join((proc.stdout + proc.stderr).splitlines()[-15:])
    report("binding fidelity (vitest suite)", ok, "" if ok else tail)
