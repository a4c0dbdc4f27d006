"""Training loop: experience collection over a bank of environments,
clipped-objective updates, checkpoints, and the learning curve.

One collection round steps every environment `rollout_length` times, so
one update consumes `workers * rollout_length` samples. Environments are
stepped serially inside the process; the policy forward pass is batched
across them. In generalized mode every episode draws a fresh morphology;
in fixed mode the named preset is used throughout.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from quadlab.env import QuadEnv
from quadlab.morphology import (
    ConfigurationError,
    MorphologyConfig,
    preset_morphology,
)
from quadlab.motions import GaitParams, synth_pace, synth_spin
from quadlab.policy import ActorCritic, RunningNormalizer
from quadlab.ppo import RolloutBatch, TrainingError, compute_gae, ppo_update
from quadlab.randomization import RandomizationConfig

CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    total_samples: int = 2_000_000
    workers: int = 8  # environment instances (serial, deterministic)
    rollout_length: int = 512  # steps per environment per update
    minibatch_size: int = 256
    epochs: int = 10
    clip_ratio: float = 0.2
    discount: float = 0.95
    gae_lambda: float = 0.95
    learning_rate: float = 3e-4  # linearly decayed to 0
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    mode: str = "generalized"  # or "fixed"
    precision: str = "float32"  # network parameter dtype
    preset: str = "A1"  # fixed mode only
    gait: str = "pace"
    seed: int = 0
    checkpoint_interval: int = 10  # iterations between periodic checkpoints
    morphology: MorphologyConfig = field(default_factory=MorphologyConfig)
    randomization: RandomizationConfig = field(default_factory=RandomizationConfig)

    def validate(self) -> None:
        if self.mode not in ("generalized", "fixed"):
            raise ConfigurationError(f"unknown mode: {self.mode!r}")
        if self.precision not in ("float32", "float64"):
            raise ConfigurationError(f"unknown precision: {self.precision!r}")
        if self.gait not in ("pace", "spin"):
            raise ConfigurationError(f"unknown gait: {self.gait!r}")
        for name in ("total_samples", "workers", "rollout_length",
                     "minibatch_size", "epochs", "checkpoint_interval"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if not 0.0 < self.clip_ratio < 1.0:
            raise ConfigurationError("clip_ratio must lie in (0, 1)")
        for name in ("discount", "gae_lambda"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1]")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        self.morphology.validate()
        self.randomization.validate()

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "morphology" in d and isinstance(d["morphology"], dict):
            d["morphology"] = MorphologyConfig(**{
                k: tuple(v) if isinstance(v, list) else v
                for k, v in d["morphology"].items()})
        if "randomization" in d and isinstance(d["randomization"], dict):
            d["randomization"] = RandomizationConfig(**{
                k: tuple(v) if isinstance(v, list) else v
                for k, v in d["randomization"].items()})
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "TrainConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def make_motion(gait: str, params: GaitParams | None = None):
    if gait == "pace":
        return synth_pace(params)
    if gait == "spin":
        return synth_spin(params)
    raise ConfigurationError(f"unknown gait: {gait!r}")


def make_envs(config: TrainConfig) -> list[QuadEnv]:
    motion = make_motion(config.gait)
    source = preset_morphology("A1")
    envs = []
    for i in range(config.workers):
        kw = dict(randomization=config.randomization,
                  seed=config.seed * 1_000_003 + i)
        if config.mode == "fixed":
            kw["morphology"] = preset_morphology(config.preset)
        else:
            kw["morphology_config"] = config.morphology
        envs.append(QuadEnv(motion, source, **kw))
    return envs


class Trainer:
    """Owns the policy, optimizer, normalizer, environments, and the
    learning curve for one training run."""

    def __init__(self, config: TrainConfig, out_dir: str | Path):
        config.validate()
        self.config = config
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        torch.manual_seed(config.seed)
        self.policy = ActorCritic(dtype=getattr(torch, config.precision))
        self.optimizer = torch.optim.Adam(self.policy.parameters(),
                                          lr=config.learning_rate)
        self.normalizer = RunningNormalizer(self.policy.obs_dim)
        self.action_rng = torch.Generator()
        self.action_rng.manual_seed(config.seed + 1)
        self.update_rng = np.random.default_rng(config.seed + 2)
        self.envs = make_envs(config)
        self.samples = 0
        self.iteration = 0
        self.curve: list[dict] = []
        self._episode_returns = [0.0] * config.workers
        self._obs = None  # raw observations, (workers, obs_dim)

    # -- collection -------------------------------------------------------

    def _policy_act(self, raw_obs: np.ndarray):
        obs = self.normalizer.normalize(raw_obs)
        t = torch.as_tensor(obs, dtype=self.policy.dtype)
        with torch.no_grad():
            dist = self.policy.distribution(t)
            noise = torch.randn(dist.mean.shape, generator=self.action_rng,
                                dtype=self.policy.dtype)
            action = dist.mean + dist.stddev * noise
            logp = dist.log_prob(action).sum(-1)
            value = self.policy.value(t)
        return obs, action.numpy(), logp.numpy(), value.numpy()

    def collect(self) -> tuple[RolloutBatch, list[float]]:
        """One collection round; returns the batch and the normalized
        returns of episodes that finished during it."""
        cfg = self.config
        w, n = cfg.workers, cfg.rollout_length
        if self._obs is None:
            self._obs = np.stack([env.reset() for env in self.envs])
        obs_buf = np.empty((n, w, self.policy.obs_dim))
        act_buf = np.empty((n, w, self.policy.act_dim))
        logp_buf = np.empty((n, w))
        rew_buf = np.empty((n, w))
        val_buf = np.empty((n, w))
        done_buf = np.zeros((n, w), dtype=bool)
        trunc_buf = np.zeros((n, w), dtype=bool)
        boot_buf = np.zeros((n, w))
        raw_buf = np.empty((n, w, self.policy.obs_dim))
        finished: list[float] = []

        for t in range(n):
            raw_buf[t] = self._obs
            norm_obs, actions, logps, values = self._policy_act(self._obs)
            obs_buf[t] = norm_obs
            act_buf[t] = actions
            logp_buf[t] = logps
            val_buf[t] = values
            for i, env in enumerate(self.envs):
                next_obs, reward, done, info = env.step(actions[i])
                rew_buf[t, i] = reward
                self._episode_returns[i] += reward
                if done:
                    done_buf[t, i] = True
                    if info["truncated"]:
                        trunc_buf[t, i] = True
                        boot_buf[t, i] = self._value_of(next_obs)
                    finished.append(
                        self._episode_returns[i] / env.config.horizon)
                    self._episode_returns[i] = 0.0
                    next_obs = env.reset()
                self._obs[i] = next_obs

        # the round usually cuts episodes mid-flight: bootstrap through
        # the critic at the cut, like a time limit
        for i in range(w):
            if not done_buf[n - 1, i]:
                done_buf[n - 1, i] = True
                trunc_buf[n - 1, i] = True
                boot_buf[n - 1, i] = self._value_of(self._obs[i])

        self.normalizer.update(raw_buf.reshape(n * w, -1))
        self.samples += n * w
        batch = RolloutBatch(
            observations=obs_buf.reshape(n * w, -1),
            actions=act_buf.reshape(n * w, -1),
            log_probs=logp_buf.reshape(-1),
            rewards=rew_buf.reshape(-1),
            values=val_buf.reshape(-1),
            dones=done_buf.reshape(-1),
            truncated=trunc_buf.reshape(-1),
            bootstrap_values=boot_buf.reshape(-1),
        )
        return batch, finished

    def _value_of(self, raw_obs: np.ndarray) -> float:
        t = torch.as_tensor(self.normalizer.normalize(raw_obs),
                            dtype=self.policy.dtype)
        with torch.no_grad():
            return float(self.policy.value(t))

    # -- update -----------------------------------------------------------

    def _gae_flat(self, batch: RolloutBatch, n: int, w: int):
        # the flat batch interleaves workers; run the recursion per worker
        adv = np.empty(n * w)
        tgt = np.empty(n * w)
        for i in range(w):
            sub = RolloutBatch(
                observations=batch.observations[i::w],
                actions=batch.actions[i::w],
                log_probs=batch.log_probs[i::w],
                rewards=batch.rewards[i::w],
                values=batch.values[i::w],
                dones=batch.dones[i::w],
                truncated=batch.truncated[i::w],
                bootstrap_values=batch.bootstrap_values[i::w],
            )
            a, v = compute_gae(sub, self.config.discount, self.config.gae_lambda)
            adv[i::w] = a
            tgt[i::w] = v
        return adv, tgt

    def train_iterations(self, iterations: int) -> None:
        cfg = self.config
        for _ in range(iterations):
            t0 = time.monotonic()
            batch, finished = self.collect()
            adv, targets = self._gae_flat(batch, cfg.rollout_length, cfg.workers)
            lr = cfg.learning_rate * max(
                0.0, 1.0 - self.samples / cfg.total_samples)
            for group in self.optimizer.param_groups:
                group["lr"] = lr
            stats = ppo_update(
                self.policy, self.optimizer, batch, adv, targets,
                clip_ratio=cfg.clip_ratio, epochs=cfg.epochs,
                minibatch_size=cfg.minibatch_size,
                entropy_coef=cfg.entropy_coef, value_coef=cfg.value_coef,
                max_grad_norm=cfg.max_grad_norm, rng=self.update_rng)
            self.iteration += 1
            mean_return = float(np.mean(finished)) if finished else float("nan")
            self.curve.append({
                "iteration": self.iteration,
                "samples": self.samples,
                "mean_return": mean_return,
                "episodes": len(finished),
                "lr": lr,
                "policy_loss": stats["policy_loss"],
                "value_loss": stats["value_loss"],
                "entropy": stats["entropy"],
                "approx_kl": stats["approx_kl"],
                "seconds": time.monotonic() - t0,
            })
            self.write_curve()
            if self.iteration % cfg.checkpoint_interval == 0:
                self.save_checkpoint(self.out_dir / "checkpoint_latest.pt")

    def train(self) -> None:
        """Run until the sample budget is spent, checkpointing as it goes."""
        while self.samples < self.config.total_samples:
            self.train_iterations(1)
        self.save_checkpoint(self.out_dir / "checkpoint_latest.pt")
        self.save_checkpoint(self.out_dir / "checkpoint_final.pt")
        self.write_curve()
        self.plot_curve()

    # -- persistence ------------------------------------------------------

    def save_checkpoint(self, path: str | Path) -> None:
        payload = {
            "version": CHECKPOINT_VERSION,
            "config": self.config.to_dict(),
            "iteration": self.iteration,
            "samples": self.samples,
            "policy": self.policy.state_dict(),
            "optimizer": self.optimizer.state_dict(),
            "normalizer": self.normalizer.state_dict(),
            "torch_rng": torch.get_rng_state(),
            "action_rng": self.action_rng.get_state(),
            "update_rng": self.update_rng.bit_generator.state,
            "env_rngs": [env.rng.bit_generator.state for env in self.envs],
            "curve": self.curve,
        }
        tmp = Path(path).with_suffix(".tmp")
        torch.save(payload, tmp)
        tmp.replace(path)

    def load_checkpoint(self, path: str | Path) -> None:
        """Restore policy, optimizer, normalizer, and RNG streams.

        Environments restart fresh episodes at the restored RNG states;
        collection resumes at the next round boundary."""
        payload = torch.load(path, weights_only=False)
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ConfigurationError(
                f"unsupported checkpoint version: {payload.get('version')}")
        self.iteration = payload["iteration"]
        self.samples = payload["samples"]
        self.policy.load_state_dict(payload["policy"])
        self.optimizer.load_state_dict(payload["optimizer"])
        self.normalizer.load_state_dict(payload["normalizer"])
        torch.set_rng_state(payload["torch_rng"])
        self.action_rng.set_state(payload["action_rng"])
        self.update_rng.bit_generator.state = payload["update_rng"]
        for env, state in zip(self.envs, payload["env_rngs"]):
            env.rng.bit_generator.state = state
        self.curve = list(payload["curve"])
        self._obs = None
        self._episode_returns = [0.0] * self.config.workers

    def write_curve(self) -> None:
        path = self.out_dir / "learning_curve.csv"
        fields = ["iteration", "samples", "mean_return", "episodes", "lr",
                  "policy_loss", "value_loss", "entropy", "approx_kl", "seconds"]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            writer.writerows(self.curve)

    def plot_curve(self) -> Path:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        rows = [r for r in self.curve if np.isfinite(r["mean_return"])]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([r["samples"] for r in rows],
                [r["mean_return"] for r in rows], lw=1.2)
        ax.set_xlabel("samples")
        ax.set_ylabel("mean normalized return")
        ax.set_title(f"{self.config.mode} / {self.config.gait}")
        ax.grid(alpha=0.3)
        path = self.out_dir / "learning_curve.png"
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        return path


def load_policy(checkpoint: str | Path) -> tuple[ActorCritic, RunningNormalizer, dict]:
    """Load a checkpointed policy for evaluation; the normalizer comes
    back frozen."""
    payload = torch.load(checkpoint, weights_only=False)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(
            f"unsupported checkpoint version: {payload.get('version')}")
    precision = payload["config"].get("precision", "float64")
    policy = ActorCritic(dtype=getattr(torch, precision))
    policy.load_state_dict(payload["policy"])
    policy.eval()
    normalizer = RunningNormalizer(policy.obs_dim)
    normalizer.load_state_dict(payload["normalizer"])
    normalizer.frozen = True
    return policy, normalizer, payload["config"]
