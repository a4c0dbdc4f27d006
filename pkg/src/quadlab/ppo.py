"""Clipped-surrogate policy optimization: advantage estimation and the
minibatch update."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from quadlab.morphology import ConfigurationError
from quadlab.policy import ActorCritic


class TrainingError(RuntimeError):
    pass


@dataclass
class RolloutBatch:
    """Flat transition storage for one collection round.

    `truncated` marks time-limit boundaries; `bootstrap_value` holds the
    critic's estimate of the state after a truncation (zero elsewhere).
    """

    observations: np.ndarray  # (n, obs_dim), already normalized
    actions: np.ndarray  # (n, act_dim)
    log_probs: np.ndarray  # (n,)
    rewards: np.ndarray  # (n,)
    values: np.ndarray  # (n,)
    dones: np.ndarray  # (n,) bool, episode boundary after this step
    truncated: np.ndarray  # (n,) bool
    bootstrap_values: np.ndarray  # (n,)

    def __len__(self) -> int:
        return len(self.rewards)


def compute_gae(batch: RolloutBatch, discount: float,
                gae_lambda: float) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation over a flat batch.

    Episode boundaries cut the recursion. Time-limit truncations
    bootstrap through the critic's value of the cut-off state; early
    terminations do not bootstrap. Returns (advantages, value targets).
    """
    n = len(batch)
    rewards = batch.rewards + discount * batch.bootstrap_values * batch.truncated
    adv = np.zeros(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        if batch.dones[t]:
            delta = rewards[t] - batch.values[t]
            last = delta
        else:
            delta = rewards[t] + discount * batch.values[t + 1] - batch.values[t]
            last = delta + discount * gae_lambda * last
        adv[t] = last
    return adv, adv + batch.values


def surrogate_loss(policy: ActorCritic, obs: torch.Tensor,
                   actions: torch.Tensor, old_log_probs: torch.Tensor,
                   advantages: torch.Tensor, clip_ratio: float) -> torch.Tensor:
    """Clipped surrogate objective (to be maximized; returned as a loss)."""
    logp, _, _ = policy.evaluate_actions(obs, actions)
    ratio = torch.exp(logp - old_log_probs)
    clipped = torch.clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    return -torch.min(ratio * advantages, clipped * advantages).mean()


def ppo_update(policy: ActorCritic, optimizer: torch.optim.Optimizer,
               batch: RolloutBatch, advantages: np.ndarray,
               value_targets: np.ndarray, *, clip_ratio: float = 0.2,
               epochs: int = 10, minibatch_size: int = 256,
               entropy_coef: float = 0.0, value_coef: float = 0.5,
               max_grad_norm: float = 0.5,
               rng: np.random.Generator | None = None) -> dict:
    """Run the clipped-objective update over the batch; returns statistics."""
    if epochs < 1 or minibatch_size < 1:
        raise ConfigurationError("epochs and minibatch_size must be positive")
    if not 0.0 < clip_ratio:
        raise ConfigurationError("clip_ratio must be positive")
    rng = rng or np.random.default_rng(0)
    n = len(batch)
    dtype = policy.dtype
    obs = torch.as_tensor(batch.observations, dtype=dtype)
    actions = torch.as_tensor(batch.actions, dtype=dtype)
    old_logp = torch.as_tensor(batch.log_probs, dtype=dtype)
    targets = torch.as_tensor(value_targets, dtype=dtype)
    adv = np.asarray(advantages, dtype=float)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    adv_t = torch.as_tensor(adv, dtype=dtype)

    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0,
             "approx_kl": 0.0, "clip_fraction": 0.0}
    updates = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, minibatch_size):
            idx = order[start:start + minibatch_size]
            logp, entropy, values = policy.evaluate_actions(obs[idx], actions[idx])
            ratio = torch.exp(logp - old_logp[idx])
            clipped = torch.clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
            policy_loss = -torch.min(ratio * adv_t[idx], clipped * adv_t[idx]).mean()
            value_loss = ((values - targets[idx]) ** 2).mean()
            loss = policy_loss + value_coef * value_loss \
                - entropy_coef * entropy.mean()
            if not torch.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss: policy {float(policy_loss)}, "
                    f"value {float(value_loss)}")
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(policy.parameters(), max_grad_norm)
            optimizer.step()
            with torch.no_grad():
                stats["policy_loss"] += float(policy_loss)
                stats["value_loss"] += float(value_loss)
                stats["entropy"] += float(entropy.mean())
                stats["approx_kl"] += float((old_logp[idx] - logp).mean())
                stats["clip_fraction"] += float(
                    ((ratio - 1.0).abs() > clip_ratio).double().mean())
            updates += 1
    return {k: v / max(updates, 1) for k, v in stats.items()}
