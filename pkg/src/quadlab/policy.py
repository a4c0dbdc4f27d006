"""Actor-critic policy network and running observation normalization."""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn as nn

OBS_DIM = 421
ACT_DIM = 12
HIDDEN = (1024, 512)
INITIAL_STDDEV = 0.25  # rad


class RunningNormalizer:
    """Running mean/variance observation whitening (Welford batched).

    Updated during experience collection, frozen for evaluation and
    deployment; state is saved inside checkpoints so a deployed policy
    is self-contained.
    """

    def __init__(self, dim: int, clip: float = 10.0):
        self.dim = dim
        self.clip = clip
        self.count = 1e-4
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.frozen = False

    def update(self, batch: np.ndarray) -> None:
        if self.frozen:
            return
        batch = np.atleast_2d(batch)
        n = batch.shape[0]
        m = batch.mean(axis=0)
        v = batch.var(axis=0)
        delta = m - self.mean
        total = self.count + n
        self.mean = self.mean + delta * n / total
        self.var = (self.var * self.count + v * n
                    + delta**2 * self.count * n / total) / total
        self.count = total

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        z = (obs - self.mean) / np.sqrt(self.var + 1e-8)
        return np.clip(z, -self.clip, self.clip)

    def state_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean.copy(),
                "var": self.var.copy(), "clip": self.clip, "frozen": self.frozen}

    def load_state_dict(self, state: dict) -> None:
        self.count = state["count"]
        self.mean = np.asarray(state["mean"], dtype=float).copy()
        self.var = np.asarray(state["var"], dtype=float).copy()
        self.clip = state["clip"]
        self.frozen = state["frozen"]


def _mlp(in_dim: int, hidden: tuple[int, ...], out_dim: int) -> nn.Sequential:
    layers: list[nn.Module] = []
    last = in_dim
    for h in hidden:
        layers += [nn.Linear(last, h), nn.ReLU()]
        last = h
    layers.append(nn.Linear(last, out_dim))
    return nn.Sequential(*layers)


class ActorCritic(nn.Module):
    """Gaussian actor and scalar critic with shared architecture.

    The action stddev is a state-independent learned parameter,
    initialized at 0.25 rad. `dtype` selects the parameter precision;
    float32 roughly halves CPU training cost.
    """

    def __init__(self, obs_dim: int = OBS_DIM, act_dim: int = ACT_DIM,
                 hidden: tuple[int, ...] = HIDDEN,
                 dtype: torch.dtype = torch.float64):
        super().__init__()
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.actor = _mlp(obs_dim, hidden, act_dim)
        self.critic = _mlp(obs_dim, hidden, 1)
        self.log_std = nn.Parameter(
            torch.full((act_dim,), math.log(INITIAL_STDDEV)))
        self.to(dtype)

    @property
    def dtype(self) -> torch.dtype:
        return self.log_std.dtype

    def distribution(self, obs: torch.Tensor) -> torch.distributions.Normal:
        return torch.distributions.Normal(self.actor(obs),
                                          self.log_std.exp().expand(self.act_dim))

    def value(self, obs: torch.Tensor) -> torch.Tensor:
        return self.critic(obs).squeeze(-1)

    @torch.no_grad()
    def act(self, obs: np.ndarray, rng: torch.Generator | None = None,
            deterministic: bool = False):
        """Sample an action; returns (action, log-prob, value) as numpy."""
        t = torch.as_tensor(obs, dtype=self.dtype)
        dist = self.distribution(t)
        if deterministic:
            action = dist.mean
        else:
            noise = torch.randn(dist.mean.shape, generator=rng, dtype=self.dtype)
            action = dist.mean + dist.stddev * noise
        logp = dist.log_prob(action).sum(-1)
        value = self.value(t)
        return action.numpy(), float(logp), float(value)

    def evaluate_actions(self, obs: torch.Tensor, actions: torch.Tensor):
        """Log-probs, entropy, and values for a batch (differentiable)."""
        dist = self.distribution(obs)
        logp = dist.log_prob(actions).sum(-1)
        entropy = dist.entropy().sum(-1)
        return logp, entropy, self.value(obs)
