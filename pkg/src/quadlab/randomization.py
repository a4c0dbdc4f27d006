"""Per-episode dynamics randomization draws.

One draw is sampled at episode start and stays fixed for the whole
episode. "Factor" fields multiply the values already produced by the
morphology generator; link mass/inertia factors are drawn per physical
link (17 links: base plus four of hip/thigh/calf/foot).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from quadlab.morphology import ConfigurationError, _check_interval

NUM_LINKS = 17


@dataclass(frozen=True)
class RandomizationConfig:
    link_mass_factor_range: tuple[float, float] = (0.8, 1.2)
    link_inertia_factor_range: tuple[float, float] = (0.5, 1.5)
    ground_friction_range: tuple[float, float] = (0.5, 1.25)
    motor_strength_factor_range: tuple[float, float] = (0.8, 1.2)
    pd_gain_factor_range: tuple[float, float] = (0.7, 1.3)
    motor_damping_range: tuple[float, float] = (0.0, 0.05)  # Nms/rad
    latency_range: tuple[float, float] = (0.0, 0.04)  # s

    def validate(self) -> None:
        _check_interval("link_mass_factor_range", self.link_mass_factor_range)
        _check_interval("link_inertia_factor_range", self.link_inertia_factor_range)
        _check_interval("ground_friction_range", self.ground_friction_range)
        _check_interval("motor_strength_factor_range", self.motor_strength_factor_range)
        _check_interval("pd_gain_factor_range", self.pd_gain_factor_range)
        _check_interval("motor_damping_range", self.motor_damping_range, positive=False)
        _check_interval("latency_range", self.latency_range, positive=False)
        if self.motor_damping_range[0] < 0 or self.latency_range[0] < 0:
            raise ConfigurationError("damping and latency must be non-negative")

    @classmethod
    def disabled(cls) -> "RandomizationConfig":
        """Point ranges that reproduce the unrandomized morphology."""
        return cls(
            link_mass_factor_range=(1.0, 1.0),
            link_inertia_factor_range=(1.0, 1.0),
            ground_friction_range=(1.0, 1.0),
            motor_strength_factor_range=(1.0, 1.0),
            pd_gain_factor_range=(1.0, 1.0),
            motor_damping_range=(0.0, 0.0),
            latency_range=(0.0, 0.0),
        )


@dataclass(frozen=True)
class DynamicsDraw:
    link_mass_factor: np.ndarray  # (17,)
    link_inertia_factor: np.ndarray  # (17,)
    ground_friction: float
    motor_strength_factor: float
    pd_gain_factor: float
    motor_damping: float  # Nms/rad
    latency: float  # s

    @classmethod
    def neutral(cls) -> "DynamicsDraw":
        return cls(
            link_mass_factor=np.ones(NUM_LINKS),
            link_inertia_factor=np.ones(NUM_LINKS),
            ground_friction=1.0,
            motor_strength_factor=1.0,
            pd_gain_factor=1.0,
            motor_damping=0.0,
            latency=0.0,
        )

    def replace(self, **kw) -> "DynamicsDraw":
        from dataclasses import replace as _replace

        return _replace(self, **kw)

    def to_dict(self) -> dict:
        return {
            "link_mass_factor": [float(x) for x in self.link_mass_factor],
            "link_inertia_factor": [float(x) for x in self.link_inertia_factor],
            "ground_friction": self.ground_friction,
            "motor_strength_factor": self.motor_strength_factor,
            "pd_gain_factor": self.pd_gain_factor,
            "motor_damping": self.motor_damping,
            "latency": self.latency,
        }


def sample_dynamics(config: RandomizationConfig, rng: np.random.Generator) -> DynamicsDraw:
    """Uniform draw of every randomized dynamics parameter.

    Draw order (fixed): link mass factors, link inertia factors, ground
    friction, motor strength, PD gain factor, motor damping, latency.
    """
    config.validate()
    return DynamicsDraw(
        link_mass_factor=rng.uniform(*config.link_mass_factor_range, size=NUM_LINKS),
        link_inertia_factor=rng.uniform(*config.link_inertia_factor_range, size=NUM_LINKS),
        ground_friction=float(rng.uniform(*config.ground_friction_range)),
        motor_strength_factor=float(rng.uniform(*config.motor_strength_factor_range)),
        pd_gain_factor=float(rng.uniform(*config.pd_gain_factor_range)),
        motor_damping=float(rng.uniform(*config.motor_damping_range)),
        latency=float(rng.uniform(*config.latency_range)),
    )
