"""Imitation-learning environment: observations, action filtering,
reward, reference-state initialization, termination, and the episode loop.

One environment owns one simulated robot. In generalized mode a fresh
morphology is sampled at every reset; in fixed mode the morphology stays
constant and only the dynamics draw is resampled.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from quadlab.dynamics import ActuatorCommand, RobotState, Simulation, SimulationDiverged
from quadlab.morphology import (
    ConfigurationError,
    Morphology,
    MorphologyConfig,
    sample_morphology,
)
from quadlab.motions import ReferenceMotion, ReferenceTarget, rescale_for_morphology
from quadlab.randomization import DynamicsDraw, RandomizationConfig, sample_dynamics

HISTORY_LENGTH = 15
SENSOR_WIDTH = 16  # base quaternion (4) + joint positions (12)
ACTION_WIDTH = 12
OBSERVATION_LENGTH = HISTORY_LENGTH * (SENSOR_WIDTH + ACTION_WIDTH) + 1  # 421
ACTION_CLAMP = 1.0  # rad around the nominal pose
SUBSTEPS_PER_STEP = 33  # 1 kHz substep, ~30 Hz policy
FILTER_BETA = 0.8


@dataclass(frozen=True)
class EpisodeConfig:
    horizon: int = 100  # policy steps
    rsi_probability: float = 0.9
    position_threshold_leg_lengths: float = 0.5
    orientation_threshold: float = 1.0  # rad
    weight_pose: float = 0.6
    weight_velocity: float = 0.1
    weight_base_pose: float = 0.15
    weight_base_velocity: float = 0.15

    def validate(self) -> None:
        if self.horizon < 1:
            raise ConfigurationError("horizon must be positive")
        if not 0.0 <= self.rsi_probability <= 1.0:
            raise ConfigurationError("rsi_probability must lie in [0, 1]")
        weights = (self.weight_pose, self.weight_velocity,
                   self.weight_base_pose, self.weight_base_velocity)
        if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ConfigurationError("reward weights must be non-negative and sum to 1")


def quat_geodesic_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle between two unit quaternions, in [0, pi]."""
    dot = min(1.0, abs(float(np.dot(a, b))))
    return 2.0 * np.arccos(dot)


def reward_terms(s: RobotState, ref: ReferenceTarget) -> dict[str, float]:
    """The four imitation sub-rewards, each in (0, 1]."""
    dq = ref.joint_positions - s.joint_positions
    dqd = ref.joint_velocities - s.joint_velocities
    dx = ref.base_position - s.base_position
    dv = ref.base_linear_velocity - s.base_linear_velocity
    dw = ref.base_angular_velocity - s.base_angular_velocity
    ang = quat_geodesic_angle(ref.base_orientation, s.base_orientation)
    return {
        "pose": float(np.exp(-5.0 * float(dq @ dq))),
        "velocity": float(np.exp(-0.01 * float(dqd @ dqd))),
        "base_pose": float(np.exp(-20.0 * float(dx @ dx) - 10.0 * ang * ang)),
        "base_velocity": float(np.exp(-2.0 * float(dv @ dv) - 0.2 * float(dw @ dw))),
    }


def compute_reward(s: RobotState, ref: ReferenceTarget,
                   config: EpisodeConfig) -> float:
    t = reward_terms(s, ref)
    return (config.weight_pose * t["pose"]
            + config.weight_velocity * t["velocity"]
            + config.weight_base_pose * t["base_pose"]
            + config.weight_base_velocity * t["base_velocity"])


def check_termination(s: RobotState, ref: ReferenceTarget, sim: Simulation,
                      config: EpisodeConfig) -> bool:
    """True when the state strayed too far from the reference or a
    non-foot part of the robot touches the ground."""
    threshold = config.position_threshold_leg_lengths * sim.morphology.leg_length
    if np.linalg.norm(s.base_position - ref.base_position) > threshold:
        return True
    if quat_geodesic_angle(s.base_orientation, ref.base_orientation) > \
            config.orientation_threshold:
        return True
    return _illegal_ground_contact(s, sim)


def _illegal_ground_contact(s: RobotState, sim: Simulation) -> bool:
    """Base box corners or leg joints (hips, knees) at or below ground."""
    Rw, ow, _, _ = sim.kinematics(s)
    half = 0.5 * np.asarray(sim.morphology.base_dims, dtype=float)
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                corner = ow[0] + Rw[0] @ (half * (sx, sy, sz))
                if corner[2] <= 0.0:
                    return True
    for li in range(4):
        if ow[1 + 3 * li][2] <= 0.0:  # hip
            return True
        if ow[3 + 3 * li][2] <= 0.0:  # knee (calf origin)
            return True
    return False


class FilterState:
    """First-order low-pass over PD targets, initialized at the nominal
    pose on reset."""

    def __init__(self, nominal: np.ndarray, beta: float = FILTER_BETA):
        self.beta = beta
        self.value = nominal.copy()

    def apply(self, raw_target: np.ndarray) -> np.ndarray:
        self.value = self.beta * self.value + (1.0 - self.beta) * raw_target
        return self.value.copy()


class QuadEnv:
    """Episodic imitation environment.

    Exactly one of `morphology` (fixed mode) or `morphology_config`
    (generalized mode: a fresh morphology per reset) must be given. The
    reference motion is authored at the A1 nominal scale and rescaled to
    each episode's morphology. `kinematic_override=True` replaces the
    dynamics with perfect reference playback, for harness calibration.
    """

    def __init__(self, motion: ReferenceMotion,
                 source_morphology: Morphology,
                 morphology: Morphology | None = None,
                 morphology_config: MorphologyConfig | None = None,
                 randomization: RandomizationConfig | None = None,
                 episode_config: EpisodeConfig | None = None,
                 seed: int = 0,
                 kinematic_override: bool = False):
        if (morphology is None) == (morphology_config is None):
            raise ConfigurationError(
                "give exactly one of morphology / morphology_config")
        motion.validate()
        self.base_motion = motion
        self.source_morphology = source_morphology
        self.fixed_morphology = morphology
        self.morphology_config = morphology_config
        self.randomization = randomization or RandomizationConfig()
        self.config = episode_config or EpisodeConfig()
        self.config.validate()
        self.kinematic_override = kinematic_override
        self.rng = np.random.default_rng(seed)
        self.policy_dt = SUBSTEPS_PER_STEP * 0.001

        # per-episode state, populated by reset()
        self.sim: Simulation | None = None
        self.motion: ReferenceMotion | None = None
        self.state: RobotState | None = None
        self.draw: DynamicsDraw | None = None
        self._done = True

    # -- episode control --------------------------------------------------

    def reset(self, phase: float | None = None,
              rsi: bool | None = None) -> np.ndarray:
        """Start a new episode; returns the initial observation.

        `phase` and `rsi` override the reference-state-initialization
        randomness (used by tests and evaluation)."""
        if self.fixed_morphology is not None:
            m = self.fixed_morphology
        else:
            m = sample_morphology(self.morphology_config, self.rng)
        self.draw = sample_dynamics(self.randomization, self.rng)
        self.sim = Simulation(m, self.draw)
        self.motion = rescale_for_morphology(
            self.base_motion, self.source_morphology, m)

        use_rsi = (self.rng.random() < self.config.rsi_probability) \
            if rsi is None else rsi
        if use_rsi:
            self.phase = float(self.rng.random()) if phase is None else float(phase)
            ref = self.motion.sample(self.phase)
            state = RobotState(
                base_position=ref.base_position.copy(),
                base_orientation=ref.base_orientation.copy(),
                base_linear_velocity=ref.base_linear_velocity.copy(),
                base_angular_velocity=ref.base_angular_velocity.copy(),
                joint_positions=ref.joint_positions.copy(),
                joint_velocities=ref.joint_velocities.copy(),
            )
        else:
            self.phase = 0.0 if phase is None else float(phase)
            state = RobotState.at_pose(
                [0.0, 0.0, m.standing_height()], m.nominal_pose)
        self._raise_above_ground(state)
        self.state = state
        # the motion is tracked in the frame it was started in: remember
        # where the reference origin sits relative to the initial state
        ref0 = self.motion.sample(self.phase)
        self._ref_offset = state.base_position - ref0.base_position
        self._ref_offset[2] = 0.0
        self._loop_shift = np.zeros(3)

        self.filter = FilterState(m.nominal_pose)
        self.commands: deque[ActuatorCommand] = deque(maxlen=4)
        self.commands.append(ActuatorCommand(m.nominal_pose.copy(), -1.0))
        self.steps = 0
        self._done = False
        sensor = self._sensor_frame(state)
        self.sensor_history = deque([sensor] * HISTORY_LENGTH, maxlen=HISTORY_LENGTH)
        self.action_history = deque([np.zeros(ACTION_WIDTH)] * HISTORY_LENGTH,
                                    maxlen=HISTORY_LENGTH)
        return self.observation()

    def _raise_above_ground(self, state: RobotState) -> None:
        feet = self.sim.foot_positions(state)
        deficit = (self.sim.model.foot_radius - feet[:, 2]).max()
        if deficit > 0.0:
            state.base_position[2] += deficit

    def reference(self, phase: float | None = None) -> ReferenceTarget:
        """Reference target at the given (default: current) phase, shifted
        into the episode's tracking frame."""
        ref = self.motion.sample(self.phase if phase is None else phase)
        shift = self._ref_offset + self._loop_shift
        return ReferenceTarget(
            base_position=ref.base_position + shift,
            base_orientation=ref.base_orientation,
            joint_positions=ref.joint_positions,
            base_linear_velocity=ref.base_linear_velocity,
            base_angular_velocity=ref.base_angular_velocity,
            joint_velocities=ref.joint_velocities,
        )

    def filter_action(self, action: np.ndarray) -> ActuatorCommand:
        """Clamp, offset by the nominal pose, low-pass, and timestamp."""
        action = np.clip(np.asarray(action, dtype=float), -ACTION_CLAMP, ACTION_CLAMP)
        raw = self.sim.morphology.nominal_pose + action
        return ActuatorCommand(self.filter.apply(raw), self.state.time)

    def step(self, action: np.ndarray):
        """One policy step: returns (observation, reward, done, info)."""
        if self._done:
            raise ConfigurationError("step() called on a finished episode; reset first")
        action = np.clip(np.asarray(action, dtype=float), -ACTION_CLAMP, ACTION_CLAMP)
        cmd = self.filter_action(action)
        self.commands.append(cmd)

        diverged = False
        if self.kinematic_override:
            self._advance_phase()
            ref = self.reference()
            self.state = RobotState(
                base_position=ref.base_position.copy(),
                base_orientation=ref.base_orientation.copy(),
                base_linear_velocity=ref.base_linear_velocity.copy(),
                base_angular_velocity=ref.base_angular_velocity.copy(),
                joint_positions=ref.joint_positions.copy(),
                joint_velocities=ref.joint_velocities.copy(),
                time=self.state.time + self.policy_dt,
            )
        else:
            try:
                self.state = self.sim.step(self.state, list(self.commands),
                                           SUBSTEPS_PER_STEP)
            except SimulationDiverged:
                diverged = True
            self._advance_phase()

        self.steps += 1
        if diverged:
            reward, terminated = 0.0, True
            terms = {}
        else:
            ref = self.reference()
            terms = reward_terms(self.state, ref)
            reward = (self.config.weight_pose * terms["pose"]
                      + self.config.weight_velocity * terms["velocity"]
                      + self.config.weight_base_pose * terms["base_pose"]
                      + self.config.weight_base_velocity * terms["base_velocity"])
            terminated = False if self.kinematic_override else \
                check_termination(self.state, ref, self.sim, self.config)
            self.sensor_history.append(self._sensor_frame(self.state))
            self.action_history.append(action.copy())

        truncated = self.steps >= self.config.horizon and not terminated
        self._done = terminated or truncated
        info = {
            "phase": self.phase,
            "terminated": terminated,
            "truncated": truncated,
            "reward_terms": terms,
            "steps": self.steps,
        }
        return self.observation(), reward, self._done, info

    def _advance_phase(self) -> None:
        self.phase += self.policy_dt / self.motion.duration
        if self.phase > 1.0:
            if self.motion.loop:
                self.phase -= 1.0
                # carry the base translation accumulated per loop pass
                self._loop_shift = self._loop_shift + (
                    self.motion.base_positions[-1] - self.motion.base_positions[0])
            else:
                self.phase = 1.0

    # -- observation ------------------------------------------------------

    @staticmethod
    def _sensor_frame(state: RobotState) -> np.ndarray:
        frame = np.empty(SENSOR_WIDTH)
        frame[:4] = state.base_orientation
        frame[4:] = state.joint_positions
        return frame

    def observation(self) -> np.ndarray:
        """Flat 421-vector: 15 sensor frames, 15 actions (both oldest to
        newest), then the phase."""
        obs = np.empty(OBSERVATION_LENGTH)
        k = 0
        for frame in self.sensor_history:
            obs[k:k + SENSOR_WIDTH] = frame
            k += SENSOR_WIDTH
        for act in self.action_history:
            obs[k:k + ACTION_WIDTH] = act
            k += ACTION_WIDTH
        obs[k] = self.phase
        return obs

    @property
    def done(self) -> bool:
        return self._done
