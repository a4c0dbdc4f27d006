"""Reference motions: storage, phase-indexed sampling, rescaling, and
synthetic gait generation.

A motion is a fixed-rate sequence of frames (base pose + joint angles).
Velocities are never stored; they come from finite differences of the
stored frames, so they are always consistent with the positions.

Motion file format (JSON, versioned):

    {
      "format": "quadlab-motion",   fixed magic string
      "version": 1,                 format version
      "name": "pace",               identifier
      "frame_dt": 0.0333,           seconds between frames, > 0
      "loop": true,                 whether the motion wraps around
      "frames": [                   >= 2 entries, fixed rate
        {
          "base_position": [x, y, z],             meters, world
          "base_orientation": [w, x, y, z],       unit quaternion
          "joint_positions": [q0 ... q11]         rad, (FR,FL,RR,RL) x
                                                  (abduction, hip, knee)
        }, ...
      ]
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from quadlab.morphology import ConfigurationError, Morphology, preset_morphology

FORMAT_NAME = "quadlab-motion"
FORMAT_VERSION = 1
LOOP_CLOSURE_TOL = 0.2  # rad per joint


class MotionError(ValueError):
    """Invalid motion data or out-of-range phase."""


@dataclass(frozen=True)
class ReferenceTarget:
    """One sampled point of a reference motion, with velocities."""

    base_position: np.ndarray  # (3,) m
    base_orientation: np.ndarray  # (4,) wxyz
    joint_positions: np.ndarray  # (12,) rad
    base_linear_velocity: np.ndarray  # (3,) m/s
    base_angular_velocity: np.ndarray  # (3,) rad/s, world
    joint_velocities: np.ndarray  # (12,) rad/s


def _quat_normalize(q):
    return q / np.linalg.norm(q)


def _quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def _quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def _slerp(q0, q1, t):
    if np.dot(q0, q1) < 0.0:
        q1 = -q1
    dot = min(1.0, max(-1.0, float(np.dot(q0, q1))))
    theta = math.acos(dot)
    if theta < 1e-9:
        return _quat_normalize(q0 + t * (q1 - q0))
    s = math.sin(theta)
    return _quat_normalize(
        (math.sin((1.0 - t) * theta) / s) * q0 + (math.sin(t * theta) / s) * q1
    )


def _rotation_vector(q):
    """Rotation vector of a wxyz quaternion (angle * axis)."""
    if q[0] < 0.0:
        q = -q
    w = min(1.0, q[0])
    angle = 2.0 * math.acos(w)
    s = math.sqrt(max(0.0, 1.0 - w * w))
    if s < 1e-9:
        return 2.0 * q[1:]
    return (angle / s) * q[1:]


@dataclass(frozen=True, eq=False)
class ReferenceMotion:
    base_positions: np.ndarray  # (n, 3)
    base_orientations: np.ndarray  # (n, 4) wxyz
    joint_positions: np.ndarray  # (n, 12)
    frame_dt: float
    loop: bool
    name: str = "motion"
    _velocities: dict = field(default_factory=dict, compare=False, repr=False)

    # -- invariants -------------------------------------------------------

    def validate(self) -> None:
        n = len(self.base_positions)
        if n < 2:
            raise MotionError("motion needs at least 2 frames")
        if not self.frame_dt > 0:
            raise MotionError("frame_dt must be positive")
        if self.base_orientations.shape != (n, 4) or \
                self.joint_positions.shape != (n, 12):
            raise MotionError("inconsistent frame array shapes")
        norms = np.linalg.norm(self.base_orientations, axis=1)
        if np.abs(norms - 1.0).max() > 1e-6:
            raise MotionError("base orientations must be unit quaternions")
        if self.loop:
            gap = np.abs(self.joint_positions[0] - self.joint_positions[-1]).max()
            if gap > LOOP_CLOSURE_TOL:
                raise MotionError(
                    f"looped motion does not close: joint gap {gap:.3f} rad")

    @property
    def num_frames(self) -> int:
        return len(self.base_positions)

    @property
    def duration(self) -> float:
        return (self.num_frames - 1) * self.frame_dt

    # -- sampling ---------------------------------------------------------

    def _frame_velocities(self):
        """Per-frame velocities by central differences (cached).

        Interior frames use the central difference of their neighbors;
        the ends wrap for looped motions and fall back to one-sided
        differences otherwise.
        """
        if "v" in self._velocities:
            return self._velocities["v"]
        n = self.num_frames
        pos = self.base_positions
        quat = self.base_orientations
        jnt = self.joint_positions
        lin = np.zeros((n, 3))
        ang = np.zeros((n, 3))
        jv = np.zeros((n, 12))
        for i in range(n):
            if 0 < i < n - 1:
                ia, ib, span = i - 1, i + 1, 2.0 * self.frame_dt
            elif self.loop:
                # frame 0 and frame n-1 describe the same loop point
                ia, ib, span = (n - 2, 1, 2.0 * self.frame_dt)
            elif i == 0:
                ia, ib, span = 0, 1, self.frame_dt
            else:
                ia, ib, span = n - 2, n - 1, self.frame_dt
            lin[i] = (pos[ib] - pos[ia]) / span
            jv[i] = (jnt[ib] - jnt[ia]) / span
            rel = _quat_mul(quat[ib], _quat_conj(quat[ia]))
            ang[i] = _rotation_vector(_quat_normalize(rel)) / span
        if self.loop:
            # the wrapped central difference straddles the loop seam,
            # where base translation restarts and accumulated rotation
            # aliases mod 2 pi; splice translation, one-side rotation
            seam = pos[-1] - pos[0]
            lin[0] = lin[n - 1] = (pos[1] - pos[n - 2] + seam) / (2.0 * self.frame_dt)
            rel = _quat_mul(quat[1], _quat_conj(quat[0]))
            ang[0] = _rotation_vector(_quat_normalize(rel)) / self.frame_dt
            rel = _quat_mul(quat[n - 1], _quat_conj(quat[n - 2]))
            ang[n - 1] = _rotation_vector(_quat_normalize(rel)) / self.frame_dt
        out = (lin, ang, jv)
        self._velocities["v"] = out
        return out

    def sample(self, phase: float) -> ReferenceTarget:
        """Interpolated frame + velocities at phase in [0, 1]."""
        if not 0.0 <= phase <= 1.0:
            raise MotionError(f"phase {phase} outside [0, 1]")
        lin, ang, jv = self._frame_velocities()
        t = phase * (self.num_frames - 1)
        i = min(int(t), self.num_frames - 2)
        f = t - i
        return ReferenceTarget(
            base_position=(1 - f) * self.base_positions[i] + f * self.base_positions[i + 1],
            base_orientation=_slerp(self.base_orientations[i],
                                    self.base_orientations[i + 1], f),
            joint_positions=(1 - f) * self.joint_positions[i] + f * self.joint_positions[i + 1],
            base_linear_velocity=(1 - f) * lin[i] + f * lin[i + 1],
            base_angular_velocity=(1 - f) * ang[i] + f * ang[i + 1],
            joint_velocities=(1 - f) * jv[i] + f * jv[i + 1],
        )

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "name": self.name,
            "frame_dt": self.frame_dt,
            "loop": self.loop,
            "frames": [
                {
                    "base_position": [float(x) for x in self.base_positions[i]],
                    "base_orientation": [float(x) for x in self.base_orientations[i]],
                    "joint_positions": [float(x) for x in self.joint_positions[i]],
                }
                for i in range(self.num_frames)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReferenceMotion":
        if doc.get("format") != FORMAT_NAME:
            raise MotionError("not a motion document")
        if doc.get("version") != FORMAT_VERSION:
            raise MotionError(f"unsupported motion format version {doc.get('version')}")
        frames = doc["frames"]
        motion = cls(
            base_positions=np.array([f["base_position"] for f in frames], dtype=float),
            base_orientations=np.array([f["base_orientation"] for f in frames], dtype=float),
            joint_positions=np.array([f["joint_positions"] for f in frames], dtype=float),
            frame_dt=float(doc["frame_dt"]),
            loop=bool(doc["loop"]),
            name=str(doc.get("name", "motion")),
        )
        motion.validate()
        return motion

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path: str | Path) -> "ReferenceMotion":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def rescale_for_morphology(motion: ReferenceMotion, source: Morphology,
                           target: Morphology) -> ReferenceMotion:
    """Geometric-similarity rescale: base translation and height scale by
    the leg-length ratio, joint angles and timing stay unchanged."""
    if source.leg_length <= 0.0:
        raise MotionError("source morphology has zero leg length")
    lam = target.leg_length / source.leg_length
    out = ReferenceMotion(
        base_positions=motion.base_positions * lam,
        base_orientations=motion.base_orientations.copy(),
        joint_positions=motion.joint_positions.copy(),
        frame_dt=motion.frame_dt,
        loop=motion.loop,
        name=motion.name,
    )
    out.validate()
    return out


# -- synthetic gaits ------------------------------------------------------

@dataclass(frozen=True)
class GaitParams:
    period: float = 0.6  # s per stride
    cycles: int = 5
    duty_factor: float = 0.6  # stance fraction of the stride
    speed: float = 0.3  # m/s forward (pace) or rad/s yaw (spin)
    step_height: float = 0.05  # m swing-foot clearance
    frame_rate: float = 30.0  # frames per second

    def validate(self) -> None:
        if self.period <= 0 or self.cycles < 1 or self.frame_rate <= 0:
            raise ConfigurationError("period, cycles, frame_rate must be positive")
        if not 0.0 < self.duty_factor < 1.0:
            raise ConfigurationError("duty_factor must lie in (0, 1)")
        if self.step_height < 0:
            raise ConfigurationError("step_height must be non-negative")


def _leg_ik(morphology: Morphology, x: float, z: float) -> tuple[float, float]:
    """Sagittal two-link inverse kinematics for one leg.

    (x, z) is the foot-center position in the hip-pitch frame (x forward,
    z up, so z < 0 below the hip). Returns (hip, knee) angles honoring
    the morphology's knee bend direction.
    """
    leg = morphology.legs[0]
    l1, l2 = leg.thigh_length, leg.calf_length
    d2 = x * x + z * z
    d = math.sqrt(d2)
    if not abs(l1 - l2) < d < l1 + l2:
        raise ConfigurationError(f"foot target ({x:.3f}, {z:.3f}) unreachable")
    cos_fold = (l1 * l1 + l2 * l2 - d2) / (2.0 * l1 * l2)
    fold = math.acos(min(1.0, max(-1.0, cos_fold)))  # interior knee angle
    knee = -morphology.knee_sign * (math.pi - fold)
    # thigh points along -z when hip = 0; measure from that direction
    gamma = math.atan2(x, -z)
    beta = math.acos(min(1.0, max(-1.0, (d2 + l1 * l1 - l2 * l2) / (2.0 * d * l1))))
    hip = gamma + morphology.knee_sign * beta
    return hip, knee


def _swing_profile(s: float) -> tuple[float, float]:
    """Swing-phase horizontal progress and vertical lift shape, s in [0,1].

    Horizontal: smooth (cosine) blend from 0 to 1 with zero end slopes,
    so foot speed is continuous at touchdown/liftoff. Vertical: half sine.
    """
    return 0.5 * (1.0 - math.cos(math.pi * s)), math.sin(math.pi * s)


def _gait_frames(params: GaitParams, leg_phase_offsets, morphology: Morphology,
                 stride_fn, stride: float):
    """Common frame builder: per-frame base pose from `stride_fn`, foot
    targets from the stance/swing cycle, joints from IK.

    `stride` is the fore-aft foot sweep per cycle; during stance the foot
    sweeps backward relative to the hip at stride / (duty * period),
    which must equal the base forward speed for a non-slipping gait.
    """
    n = int(round(params.cycles * params.period * params.frame_rate)) + 1
    dt = 1.0 / params.frame_rate
    stance_h = morphology.standing_height()
    base_pos = np.zeros((n, 3))
    base_quat = np.zeros((n, 4))
    joints = np.zeros((n, 12))
    for k in range(n):
        t = k * dt
        base_pos[k], base_quat[k] = stride_fn(t)
        base_pos[k][2] = stance_h
        for leg in range(4):
            cyc = (t / params.period + leg_phase_offsets[leg]) % 1.0
            if cyc < params.duty_factor:
                # stance: foot fixed on the ground sweeps backward
                s = cyc / params.duty_factor
                x = stride * (0.5 - s)
                lift = 0.0
            else:
                s = (cyc - params.duty_factor) / (1.0 - params.duty_factor)
                prog, shape = _swing_profile(s)
                x = stride * (prog - 0.5)
                lift = params.step_height * shape
            z = -(stance_h - morphology.legs[leg].foot_radius - lift)
            hip, knee = _leg_ik(morphology, x, z)
            joints[k, 3 * leg + 1] = hip
            joints[k, 3 * leg + 2] = knee
    return ReferenceMotion(
        base_positions=base_pos,
        base_orientations=base_quat,
        joint_positions=joints,
        frame_dt=dt,
        loop=True,
        name="gait",
    )


def synth_pace(params: GaitParams | None = None,
               morphology: Morphology | None = None) -> ReferenceMotion:
    """Synthetic pacing gait: same-side legs move in phase.

    Defaults to the A1 nominal scale. The base advances at constant
    forward speed while feet alternate side-to-side stance.
    """
    params = params or GaitParams()
    params.validate()
    morphology = morphology or preset_morphology("A1")

    def stride(t):
        return np.array([params.speed * t, 0.0, 0.0]), \
            np.array([1.0, 0.0, 0.0, 0.0])

    # legs ordered FR, FL, RR, RL: right side together, left side opposite
    motion = _gait_frames(params, (0.0, 0.5, 0.0, 0.5), morphology, stride,
                          params.speed * params.period * params.duty_factor)
    motion = ReferenceMotion(
        base_positions=motion.base_positions,
        base_orientations=motion.base_orientations,
        joint_positions=motion.joint_positions,
        frame_dt=motion.frame_dt,
        loop=True,
        name="pace",
    )
    motion.validate()
    return motion


def synth_spin(params: GaitParams | None = None,
               morphology: Morphology | None = None) -> ReferenceMotion:
    """Synthetic in-place spin: monotone base yaw, stationary base origin,
    diagonal legs stepping in antiphase."""
    params = params or GaitParams(speed=0.5)
    params.validate()
    morphology = morphology or preset_morphology("A1")

    def stride(t):
        half = 0.5 * params.speed * t
        return np.zeros(3), np.array([math.cos(half), 0.0, 0.0, math.sin(half)])

    # feet step in place (zero sweep); diagonal pairs alternate
    motion = _gait_frames(params, (0.0, 0.5, 0.5, 0.0), morphology, stride, 0.0)
    motion = ReferenceMotion(
        base_positions=motion.base_positions,
        base_orientations=motion.base_orientations,
        joint_positions=motion.joint_positions,
        frame_dt=motion.frame_dt,
        loop=True,
        name="spin",
    )
    motion.validate()
    return motion
