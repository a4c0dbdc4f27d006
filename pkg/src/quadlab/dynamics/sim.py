"""Simulation front end: robot state, actuation latency, stepping."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from quadlab.dynamics import kernels
from quadlab.dynamics.model import (
    FRICTION_REGULARIZATION_VEL,
    GRAVITY,
    VELOCITY_DIVERGENCE_LIMIT,
    SimModel,
    build_model,
)
from quadlab.morphology import Morphology

DEFAULT_SUBSTEP_DT = 0.001  # 1 kHz

_LATENCY_EPS = 1e-12


class SimulationDiverged(RuntimeError):
    """Raised when state velocities explode past the divergence limit."""


class NumericalError(ValueError):
    """Raised for non-finite inputs to the dynamics."""


@dataclass
class RobotState:
    base_position: np.ndarray  # (3,) m, world
    base_orientation: np.ndarray  # (4,) wxyz unit quaternion
    base_linear_velocity: np.ndarray  # (3,) m/s, world
    base_angular_velocity: np.ndarray  # (3,) rad/s, world
    joint_positions: np.ndarray  # (12,) rad
    joint_velocities: np.ndarray  # (12,) rad/s
    foot_contacts: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=bool))
    time: float = 0.0

    def copy(self) -> "RobotState":
        return RobotState(
            self.base_position.copy(), self.base_orientation.copy(),
            self.base_linear_velocity.copy(), self.base_angular_velocity.copy(),
            self.joint_positions.copy(), self.joint_velocities.copy(),
            self.foot_contacts.copy(), self.time,
        )

    def validate(self) -> None:
        for arr in (self.base_position, self.base_orientation,
                    self.base_linear_velocity, self.base_angular_velocity,
                    self.joint_positions, self.joint_velocities):
            if not np.all(np.isfinite(arr)):
                raise NumericalError("non-finite robot state")
        if abs(np.linalg.norm(self.base_orientation) - 1.0) > 1e-9:
            raise NumericalError("base quaternion not normalized")

    @classmethod
    def at_pose(cls, base_position, joint_positions, base_orientation=None,
                time: float = 0.0) -> "RobotState":
        quat = np.array([1.0, 0.0, 0.0, 0.0]) if base_orientation is None \
            else np.asarray(base_orientation, dtype=float).copy()
        return cls(
            base_position=np.asarray(base_position, dtype=float).copy(),
            base_orientation=quat,
            base_linear_velocity=np.zeros(3),
            base_angular_velocity=np.zeros(3),
            joint_positions=np.asarray(joint_positions, dtype=float).copy(),
            joint_velocities=np.zeros(12),
            time=time,
        )


@dataclass(frozen=True)
class ActuatorCommand:
    target_joint_positions: np.ndarray  # (12,) rad
    timestamp: float  # s, simulation time the command was issued


def active_command_index(timestamps: np.ndarray, t: float, latency: float) -> int:
    """Newest command visible at time t under a zero-order hold with latency.

    Returns -1 when no command has become visible yet.
    """
    visible = np.nonzero(np.asarray(timestamps) <= t - latency + _LATENCY_EPS)[0]
    return int(visible[-1]) if visible.size else -1


class Simulation:
    """One simulated robot. Single-threaded; instances are independent."""

    def __init__(self, morphology: Morphology, draw=None,
                 substep_dt: float = DEFAULT_SUBSTEP_DT):
        self.morphology = morphology
        self.model: SimModel = build_model(morphology, draw)
        self.substep_dt = substep_dt
        self.latency = 0.0 if draw is None else float(draw.latency)
        self.gravity = GRAVITY

    # -- pieces (used directly by tests and diagnostics) ------------------

    def kinematics(self, s: RobotState):
        return kernels.kinematics(
            self.model.parent, self.model.axis, self.model.p_tree,
            s.base_position, s.base_orientation,
            s.base_linear_velocity, s.base_angular_velocity,
            s.joint_positions, s.joint_velocities,
        )

    def foot_positions(self, s: RobotState) -> np.ndarray:
        Rw, ow, _, _ = self.kinematics(s)
        m = self.model
        return np.stack([
            ow[m.foot_body[f]] + Rw[m.foot_body[f]] @ m.foot_offset[f]
            for f in range(4)
        ])

    def contact_forces(self, s: RobotState) -> np.ndarray:
        """World-frame contact force on each foot (4, 3)."""
        m = self.model
        Rw, ow, _, v = self.kinematics(s)
        forces, _ = kernels.foot_contacts(
            Rw, ow, v, m.mass, m.foot_body, m.foot_offset, m.foot_radius,
            m.contact_stiffness, m.contact_damping, m.friction,
            FRICTION_REGULARIZATION_VEL, self.substep_dt,
        )
        return forces

    def pd_torques(self, s: RobotState, cmd: ActuatorCommand) -> np.ndarray:
        m = self.model
        return kernels.pd_torques(
            m.kp, m.kd, m.tau_max, m.motor_damping,
            s.joint_positions, s.joint_velocities, cmd.target_joint_positions,
        )

    def forward_dynamics(self, s: RobotState, joint_torques: np.ndarray,
                         foot_forces: np.ndarray | None = None) -> np.ndarray:
        """Generalized accelerations (18,).

        First 6 entries: base spatial acceleration in base-body coordinates
        ([angular; linear]); remaining 12: joint accelerations.
        `foot_forces` is an optional (4, 3) world-frame force per foot.
        """
        s.validate()
        joint_torques = np.asarray(joint_torques, dtype=float)
        if not np.all(np.isfinite(joint_torques)):
            raise NumericalError("non-finite joint torques")
        m = self.model
        Rw, ow, E, v = self.kinematics(s)
        f_ext = np.zeros((kernels.NB, 6))
        if foot_forces is not None:
            foot_forces = np.asarray(foot_forces, dtype=float)
            if not np.all(np.isfinite(foot_forces)):
                raise NumericalError("non-finite external forces")
            for f in range(4):
                b = m.foot_body[f]
                pt = ow[b] + Rw[b] @ m.foot_offset[f]
                f_ext[b, 3:] += foot_forces[f]
                f_ext[b, :3] += np.cross(pt - ow[b], foot_forces[f])
        a0, qdd = kernels.articulated_body_accelerations(
            m.parent, m.axis, m.p_tree, m.mass, m.com, m.inertia,
            Rw, ow, E, v, s.joint_velocities, joint_torques, f_ext, self.gravity,
            np.zeros(kernels.NJ),
        )
        return np.concatenate([a0, qdd])

    # -- stepping ---------------------------------------------------------

    def _target_schedule(self, commands: list[ActuatorCommand], t0: float,
                         n: int) -> np.ndarray:
        """Resolve the latency-delayed PD target for each of n substeps."""
        targets = np.empty((n, 12))
        ts = np.array([c.timestamp for c in commands]) if commands else np.empty(0)
        fallback = self.morphology.nominal_pose
        for k in range(n):
            idx = active_command_index(ts, t0 + k * self.substep_dt, self.latency)
            targets[k] = commands[idx].target_joint_positions if idx >= 0 else fallback
        return targets

    def step(self, s: RobotState, commands: list[ActuatorCommand],
             n_substeps: int = 1) -> RobotState:
        """Advance `n_substeps` substeps under a zero-order-hold command.

        The newest command with timestamp <= t - latency is applied; before
        any command is visible the nominal pose is held. Raises
        SimulationDiverged on state explosion.
        """
        out = s.copy()
        targets = self._target_schedule(commands, s.time, n_substeps)
        m = self.model
        status, flags = kernels.run_substeps(
            m.parent, m.axis, m.p_tree, m.mass, m.com, m.inertia,
            m.foot_body, m.foot_offset, m.foot_radius,
            m.kp, m.kd, m.tau_max, m.motor_damping, m.friction,
            m.contact_stiffness, m.contact_damping, FRICTION_REGULARIZATION_VEL,
            out.base_position, out.base_orientation,
            out.base_linear_velocity, out.base_angular_velocity,
            out.joint_positions, out.joint_velocities,
            targets, self.gravity, self.substep_dt, VELOCITY_DIVERGENCE_LIMIT,
        )
        out.time = s.time + n_substeps * self.substep_dt
        out.foot_contacts = np.asarray(flags, dtype=bool)
        if status != 0:
            raise SimulationDiverged(f"simulation diverged at t={out.time:.3f}")
        return out


def total_energy(sim: Simulation, s: RobotState) -> float:
    """Kinetic + gravitational potential energy of the whole robot."""
    m = sim.model
    Rw, ow, _, v = sim.kinematics(s)
    energy = 0.0
    for i in range(kernels.NB):
        I6 = kernels._spatial_inertia(m.mass[i], m.com[i], m.inertia[i])
        energy += 0.5 * float(v[i] @ I6 @ v[i])
        com_w = ow[i] + Rw[i] @ m.com[i]
        energy += m.mass[i] * sim.gravity * com_w[2]
    return energy


def write_state_trace(states: list[RobotState], path: str | Path) -> None:
    """Line-delimited per-step trace: time, base pose, joint positions."""
    with open(path, "w") as fh:
        fh.write("# time x y z qw qx qy qz q0..q11\n")
        for s in states:
            fields = [s.time, *s.base_position, *s.base_orientation, *s.joint_positions]
            fh.write(" ".join(repr(float(x)) for x in fields) + "\n")
