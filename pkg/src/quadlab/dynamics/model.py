"""Array-form articulated model for the fixed quadruped template.

13 bodies: base (floating) plus four legs x (hip, thigh, calf). The foot
sphere is lumped into its calf. Joint/body ordering is (FR, FL, RR, RL) x
(abduction, hip, knee), matching the rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from quadlab.morphology import LEG_NAMES, Morphology

NUM_BODIES = 13
NUM_JOINTS = 12
GRAVITY = 9.81

# Penalty contact: stiffness scales with robot mass so penetration depth is
# morphology independent; damping is critical.
CONTACT_STIFFNESS_PER_KG = 3000.0
FRICTION_REGULARIZATION_VEL = 0.01  # m/s
NOMINAL_TORQUE_LIMIT = 33.5  # Nm, A1-class actuator

VELOCITY_DIVERGENCE_LIMIT = 1.0e4


@dataclass
class SimModel:
    """Flat arrays consumed by the jitted kernels. Read-only after build."""

    parent: np.ndarray  # (13,) int64, -1 for base
    axis: np.ndarray  # (12, 3) joint axis in child frame
    p_tree: np.ndarray  # (13, 3) joint origin in parent frame (base row unused)
    mass: np.ndarray  # (13,)
    com: np.ndarray  # (13, 3) center of mass in body frame
    inertia: np.ndarray  # (13, 3, 3) about com, body frame
    foot_body: np.ndarray  # (4,) body index of each foot's calf
    foot_offset: np.ndarray  # (4, 3) foot center in calf frame
    foot_radius: np.ndarray  # (4,)
    kp: np.ndarray  # (12,)
    kd: np.ndarray  # (12,)
    tau_max: np.ndarray  # (12,)
    motor_damping: float
    friction: float
    contact_stiffness: float
    contact_damping: float
    total_mass: float

    def kernel_args(self) -> tuple:
        return (
            self.parent, self.axis, self.p_tree, self.mass, self.com, self.inertia,
        )


def _merged_calf(leg, calf_inertia: np.ndarray, foot_inertia: np.ndarray,
                 mass_factors: tuple[float, float], inertia_factors: tuple[float, float]):
    """Lump the foot sphere into the calf body."""
    m_c = leg.link_masses["calf"] * mass_factors[0]
    m_f = leg.link_masses["foot"] * mass_factors[1]
    i_c = calf_inertia * inertia_factors[0]
    i_f = foot_inertia * inertia_factors[1]
    c_c = np.array([0.0, 0.0, -leg.calf_length / 2.0])
    c_f = np.array([0.0, 0.0, -leg.calf_length])
    m = m_c + m_f
    com = (m_c * c_c + m_f * c_f) / m

    def parallel(i_com, mass, d):
        return i_com + mass * (np.dot(d, d) * np.eye(3) - np.outer(d, d))

    inertia = parallel(i_c, m_c, c_c - com) + parallel(i_f, m_f, c_f - com)
    return m, com, inertia


def build_model(m: Morphology, draw=None, substep_dt: float = 0.001) -> SimModel:
    """Build kernel arrays from a morphology and an optional dynamics draw.

    `draw` is a DynamicsDraw (see quadlab.randomization); None means the
    unrandomized morphology (all factors 1, friction 1, zero damping).
    """
    if draw is None:
        from quadlab.randomization import DynamicsDraw

        draw = DynamicsDraw.neutral()

    parent = np.full(NUM_BODIES, -1, dtype=np.int64)
    axis = np.zeros((NUM_JOINTS, 3))
    p_tree = np.zeros((NUM_BODIES, 3))
    mass = np.zeros(NUM_BODIES)
    com = np.zeros((NUM_BODIES, 3))
    inertia = np.zeros((NUM_BODIES, 3, 3))
    foot_body = np.zeros(4, dtype=np.int64)
    foot_offset = np.zeros((4, 3))
    foot_radius = np.zeros(4)

    # Physical link order for per-link randomization factors:
    # base, then per leg (hip, thigh, calf, foot).
    mf = np.asarray(draw.link_mass_factor, dtype=float)
    inf_ = np.asarray(draw.link_inertia_factor, dtype=float)
    if mf.ndim == 0:
        mf = np.full(17, float(mf))
    if inf_.ndim == 0:
        inf_ = np.full(17, float(inf_))

    mass[0] = m.base_mass * mf[0]
    inertia[0] = m.link_inertias["base"] * inf_[0]

    for li, leg in enumerate(m.legs):
        name = LEG_NAMES[li]
        hip_b, thigh_b, calf_b = 1 + 3 * li, 2 + 3 * li, 3 + 3 * li
        k = 1 + 4 * li  # index into the 17-entry factor arrays

        parent[hip_b] = 0
        p_tree[hip_b] = leg.hip_offset
        axis[hip_b - 1] = (1.0, 0.0, 0.0)
        mass[hip_b] = leg.link_masses["hip"] * mf[k]
        com[hip_b] = (0.0, leg.abduction_offset / 2.0, 0.0)
        inertia[hip_b] = m.link_inertias[f"{name}_hip"] * inf_[k]

        parent[thigh_b] = hip_b
        p_tree[thigh_b] = (0.0, leg.abduction_offset, 0.0)
        axis[thigh_b - 1] = (0.0, 1.0, 0.0)
        mass[thigh_b] = leg.link_masses["thigh"] * mf[k + 1]
        com[thigh_b] = (0.0, 0.0, -leg.thigh_length / 2.0)
        inertia[thigh_b] = m.link_inertias[f"{name}_thigh"] * inf_[k + 1]

        parent[calf_b] = thigh_b
        p_tree[calf_b] = (0.0, 0.0, -leg.thigh_length)
        axis[calf_b - 1] = (0.0, 1.0, 0.0)
        mass[calf_b], com[calf_b], inertia[calf_b] = _merged_calf(
            leg,
            m.link_inertias[f"{name}_calf"],
            m.link_inertias[f"{name}_foot"],
            (mf[k + 2], mf[k + 3]),
            (inf_[k + 2], inf_[k + 3]),
        )

        foot_body[li] = calf_b
        foot_offset[li] = (0.0, 0.0, -leg.calf_length)
        foot_radius[li] = leg.foot_radius

    total_mass = float(mass.sum())
    kp = m.kp12() * draw.pd_gain_factor
    kd = m.kd12() * draw.pd_gain_factor
    tau_max = np.full(NUM_JOINTS, NOMINAL_TORQUE_LIMIT * draw.motor_strength_factor)

    k_n = CONTACT_STIFFNESS_PER_KG * total_mass
    d_n = 2.0 * np.sqrt(k_n * total_mass)

    for arr in (parent, axis, p_tree, mass, com, inertia, foot_body,
                foot_offset, foot_radius, kp, kd, tau_max):
        arr.setflags(write=False)

    return SimModel(
        parent=parent, axis=axis, p_tree=p_tree, mass=mass, com=com, inertia=inertia,
        foot_body=foot_body, foot_offset=foot_offset, foot_radius=foot_radius,
        kp=kp, kd=kd, tau_max=tau_max,
        motor_damping=float(draw.motor_damping),
        friction=float(draw.ground_friction),
        contact_stiffness=float(k_n),
        contact_damping=float(d_n),
        total_mass=total_mass,
    )
