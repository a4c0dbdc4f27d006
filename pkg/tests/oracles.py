"""Independent dynamics oracles used by the tests.

Everything here is formulated in world-origin spatial coordinates (all 6D
vectors expressed at the world origin in world axes), deliberately
different from the body-local recursion in the package, and uses its own
quaternion/rotation helpers. The mass matrix comes from unit-acceleration
inverse dynamics and forward dynamics from a dense linear solve.
"""

import numpy as np

NB = 13


def quat_mat(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def skew(v):
    return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])


def axis_angle(axis, q):
    a = np.asarray(axis, dtype=float)
    K = skew(a)
    return np.eye(3) + np.sin(q) * K + (1 - np.cos(q)) * (K @ K)


def fk(model, state):
    """World rotations and origins for all 13 bodies."""
    Rw = np.zeros((NB, 3, 3))
    ow = np.zeros((NB, 3))
    Rw[0] = quat_mat(state.base_orientation)
    ow[0] = state.base_position
    for i in range(1, NB):
        p = model.parent[i]
        Rj = axis_angle(model.axis[i - 1], state.joint_positions[i - 1])
        Rw[i] = Rw[p] @ Rj
        ow[i] = ow[p] + Rw[p] @ model.p_tree[i]
    return Rw, ow


def motion_matrix(model, Rw, ow):
    """S: (13, 18, 6) is overkill; return the 18 world-origin columns plus
    a per-body map of which columns lie on its path to the base."""
    S = np.zeros((18, 6))
    R0, o0 = Rw[0], ow[0]
    S[:6].fill(0)
    S0 = np.zeros((6, 6))
    S0[:3, :3] = R0
    S0[3:, :3] = skew(o0) @ R0
    S0[3:, 3:] = R0
    for k in range(6):
        S[k] = S0[:, k]
    for j in range(12):
        body = j + 1
        a_w = Rw[body] @ model.axis[j]
        p = ow[body]
        S[6 + j, :3] = a_w
        S[6 + j, 3:] = np.cross(p, a_w)
    return S


def spatial_inertia_w0(mass, com_w, R, I_com):
    c = skew(com_w)
    Ibar = R @ I_com @ R.T - mass * (c @ c)
    I = np.zeros((6, 6))
    I[:3, :3] = Ibar
    I[:3, 3:] = mass * c
    I[3:, :3] = -mass * c
    I[3:, 3:] = mass * np.eye(3)
    return I


def cross_motion(v, u):
    w, vl = v[:3], v[3:]
    return np.concatenate([np.cross(w, u[:3]), np.cross(w, u[3:]) + np.cross(vl, u[:3])])


def cross_force(v, f):
    w, vl = v[:3], v[3:]
    return np.concatenate([np.cross(w, f[:3]) + np.cross(vl, f[3:]), np.cross(w, f[3:])])


def generalized_forces(model, state, u, udot, gravity=0.0, foot_forces=None):
    """Inverse dynamics in world-origin coordinates.

    u, udot: generalized velocity/acceleration; the base part is the base
    spatial twist/acceleration in base-body coordinates (matching the
    package's convention). Returns the 18-vector of generalized forces.
    """
    Rw, ow = fk(model, state)
    S = motion_matrix(model, Rw, ow)

    v = np.zeros((NB, 6))
    a = np.zeros((NB, 6))
    v[0] = S[:6].T @ u[:6]
    a[0] = S[:6].T @ udot[:6]
    for i in range(1, NB):
        j = i - 1
        p = model.parent[i]
        col = S[6 + j]
        v[i] = v[p] + col * u[6 + j]
        a[i] = a[p] + col * udot[6 + j] + cross_motion(v[i], col) * u[6 + j]

    f = np.zeros((NB, 6))
    for i in range(NB):
        com_w = ow[i] + Rw[i] @ model.com[i]
        I = spatial_inertia_w0(model.mass[i], com_w, Rw[i], model.inertia[i])
        f[i] = I @ a[i] + cross_force(v[i], I @ v[i])
        grav = np.array([0.0, 0.0, -model.mass[i] * gravity])
        f[i, :3] -= np.cross(com_w, grav)
        f[i, 3:] -= grav
    if foot_forces is not None:
        for leg in range(4):
            b = model.foot_body[leg]
            pt = ow[b] + Rw[b] @ model.foot_offset[leg]
            F = np.asarray(foot_forces[leg], dtype=float)
            f[b, :3] -= np.cross(pt, F)
            f[b, 3:] -= F

    subtree = f.copy()
    for i in range(NB - 1, 0, -1):
        subtree[model.parent[i]] += subtree[i]

    tau = np.zeros(18)
    for k in range(6):
        tau[k] = S[k] @ subtree[0]
    for j in range(12):
        tau[6 + j] = S[6 + j] @ subtree[j + 1]
    return tau


def mass_matrix(model, state):
    """Unit-acceleration inverse dynamics, batched over the 18 columns.

    With zero velocity, column k of H is the generalized force for unit
    acceleration of coordinate k; all 18 columns share the kinematics, so
    they are computed together as H[row] = S[row] . sum over the row
    body's subtree of I_d J_d.
    """
    Rw, ow = fk(model, state)
    S = motion_matrix(model, Rw, ow)
    # which generalized coordinates lie on each body's path to the base
    mask = np.zeros((NB, 18), dtype=bool)
    mask[:, :6] = True
    for i in range(1, NB):
        mask[i] = mask[model.parent[i]]
        mask[i, 6 + i - 1] = True
    F = np.zeros((NB, 6, 18))
    for i in range(NB):
        com_w = ow[i] + Rw[i] @ model.com[i]
        I = spatial_inertia_w0(model.mass[i], com_w, Rw[i], model.inertia[i])
        F[i] = I @ (S.T * mask[i])
    for i in range(NB - 1, 0, -1):
        F[model.parent[i]] += F[i]
    H = np.zeros((18, 18))
    H[:6] = S[:6] @ F[0]
    for j in range(12):
        H[6 + j] = S[6 + j] @ F[j + 1]
    return H


def forward_dynamics_dense(model, state, joint_torques, gravity,
                           foot_forces=None):
    """Dense-solve forward dynamics: H udot = tau_applied - bias."""
    u = np.zeros(18)
    R0 = quat_mat(state.base_orientation)
    u[:3] = R0.T @ state.base_angular_velocity
    u[3:6] = R0.T @ state.base_linear_velocity
    u[6:] = state.joint_velocities
    H = mass_matrix(model, state)
    bias = generalized_forces(model, state, u, np.zeros(18), gravity=gravity,
                              foot_forces=foot_forces)
    tau = np.zeros(18)
    tau[6:] = joint_torques
    return np.linalg.solve(H, tau - bias), H
