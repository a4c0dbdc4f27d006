"""Jitted numerical core: recursive articulated-body forward dynamics,
penalty contact, PD torques, and the semi-implicit substep loop.

Spatial vectors are [angular; linear] in body-local coordinates. All
kernels are float64 and allocation-light; the substep loop runs entirely
inside numba.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NB = 13  # bodies
NJ = 12  # joints


@njit(cache=True, fastmath=False)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True, fastmath=False)
def quat_to_mat(q):
    """wxyz unit quaternion -> rotation matrix (world <- body)."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = 1 - 2 * (y * y + z * z)
    R[0, 1] = 2 * (x * y - w * z)
    R[0, 2] = 2 * (x * z + w * y)
    R[1, 0] = 2 * (x * y + w * z)
    R[1, 1] = 1 - 2 * (x * x + z * z)
    R[1, 2] = 2 * (y * z - w * x)
    R[2, 0] = 2 * (x * z - w * y)
    R[2, 1] = 2 * (y * z + w * x)
    R[2, 2] = 1 - 2 * (x * x + y * y)
    return R


@njit(cache=True, fastmath=False)
def quat_mul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@njit(cache=True, fastmath=False)
def quat_exp(phi):
    """Rotation-vector exponential as a wxyz quaternion."""
    angle = np.sqrt(phi[0] ** 2 + phi[1] ** 2 + phi[2] ** 2)
    out = np.empty(4)
    if angle < 1e-12:
        out[0] = 1.0
        out[1] = 0.5 * phi[0]
        out[2] = 0.5 * phi[1]
        out[3] = 0.5 * phi[2]
    else:
        half = 0.5 * angle
        s = np.sin(half) / angle
        out[0] = np.cos(half)
        out[1] = s * phi[0]
        out[2] = s * phi[1]
        out[3] = s * phi[2]
    n = np.sqrt(out[0] ** 2 + out[1] ** 2 + out[2] ** 2 + out[3] ** 2)
    for i in range(4):
        out[i] /= n
    return out


@njit(cache=True, fastmath=False)
def _axis_rotation(axis, q):
    """Rotation of the child frame relative to the parent about `axis`."""
    c, s = np.cos(q), np.sin(q)
    x, y, z = axis[0], axis[1], axis[2]
    C = 1.0 - c
    R = np.empty((3, 3))
    R[0, 0] = c + x * x * C
    R[0, 1] = x * y * C - z * s
    R[0, 2] = x * z * C + y * s
    R[1, 0] = y * x * C + z * s
    R[1, 1] = c + y * y * C
    R[1, 2] = y * z * C - x * s
    R[2, 0] = z * x * C - y * s
    R[2, 1] = z * y * C + x * s
    R[2, 2] = c + z * z * C
    return R


@njit(cache=True, fastmath=False)
def kinematics(parent, axis, p_tree, base_pos, base_quat, v_lin_w, w_w, qj, qdj):
    """Forward kinematics + velocity propagation.

    Returns world rotations Rw (13,3,3), world origins ow (13,3), the
    parent->child coordinate rotations E (13,3,3), and body-coordinate
    spatial velocities v (13,6).
    """
    Rw = np.empty((NB, 3, 3))
    ow = np.empty((NB, 3))
    E = np.empty((NB, 3, 3))
    v = np.empty((NB, 6))

    R0 = quat_to_mat(base_quat)
    Rw[0] = R0
    ow[0] = base_pos
    E[0] = np.eye(3)
    wb = R0.T @ w_w
    vb = R0.T @ v_lin_w
    v[0, :3] = wb
    v[0, 3:] = vb

    for i in range(1, NB):
        p = parent[i]
        j = i - 1
        Rj = _axis_rotation(axis[j], qj[j])
        E[i] = Rj.T
        Rw[i] = Rw[p] @ Rj
        ow[i] = ow[p] + Rw[p] @ p_tree[i]
        wp = v[p, :3]
        vp = v[p, 3:]
        w_child = E[i] @ wp
        v_child = E[i] @ (vp + _cross(wp, p_tree[i]))
        v[i, :3] = w_child + axis[j] * qdj[j]
        v[i, 3:] = v_child
    return Rw, ow, E, v


@njit(cache=True, fastmath=False)
def foot_contacts(Rw, ow, v, mass, foot_body, foot_offset, foot_radius,
                  k_n, d_n, mu, reg_vel, dt):
    """Penalty normal force + regularized Coulomb friction per foot.

    Velocity-proportional terms are capped at an effective viscous
    coefficient of 0.5 * m_foot / dt. Beyond that, an explicitly
    integrated damping force overshoots (the stability bound for a mass m
    under viscous drag d is d * dt / m < 2) and the feet chatter at half
    the substep rate instead of settling. The cap keeps the commanded
    damping and friction law intact at resolvable slip speeds for any
    link-mass draw.

    Returns world-frame forces (4,3) applied at the foot centers and
    contact flags (4,).
    """
    forces = np.zeros((4, 3))
    flags = np.zeros(4, dtype=np.bool_)
    for f in range(4):
        b = foot_body[f]
        pos = ow[b] + Rw[b] @ foot_offset[f]
        delta = foot_radius[f] - pos[2]
        if delta <= 0.0:
            continue
        flags[f] = True
        vel = Rw[b] @ (v[b, 3:] + _cross(v[b, :3], foot_offset[f]))
        visc_cap = 0.5 * mass[b] / dt
        d_eff = min(d_n, visc_cap)
        fn = k_n * delta - d_eff * vel[2]
        if fn <= 0.0:
            continue
        forces[f, 2] = fn
        vt = np.sqrt(vel[0] ** 2 + vel[1] ** 2)
        if vt > 1e-12:
            ft = mu * fn * np.tanh(vt / reg_vel)
            if ft > visc_cap * vt:
                ft = visc_cap * vt
            forces[f, 0] = -ft * vel[0] / vt
            forces[f, 1] = -ft * vel[1] / vt
    return forces, flags


@njit(cache=True, fastmath=False)
def pd_torques(kp, kd, tau_max, motor_damping, qj, qdj, target):
    tau = np.empty(NJ)
    for j in range(NJ):
        t = kp[j] * (target[j] - qj[j]) - kd[j] * qdj[j] - motor_damping * qdj[j]
        if t > tau_max[j]:
            t = tau_max[j]
        elif t < -tau_max[j]:
            t = -tau_max[j]
        tau[j] = t
    return tau


@njit(cache=True, fastmath=False)
def _spatial_inertia(mass, com, inertia):
    """6x6 spatial inertia about the body origin, body coordinates."""
    I = np.zeros((6, 6))
    cx = np.zeros((3, 3))
    cx[0, 1] = -com[2]
    cx[0, 2] = com[1]
    cx[1, 0] = com[2]
    cx[1, 2] = -com[0]
    cx[2, 0] = -com[1]
    cx[2, 1] = com[0]
    Ibar = inertia - mass * (cx @ cx)
    for a in range(3):
        for b in range(3):
            I[a, b] = Ibar[a, b]
            I[a, 3 + b] = mass * cx[a, b]
            I[3 + a, b] = -mass * cx[a, b]
    I[3, 3] = mass
    I[4, 4] = mass
    I[5, 5] = mass
    return I


@njit(cache=True, fastmath=False)
def _motion_transform(E_i, r):
    """6x6 parent->child spatial motion transform for child origin at r."""
    X = np.zeros((6, 6))
    rx = np.zeros((3, 3))
    rx[0, 1] = -r[2]
    rx[0, 2] = r[1]
    rx[1, 0] = r[2]
    rx[1, 2] = -r[0]
    rx[2, 0] = -r[1]
    rx[2, 1] = r[0]
    Erx = -(E_i @ rx)
    for a in range(3):
        for b in range(3):
            X[a, b] = E_i[a, b]
            X[3 + a, b] = Erx[a, b]
            X[3 + a, 3 + b] = E_i[a, b]
    return X


@njit(cache=True, fastmath=False)
def articulated_body_accelerations(
    parent, axis, p_tree, mass, com, inertia,
    Rw, ow, E, v, qdj, tau, f_ext_w, gravity, b_dt,
):
    """Articulated-body forward dynamics for the 13-body template.

    `f_ext_w` is a (13, 6) array of world-frame external wrenches about
    each body origin ([torque; force]); gravity is applied internally.
    `b_dt` is a per-joint implicit viscous term b * dt: a damping torque
    -b * qd evaluated at the end-of-step velocity. It adds to the
    joint-space diagonal, so it stays stable for any gain or link mass
    (the torque -b * qd itself must already be included in `tau`).
    Returns the base spatial acceleration (6, body coordinates, [angular;
    linear]) and the 12 joint accelerations.
    """
    IA = np.empty((NB, 6, 6))
    pA = np.empty((NB, 6))
    cbias = np.zeros((NB, 6))
    Xup = np.empty((NB, 6, 6))
    U = np.empty((NJ, 6))
    d = np.empty(NJ)
    u = np.empty(NJ)

    for i in range(NB):
        IA[i] = _spatial_inertia(mass[i], com[i], inertia[i])
        Iv = IA[i] @ v[i]
        w = v[i, :3]
        vl = v[i, 3:]
        bias = np.empty(6)
        bias[:3] = _cross(w, Iv[:3]) + _cross(vl, Iv[3:])
        bias[3:] = _cross(w, Iv[3:])
        # gravity at the com + external wrench, world -> body coordinates
        fg = np.zeros(3)
        fg[2] = -mass[i] * gravity
        ng = _cross(Rw[i] @ com[i], fg)
        fx = Rw[i].T @ (f_ext_w[i, 3:] + fg)
        nx = Rw[i].T @ (f_ext_w[i, :3] + ng)
        pA[i] = bias
        pA[i, :3] -= nx
        pA[i, 3:] -= fx
        if i > 0:
            j = i - 1
            Xup[i] = _motion_transform(E[i], p_tree[i])
            # c = v x (S qdot)
            cbias[i, :3] = _cross(v[i, :3], axis[j]) * qdj[j]
            cbias[i, 3:] = _cross(v[i, 3:], axis[j]) * qdj[j]

    for i in range(NB - 1, 0, -1):
        j = i - 1
        p = parent[i]
        Ui = np.empty(6)
        for a in range(6):
            s = 0.0
            for b in range(3):
                s += IA[i, a, b] * axis[j, b]
            Ui[a] = s
        U[j] = Ui
        dj = axis[j, 0] * Ui[0] + axis[j, 1] * Ui[1] + axis[j, 2] * Ui[2] + b_dt[j]
        d[j] = dj
        uj = tau[j] - (axis[j, 0] * pA[i, 0] + axis[j, 1] * pA[i, 1]
                       + axis[j, 2] * pA[i, 2])
        u[j] = uj
        Ia = IA[i] - np.outer(Ui, Ui) / dj
        pa = pA[i] + Ia @ cbias[i] + Ui * (uj / dj)
        Xi = Xup[i]
        IA[p] += Xi.T @ Ia @ Xi
        pA[p] += Xi.T @ pa

    a = np.empty((NB, 6))
    a[0] = np.linalg.solve(IA[0], -pA[0])
    qdd = np.empty(NJ)
    for i in range(1, NB):
        j = i - 1
        ap = Xup[i] @ a[parent[i]] + cbias[i]
        qdd[j] = (u[j] - (U[j, 0] * ap[0] + U[j, 1] * ap[1] + U[j, 2] * ap[2]
                          + U[j, 3] * ap[3] + U[j, 4] * ap[4] + U[j, 5] * ap[5])) / d[j]
        a[i] = ap
        a[i, :3] += axis[j] * qdd[j]
    return a[0], qdd


@njit(cache=True, fastmath=False)
def forward_dynamics_kernel(
    parent, axis, p_tree, mass, com, inertia,
    base_pos, base_quat, v_lin_w, w_w, qj, qdj,
    tau, f_ext_w, gravity,
):
    Rw, ow, E, v = kinematics(parent, axis, p_tree, base_pos, base_quat,
                              v_lin_w, w_w, qj, qdj)
    return articulated_body_accelerations(
        parent, axis, p_tree, mass, com, inertia, Rw, ow, E, v, qdj, tau,
        f_ext_w, gravity, np.zeros(NJ),
    )


@njit(cache=True, fastmath=False)
def run_substeps(
    parent, axis, p_tree, mass, com, inertia,
    foot_body, foot_offset, foot_radius,
    kp, kd, tau_max, motor_damping, friction, k_n, d_n, reg_vel,
    base_pos, base_quat, v_lin_w, w_w, qj, qdj,
    targets, gravity, dt, vel_limit,
):
    """Advance `targets.shape[0]` substeps in place.

    `targets` is the per-substep PD target schedule (n, 12), already
    resolved for actuation latency. Returns (status, contact_flags):
    status 0 = ok, 1 = diverged.
    """
    n = targets.shape[0]
    flags = np.zeros(4, dtype=np.bool_)
    f_ext_w = np.zeros((NB, 6))
    for step in range(n):
        Rw, ow, E, v = kinematics(parent, axis, p_tree, base_pos, base_quat,
                                  v_lin_w, w_w, qj, qdj)
        forces, flags = foot_contacts(Rw, ow, v, mass, foot_body, foot_offset,
                                      foot_radius, k_n, d_n, friction, reg_vel, dt)
        for i in range(NB):
            for a in range(6):
                f_ext_w[i, a] = 0.0
        for f in range(4):
            b = foot_body[f]
            pt = ow[b] + Rw[b] @ foot_offset[f]
            rel = pt - ow[b]
            f_ext_w[b, 3:] += forces[f]
            f_ext_w[b, :3] += _cross(rel, forces[f])
        # PD torque with the viscous part implicit while the clamp is
        # inactive; a clamped torque has no velocity slope, so its
        # implicit term is zero.
        tau = np.empty(NJ)
        b_dt = np.zeros(NJ)
        for j in range(NJ):
            b = kd[j] + motor_damping
            t = kp[j] * (targets[step, j] - qj[j]) - b * qdj[j]
            if t > tau_max[j]:
                t = tau_max[j]
            elif t < -tau_max[j]:
                t = -tau_max[j]
            else:
                b_dt[j] = b * dt
            tau[j] = t
        a0, qdd = articulated_body_accelerations(
            parent, axis, p_tree, mass, com, inertia, Rw, ow, E, v, qdj, tau,
            f_ext_w, gravity, b_dt,
        )
        R0 = Rw[0]
        alpha_w = R0 @ a0[:3]
        acc_w = R0 @ (a0[3:] + _cross(v[0, :3], v[0, 3:]))
        # semi-implicit Euler: velocities first, then positions
        for a in range(3):
            w_w[a] += alpha_w[a] * dt
            v_lin_w[a] += acc_w[a] * dt
            base_pos[a] += v_lin_w[a] * dt
        for j in range(NJ):
            qdj[j] += qdd[j] * dt
            qj[j] += qdj[j] * dt
        dq = quat_exp(w_w * dt)
        qnew = quat_mul(dq, base_quat)
        norm = np.sqrt(qnew[0] ** 2 + qnew[1] ** 2 + qnew[2] ** 2 + qnew[3] ** 2)
        for a in range(4):
            base_quat[a] = qnew[a] / norm
        vmax = 0.0
        for a in range(3):
            vmax = max(vmax, abs(v_lin_w[a]), abs(w_w[a]))
        for j in range(NJ):
            vmax = max(vmax, abs(qdj[j]))
        if vmax > vel_limit or not np.isfinite(vmax):
            return 1, flags
    return 0, flags
