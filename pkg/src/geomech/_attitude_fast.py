"""Compiled inner loop for the closed attitude-tracking scenario.

The scenario steps a 3x3/3-vector state two hundred thousand times with
four controller evaluations per step; interpreter overhead dominates pure
numpy there.  This module JIT-compiles the exact same arithmetic.  When
numba is unavailable the runner falls back to the interpreted loop, which
is kept as the reference implementation and compared against this one in
the test suite.

Status codes returned by ``run_attitude_loop``: 0 ok, 1 attitude error
reached 180 degrees (step index reported), 2 attitude left SO(3).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _cross(a, b, out):
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


@njit(cache=True)
def _polar(m):
    """Two Newton-Schulz sweeps toward the polar factor (near-rotation input)."""
    e = m.T @ m - np.eye(3)
    defect = 0.0
    for i in range(3):
        for j in range(3):
            if abs(e[i, j]) > defect:
                defect = abs(e[i, j])
    if defect > 1e-4:
        return m, False
    x = m @ (np.eye(3) - 0.5 * e + 0.375 * (e @ e))
    e2 = x.T @ x - np.eye(3)
    return x @ (np.eye(3) - 0.5 * e2), True


@njit(cache=True)
def _torque(rd, wdm, wddm, r_mat, w, jj, p_g, f_g, anti_tol):
    """Backstepping torque plus the error pieces needed for recording.

    Returns (q, one_plus_tr, e_r, e_om, ok).
    """
    e = rd.T @ r_mat
    one_plus_tr = 1.0 + e[0, 0] + e[1, 1] + e[2, 2]
    q = np.zeros(3)
    e_r = np.zeros(3)
    e_om = np.zeros(3)
    if one_plus_tr < anti_tol:
        return q, one_plus_tr, e_r, e_om, False
    sq = np.sqrt(one_plus_tr)
    e_r[0] = (e[2, 1] - e[1, 2]) / (2.0 * sq)
    e_r[1] = (e[0, 2] - e[2, 0]) / (2.0 * sq)
    e_r[2] = (e[1, 0] - e[0, 1]) / (2.0 * sq)
    trans = e.T @ wdm
    for i in range(3):
        e_om[i] = w[i] - trans[i]
    # beta = (2 e_r e_r^T + tr(E) I - E^T) / (2 sqrt(1 + tr E))
    beta_eom = np.zeros(3)
    tr_e = one_plus_tr - 1.0
    for i in range(3):
        acc = 0.0
        for j in range(3):
            b_ij = 2.0 * e_r[i] * e_r[j] - e[j, i]
            if i == j:
                b_ij += tr_e
            acc += b_ij * e_om[j]
        beta_eom[i] = acc / (2.0 * sq)
    jw = jj @ w
    gyro = np.zeros(3)
    _cross(w, jw, gyro)
    w_x_trans = np.zeros(3)
    _cross(w, trans, w_x_trans)
    err = w - trans + p_g @ e_r  # Omega - Omega_target
    q_vec = (
        gyro
        + jj @ (e.T @ wddm)
        - jj @ w_x_trans
        - jj @ (p_g @ beta_eom)
        - f_g @ err
    )
    return q_vec, one_plus_tr, e_r, e_om, True


@njit(cache=True)
def run_attitude_loop(rd, wd, wdd, t_init, w_init, dt, jj, jinv, p_g, f_g, s_g,
                      k_r, anti_tol):
    n = (rd.shape[0] - 1) // 2
    r_hist = np.empty((n + 1, 3, 3))
    w_hist = np.empty((n + 1, 3))
    psi_h = np.empty(n + 1)
    er_h = np.empty(n + 1)
    eom_h = np.empty(n + 1)
    q_h = np.empty((n + 1, 3))
    v_h = np.empty(n + 1)
    ortho_h = np.empty(n + 1)
    r_mat = t_init.copy()
    w = w_init.copy()

    for k in range(n + 1):
        idx = 2 * k
        q, one_plus_tr, e_r, e_om, ok = _torque(
            rd[idx], wd[idx], wdd[idx], r_mat, w, jj, p_g, f_g, anti_tol
        )
        if not ok:
            return (r_hist, w_hist, psi_h, er_h, eom_h, q_h, v_h, ortho_h, 1, k)
        sq = np.sqrt(one_plus_tr)
        psi = 2.0 - sq
        err = e_om + p_g @ e_r  # Omega - Omega_target
        serr = s_g @ err
        v_val = k_r * psi + 0.5 * (err[0] * serr[0] + err[1] * serr[1] + err[2] * serr[2])
        r_hist[k] = r_mat
        w_hist[k] = w
        psi_h[k] = psi
        er_h[k] = np.sqrt(e_r[0] ** 2 + e_r[1] ** 2 + e_r[2] ** 2)
        eom_h[k] = np.sqrt(e_om[0] ** 2 + e_om[1] ** 2 + e_om[2] ** 2)
        q_h[k] = q
        v_h[k] = v_val
        ortho = r_mat.T @ r_mat - np.eye(3)
        acc = 0.0
        for i in range(3):
            for j in range(3):
                acc += ortho[i, j] * ortho[i, j]
        ortho_h[k] = np.sqrt(acc)
        if k == n:
            break

        # classical RK4 with stage attitudes projected back to the group
        k1t = r_mat @ _hat(w)
        k1w = jinv @ (q - _gyro(w, jj))
        t2, ok2 = _polar(r_mat + 0.5 * dt * k1t)
        w2 = w + 0.5 * dt * k1w
        q2, _, _, _, ok = _torque(rd[idx + 1], wd[idx + 1], wdd[idx + 1], t2, w2,
                                  jj, p_g, f_g, anti_tol)
        if not (ok and ok2):
            return (r_hist, w_hist, psi_h, er_h, eom_h, q_h, v_h, ortho_h,
                    1 if ok2 else 2, k)
        k2t = t2 @ _hat(w2)
        k2w = jinv @ (q2 - _gyro(w2, jj))
        t3, ok2 = _polar(r_mat + 0.5 * dt * k2t)
        w3 = w + 0.5 * dt * k2w
        q3, _, _, _, ok = _torque(rd[idx + 1], wd[idx + 1], wdd[idx + 1], t3, w3,
                                  jj, p_g, f_g, anti_tol)
        if not (ok and ok2):
            return (r_hist, w_hist, psi_h, er_h, eom_h, q_h, v_h, ortho_h,
                    1 if ok2 else 2, k)
        k3t = t3 @ _hat(w3)
        k3w = jinv @ (q3 - _gyro(w3, jj))
        t4, ok2 = _polar(r_mat + dt * k3t)
        w4 = w + dt * k3w
        q4, _, _, _, ok = _torque(rd[idx + 2], wd[idx + 2], wdd[idx + 2], t4, w4,
                                  jj, p_g, f_g, anti_tol)
        if not (ok and ok2):
            return (r_hist, w_hist, psi_h, er_h, eom_h, q_h, v_h, ortho_h,
                    1 if ok2 else 2, k)
        k4t = t4 @ _hat(w4)
        k4w = jinv @ (q4 - _gyro(w4, jj))
        r_new = r_mat + (dt / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        r_mat, ok2 = _polar(r_new)
        if not ok2:
            return (r_hist, w_hist, psi_h, er_h, eom_h, q_h, v_h, ortho_h, 2, k)
        w = w + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)

    return (r_hist, w_hist, psi_h, er_h, eom_h, q_h, v_h, ortho_h, 0, -1)


@njit(cache=True)
def _hat(v):
    out = np.zeros((3, 3))
    out[0, 1] = -v[2]
    out[0, 2] = v[1]
    out[1, 0] = v[2]
    out[1, 2] = -v[0]
    out[2, 0] = -v[1]
    out[2, 1] = v[0]
    return out


@njit(cache=True)
def _gyro(w, jj):
    jw = jj @ w
    out = np.zeros(3)
    _cross(w, jw, out)
    return out
