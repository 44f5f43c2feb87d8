"""Compiled step loop for free (unforced) variational trajectories.

Long conservation studies take ten thousand implicit solves; this module
JIT-compiles the same Newton iteration ``simulate`` performs through
``vi_step``.  The interpreted path remains the reference implementation
(used for forced runs and wherever numba is unavailable) and the test
suite checks the two produce the same trajectories.

Status codes: 0 ok, 1 Newton failed to converge, 2 step reached a
180-degree relative rotation.
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

_SMALL = 1e-4
_FD_STEP = 1e-7


@njit(cache=True)
def _exp_so3(v):
    theta2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    theta = np.sqrt(theta2)
    if theta < _SMALL:
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    k = np.zeros((3, 3))
    k[0, 1] = -v[2]
    k[0, 2] = v[1]
    k[1, 0] = v[2]
    k[1, 2] = -v[0]
    k[2, 0] = -v[1]
    k[2, 1] = v[0]
    out = np.eye(3) + a * k + b * (k @ k)
    return out


@njit(cache=True)
def _tilde(m):
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = -m[i, j]
        out[i, i] += tr
    return out


@njit(cache=True)
def _f_matrix(eta, theta2):
    theta = np.sqrt(theta2)
    if theta < _SMALL:
        c_outer = -1.0 / 3.0 + theta2 / 30.0 - theta2 * theta2 / 840.0
        c_eye = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
    else:
        s = np.sin(theta)
        c = np.cos(theta)
        c_outer = (theta * c - s) / (theta2 * theta)
        c_eye = s / theta
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = c_outer * eta[i] * eta[j]
        out[i, i] += c_eye
    return out


@njit(cache=True)
def _residual(t_k, jj, pi_k, eta, dt, chord):
    """Lower-node momentum covector minus pi_k; flag is False past 180 deg."""
    theta2 = eta[0] * eta[0] + eta[1] * eta[1] + eta[2] * eta[2]
    if theta2 > (np.pi - 1e-8) ** 2:
        return np.zeros(3), False
    half = _exp_so3(0.5 * eta)
    r_rel = half @ half
    v_t = _tilde(half + half.T)
    yk_t = _tilde(half.T)
    g = 0.5 * np.linalg.solve(_f_matrix(eta, theta2), _tilde(r_rel))
    if chord:
        theta = np.sqrt(theta2)
        if theta < _SMALL:
            scale = 1.0 - theta2 / 24.0 + theta2 * theta2 / 1920.0
            dscale = -1.0 / 12.0 + theta2 / 480.0
        else:
            h = 0.5 * theta
            scale = 2.0 * np.sin(h) / theta
            dscale = (theta * np.cos(h) - 2.0 * np.sin(h)) / (theta2 * theta)
        psi_eff = scale * eta
        m_c = np.empty((3, 3))
        for i in range(3):
            for j in range(3):
                m_c[i, j] = dscale * eta[i] * eta[j]
            m_c[i, i] += scale
        g = m_c @ g
    else:
        psi_eff = eta.copy()
    t_mid = half @ t_k
    w_body = (t_k.T @ psi_eff) / dt
    w = t_mid @ (jj @ w_body)
    psi_hat = np.zeros((3, 3))
    psi_hat[0, 1] = -psi_eff[2]
    psi_hat[0, 2] = psi_eff[1]
    psi_hat[1, 0] = psi_eff[2]
    psi_hat[1, 2] = -psi_eff[0]
    psi_hat[2, 0] = -psi_eff[1]
    psi_hat[2, 1] = psi_eff[0]
    a = g @ r_rel - psi_hat @ np.linalg.solve(v_t, yk_t)
    return a.T @ w - pi_k, True


@njit(cache=True)
def run_free_body(t0, w0, jj, jinv, dt, n_steps, newton_tol, max_iters, chord):
    """Repeated implicit steps of the free rigid body.

    Returns trajectory arrays plus per-step Newton diagnostics; ``pi`` is
    transported exactly (the upper and lower covectors coincide by
    left-invariance of the step energy).
    """
    t_hist = np.empty((n_steps + 1, 3, 3))
    w_hist = np.empty((n_steps + 1, 3))
    iters_h = np.zeros(n_steps + 1)
    res_h = np.zeros(n_steps + 1)
    t_mat = np.ascontiguousarray(t0)
    w = np.ascontiguousarray(w0)
    pi = t_mat @ (jj @ w)
    t_hist[0] = t_mat
    w_hist[0] = w

    for k in range(n_steps):
        eta = dt * (t_mat @ w)
        res, ok = _residual(t_mat, jj, pi, eta, dt, chord)
        if not ok:
            return t_hist, w_hist, iters_h, res_h, 2, k
        res_norm = np.max(np.abs(res))
        iters = 0
        jac = np.zeros((3, 3))
        have_jac = False
        failed = False
        while res_norm > newton_tol and iters < max_iters:
            if not have_jac:
                for col in range(3):
                    bumped = eta.copy()
                    bumped[col] += _FD_STEP
                    r2, ok = _residual(t_mat, jj, pi, bumped, dt, chord)
                    if not ok:
                        return t_hist, w_hist, iters_h, res_h, 2, k
                    jac[:, col] = (r2 - res) / _FD_STEP
                have_jac = True
            delta = np.linalg.solve(jac, -res)
            step_scale = 1.0
            improved = False
            for _ in range(12):
                trial = eta + step_scale * delta
                trial_res, ok = _residual(t_mat, jj, pi, trial, dt, chord)
                if not ok:
                    return t_hist, w_hist, iters_h, res_h, 2, k
                trial_norm = np.max(np.abs(trial_res))
                if trial_norm < res_norm:
                    eta = trial
                    res = trial_res
                    res_norm = trial_norm
                    improved = True
                    break
                step_scale *= 0.5
            iters += 1
            if not improved:
                if step_scale < 1.0 and have_jac:
                    have_jac = False  # refresh and retry
                    continue
                failed = True
                break
        if failed or res_norm > newton_tol:
            return t_hist, w_hist, iters_h, res_h, 1, k
        # polish toward the floating-point floor
        while have_jac and iters < max_iters and res_norm > 0.0:
            trial = eta + np.linalg.solve(jac, -res)
            trial_res, ok = _residual(t_mat, jj, pi, trial, dt, chord)
            if not ok:
                break
            trial_norm = np.max(np.abs(trial_res))
            if trial_norm >= res_norm:
                break
            prev_norm = res_norm
            eta = trial
            res = trial_res
            res_norm = trial_norm
            iters += 1
            if trial_norm > 0.25 * prev_norm:
                break
        t_mat = np.ascontiguousarray(_exp_so3(eta) @ t_mat)
        w = jinv @ (t_mat.T @ pi)
        t_hist[k + 1] = t_mat
        w_hist[k + 1] = w
        iters_h[k + 1] = iters
        res_h[k + 1] = res_norm
    return t_hist, w_hist, iters_h, res_h, 0, -1
