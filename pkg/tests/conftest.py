"""Shared test helpers: independent rotation constructors and oracles.

Everything here is deliberately built without the library's own exp/log maps
so that tests compare against independent routes.
"""

from __future__ import annotations

import numpy as np
import pytest


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def mexp_series(a: np.ndarray, terms: int = 30) -> np.ndarray:
    """Truncated matrix-exponential power series (oracle for exp_so3)."""
    out = np.eye(3)
    term = np.eye(3)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    return out


def polar_newton(m: np.ndarray, iters: int = 60) -> np.ndarray:
    """Polar rotation factor via the Newton iteration X <- (X + X^-T)/2."""
    x = np.array(m, dtype=float)
    for _ in range(iters):
        x = 0.5 * (x + np.linalg.inv(x).T)
    return x


def random_axis_angle(rng: np.random.Generator, max_angle: float = np.pi):
    """Uniform random axis and angle (not a uniform Haar sample; fine for tests)."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_angle)
    return axis, angle


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random rotation built by QR, independent of the library."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
