import numpy as np
import pytest

from geomech.errors import ScenarioValidationError
from geomech.rigid_body import (
    BodyWrench,
    InertiaTensor,
    QuadrotorParams,
    QuadrotorState,
    RigidBodyState,
    attitude_rhs,
    kinetic_energy,
    quadrotor_rhs,
    rk4_attitude_step,
    rk4_step,
    spatial_momentum,
)

from conftest import random_rotation


@pytest.fixture
def j321():
    return InertiaTensor.from_diag(3.0, 2.0, 1.0)


def test_inertia_validation():
    InertiaTensor.from_diag(3.0, 2.0, 1.0)  # boundary of the triangle inequality
    with pytest.raises(ScenarioValidationError):
        InertiaTensor.from_diag(-1.0, 2.0, 3.0)
    with pytest.raises(ScenarioValidationError):
        InertiaTensor.from_diag(1.0, 1.0, 5.0)  # unphysical: 1 + 1 < 5
    with pytest.raises(ScenarioValidationError):
        InertiaTensor(np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))


def test_inertia_inverse_cached(j321):
    np.testing.assert_allclose(j321.j @ j321.j_inv, np.eye(3), atol=1e-14)


def test_state_validation(rng):
    with pytest.raises(Exception):
        RigidBodyState(1.1 * np.eye(3), np.zeros(3))
    s = RigidBodyState(random_rotation(rng), np.array([1.0, 2.0, 3.0]))
    assert s.omega.dtype == np.float64


def test_attitude_rhs_equilibrium(j321):
    s = RigidBodyState(np.eye(3), np.zeros(3))
    t_dot, w_dot = attitude_rhs(s, j321, np.zeros(3))
    np.testing.assert_array_equal(t_dot, np.zeros((3, 3)))
    np.testing.assert_array_equal(w_dot, np.zeros(3))


def test_attitude_rhs_principal_axis_spin(j321):
    s = RigidBodyState(np.eye(3), np.array([0.0, 0.0, 1.0]))
    _, w_dot = attitude_rhs(s, j321, np.zeros(3))
    np.testing.assert_allclose(w_dot, np.zeros(3), atol=1e-15)


def test_attitude_rhs_gyroscopic_term(j321):
    # omega x J omega = (1,1,0) x (3,2,0) = (0,0,-1)  ->  omega_dot = (0,0,1)
    s = RigidBodyState(np.eye(3), np.array([1.0, 1.0, 0.0]))
    _, w_dot = attitude_rhs(s, j321, np.zeros(3))
    np.testing.assert_allclose(w_dot, np.array([0.0, 0.0, 1.0]), atol=1e-14)


def test_attitude_rhs_potential_callback(j321):
    s = RigidBodyState(np.eye(3), np.zeros(3))
    _, w_dot = attitude_rhs(s, j321, np.zeros(3), potential_moment=lambda T: np.array([3.0, 0.0, 0.0]))
    np.testing.assert_allclose(w_dot, np.array([1.0, 0.0, 0.0]), atol=1e-15)


def test_continuous_momentum_conservation_identity(rng, j321):
    # d/dt (T J omega) = T (hat(omega) J omega + J omega_dot) == 0 when M = 0
    for _ in range(20):
        s = RigidBodyState(random_rotation(rng), rng.normal(size=3))
        _, w_dot = attitude_rhs(s, j321, np.zeros(3))
        residual = s.T @ (np.cross(s.omega, j321.j @ s.omega) + j321.j @ w_dot)
        assert np.linalg.norm(residual) < 1e-12


def quad_params():
    return QuadrotorParams(4.34, InertiaTensor.from_diag(0.084, 0.085, 0.12), 0.315)


def test_quadrotor_hover_fixed_point():
    p = quad_params()
    s = QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))
    r_dot, v_dot, R_dot, O_dot = quadrotor_rhs(s, p, p.mass * p.g, np.zeros(3))
    for out in (r_dot, v_dot, O_dot):
        np.testing.assert_allclose(out, np.zeros(3), atol=1e-12)
    np.testing.assert_array_equal(R_dot, np.zeros((3, 3)))


def test_quadrotor_free_fall_and_double_thrust():
    p = quad_params()
    s = QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))
    _, v_dot, _, _ = quadrotor_rhs(s, p, 0.0, np.zeros(3))
    np.testing.assert_allclose(v_dot, np.array([0.0, 0.0, -9.81]), atol=1e-12)
    _, v_dot, _, _ = quadrotor_rhs(s, p, 2.0 * p.mass * p.g, np.zeros(3))
    np.testing.assert_allclose(v_dot, np.array([0.0, 0.0, 9.81]), atol=1e-12)


def test_quadrotor_extra_wrench():
    p = quad_params()
    s = QuadrotorState(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))
    extra = BodyWrench(np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.012]))
    _, v_dot, _, O_dot = quadrotor_rhs(s, p, 0.0, np.zeros(3), extra)
    np.testing.assert_allclose(v_dot[0], 1.0 / p.mass, atol=1e-14)
    np.testing.assert_allclose(O_dot[2], 0.012 / 0.12, atol=1e-12)


def test_kinetic_energy_and_momentum(j321, rng):
    s = RigidBodyState(np.eye(3), np.array([1.0, 0.0, 0.0]))
    assert kinetic_energy(s, j321) == pytest.approx(1.5)
    assert kinetic_energy(RigidBodyState(np.eye(3), np.zeros(3)), j321) == 0.0

    s = RigidBodyState(np.eye(3), np.array([1.0, 1.0, 1.0]))
    np.testing.assert_allclose(spatial_momentum(s, j321), np.array([3.0, 2.0, 1.0]))

    # energy independent of attitude, |momentum| preserved by attitude
    q = random_rotation(rng)
    s2 = RigidBodyState(s.T @ q, s.omega)
    assert kinetic_energy(s2, j321) == kinetic_energy(s, j321)
    assert np.linalg.norm(spatial_momentum(s2, j321)) == pytest.approx(
        np.linalg.norm(spatial_momentum(s, j321)), abs=1e-12
    )


def test_rk4_zero_rhs():
    y = np.array([1.0, 2.0])
    np.testing.assert_array_equal(rk4_step(lambda t, x: np.zeros(2), y, 0.0, 0.1), y)


def test_rk4_scalar_exponential():
    # single step reproduces the exact RK4 amplification factor,
    # 1 + h + h^2/2 + h^3/6 + h^4/24, whose defect vs e^h is h^5/120
    h = 0.1
    y1 = rk4_step(lambda t, x: x, np.array([1.0]), 0.0, h)
    factor = 1.0 + h + h**2 / 2 + h**3 / 6 + h**4 / 24
    assert y1[0] == pytest.approx(factor, rel=1e-15)
    assert abs(y1[0] - np.exp(h)) < 1e-7

    # integrating to t = 0.1 with dt = 0.01 hits e^0.1 to 1e-8 relative
    y = np.array([1.0])
    for k in range(10):
        y = rk4_step(lambda t, x: x, y, 0.01 * k, 0.01)
    assert abs(y[0] - np.exp(0.1)) / np.exp(0.1) < 1e-8


def test_rk4_richardson_order(j321):
    # one step vs two half steps differ at O(dt^5) on the free rigid body
    def step(state, dt, n):
        for k in range(n):
            state = rk4_attitude_step(
                state, j321, lambda t, T, w: np.zeros(3), k * dt, dt
            )
        return state

    s0 = RigidBodyState(np.eye(3), np.array([1.0, 1.0, 1.0]))
    errs = []
    for dt in (0.1, 0.05):
        full = step(s0, dt, 1)
        half = step(s0, dt / 2.0, 2)
        errs.append(np.linalg.norm(full.T - half.T) + np.linalg.norm(full.omega - half.omega))
    ratio = errs[0] / errs[1]
    assert 20.0 < ratio < 45.0  # ~2^5


def test_rk4_attitude_stays_on_so3(j321):
    s = RigidBodyState(np.eye(3), np.array([1.0, 1.0, 1.0]))
    for k in range(200):
        s = rk4_attitude_step(s, j321, lambda t, T, w: np.zeros(3), 0.01 * k, 0.01)
    assert np.linalg.norm(s.T.T @ s.T - np.eye(3)) < 1e-13
