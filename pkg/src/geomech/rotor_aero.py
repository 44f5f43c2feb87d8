"""Per-rotor aerodynamic forces and torques from combined momentum theory
and blade element theory.

Momentum theory supplies the induced velocity through the actuator disk;
blade element theory integrates sectional lift and drag over radius and
azimuth, which for a rigid, constant-chord, linearly twisted blade with a
linear lift slope collapses to closed-form coefficient polynomials in the
inflow ratio ``lambda`` and advance ratio ``mu``:

    C_T / (sigma a) = (1/6 + mu^2/4) theta0 - (1 + mu^2) theta_tw / 8 - lambda/4
    C_H / (sigma a) = mu Cd / (4 a) + lambda mu (theta0 - theta_tw/2) / 4
    C_Q / (sigma a) = (1 + mu^2) Cd / (8 a) + lambda (theta0/6 - theta_tw/8 - lambda/4)
    C_R / (sigma a) = -mu (theta0/6 - theta_tw/8 - lambda/8)

The lateral force and pitching-moment integrals vanish identically.  The
solidity ``sigma = N c / (pi R)`` is fixed by requiring the dimensional
blade-element thrust ``N rho a c (Omega R)^2 R [...]`` and the coefficient
form ``C_T rho A (Omega R)^2`` to agree identically.

Sign conventions: the vertical rate ``z_dot`` is the hub's inertial z-up
velocity and enters the inflow ratio as ``(nu1 - z_dot) / (Omega R)``, and
the induced velocity uses the closed form
``nu1 = sqrt(V^2/2 + sqrt((V^2/2)^2 + (W / (2 rho A))^2))``, which grows
with horizontal speed.  Both follow the source model as printed; see the
package README for the caveats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScenarioValidationError, ZeroRotorSpeedError


@dataclass
class RotorGeometry:
    """Blade and airfoil constants.

    ``lift_slope`` is the sectional lift-curve slope (1/rad); the incidence
    distribution is ``theta0 - theta_tw * (r/R)``.
    """

    n_blades: int = 2
    chord: float = 0.02
    radius: float = 0.15
    lift_slope: float = 5.7
    theta0: float = 0.2
    theta_tw: float = 0.04
    cd_bar: float = 0.01

    def __post_init__(self):
        violations = []
        for name in ("n_blades", "chord", "radius", "lift_slope", "cd_bar"):
            if not getattr(self, name) > 0:
                violations.append((name, "must be > 0"))
        if self.theta0 < 0:
            violations.append(("theta0", "must be >= 0"))
        if not violations:
            sigma = self.solidity
            if not 0.0 < sigma < 1.0:
                violations.append(("solidity", f"N c / (pi R) = {sigma:.3f} not in (0, 1)"))
        if violations:
            raise ScenarioValidationError(violations)

    @property
    def solidity(self) -> float:
        return self.n_blades * self.chord / (np.pi * self.radius)

    @property
    def disk_area(self) -> float:
        return np.pi * self.radius**2


@dataclass
class AirState:
    """Flight condition of one rotor.

    ``v_horiz`` is the horizontal airspeed ``sqrt(xdot^2 + ydot^2)``,
    ``z_dot`` the inertial vertical rate (z-up), ``omega_rotor`` the shaft
    speed, and ``weight_supported`` the load used for the induced-velocity
    computation (the static share, or the initial guess of the coupled
    fixed point).
    """

    rho: float = 1.225
    v_horiz: float = 0.0
    z_dot: float = 0.0
    omega_rotor: float = 1000.0
    weight_supported: float = 0.0

    def __post_init__(self):
        if not self.rho > 0.0:
            raise ScenarioValidationError([("rho", "must be > 0")])


@dataclass
class RotorWrench:
    """Hub-frame loads: thrust along the shaft, in-plane drag force, shaft
    torque, and roll moment.  The lateral force and pitching moment are
    identically zero for this blade model."""

    thrust: float
    h_force: float
    torque_shaft: float
    roll_moment: float
    y_force: float = 0.0
    pitch_moment: float = 0.0


def induced_velocity(air: AirState, geom: RotorGeometry) -> float:
    """Momentum-theory induced velocity at the disk (m/s)."""
    half_v2 = 0.5 * air.v_horiz**2
    loading = air.weight_supported / (2.0 * air.rho * geom.disk_area)
    return float(np.sqrt(half_v2 + np.sqrt(half_v2**2 + loading**2)))


def inflow_ratio(air: AirState, geom: RotorGeometry, nu1: float) -> float:
    """``(nu1 - z_dot) / (Omega R)``; climbing (z_dot > nu1) makes it negative."""
    if not air.omega_rotor > 0.0:
        raise ZeroRotorSpeedError("omega_rotor must be > 0")
    return (nu1 - air.z_dot) / (air.omega_rotor * geom.radius)


def advance_ratio(air: AirState, geom: RotorGeometry) -> float:
    """``V / (Omega R)``."""
    if not air.omega_rotor > 0.0:
        raise ZeroRotorSpeedError("omega_rotor must be > 0")
    return air.v_horiz / (air.omega_rotor * geom.radius)


def thrust_coefficient(geom: RotorGeometry, lam: float, mu: float) -> float:
    return geom.solidity * geom.lift_slope * (
        (1.0 / 6.0 + 0.25 * mu * mu) * geom.theta0
        - (1.0 + mu * mu) * geom.theta_tw / 8.0
        - lam / 4.0
    )


def hub_force_coefficient(geom: RotorGeometry, lam: float, mu: float) -> float:
    return geom.solidity * geom.lift_slope * (
        mu * geom.cd_bar / (4.0 * geom.lift_slope)
        + 0.25 * lam * mu * (geom.theta0 - geom.theta_tw / 2.0)
    )


def torque_coefficient(geom: RotorGeometry, lam: float, mu: float) -> float:
    return geom.solidity * geom.lift_slope * (
        (1.0 + mu * mu) * geom.cd_bar / (8.0 * geom.lift_slope)
        + lam * (geom.theta0 / 6.0 - geom.theta_tw / 8.0 - lam / 4.0)
    )


def roll_moment_coefficient(geom: RotorGeometry, lam: float, mu: float) -> float:
    return -geom.solidity * geom.lift_slope * mu * (
        geom.theta0 / 6.0 - geom.theta_tw / 8.0 - lam / 8.0
    )


def rotor_wrench(
    geom: RotorGeometry, air: AirState, coupled: bool = True
) -> RotorWrench:
    """Dimensional rotor loads at the given flight condition.

    With ``coupled=True`` (default) the induced velocity and the thrust are
    solved self-consistently: the disk loading that feeds the momentum
    theory is the thrust the blade model returns, iterated to 1e-8 with
    damping from ``air.weight_supported`` as the starting guess.  With
    ``coupled=False`` the static loading ``air.weight_supported`` is used
    directly.
    """
    if not air.omega_rotor > 0.0:
        raise ZeroRotorSpeedError("omega_rotor must be > 0")
    mu = advance_ratio(air, geom)
    pressure = air.rho * geom.disk_area * (air.omega_rotor * geom.radius) ** 2

    def thrust_at(load: float) -> tuple[float, float]:
        nu1 = induced_velocity(
            AirState(air.rho, air.v_horiz, air.z_dot, air.omega_rotor, load), geom
        )
        lam = inflow_ratio(air, geom, nu1)
        return thrust_coefficient(geom, lam, mu) * pressure, lam

    if coupled:
        load = air.weight_supported
        lam = 0.0
        for _ in range(100):
            thrust, lam = thrust_at(load)
            if abs(thrust - load) < 1e-8:
                load = thrust
                break
            load = load + 0.5 * (thrust - load)
        else:
            raise ZeroRotorSpeedError(
                f"induced-velocity fixed point failed to converge (last load {load!r})"
            )
        thrust = load
    else:
        thrust, lam = thrust_at(air.weight_supported)

    return RotorWrench(
        thrust=thrust,
        h_force=hub_force_coefficient(geom, lam, mu) * pressure,
        torque_shaft=torque_coefficient(geom, lam, mu) * pressure * geom.radius,
        roll_moment=roll_moment_coefficient(geom, lam, mu) * pressure * geom.radius,
    )


def hover_rotor_speed(geom: RotorGeometry, thrust: float, rho: float) -> float:
    """Shaft speed delivering ``thrust`` in static hover (V = z_dot = 0).

    Inverts the static model ``thrust = C_T(lambda_h) rho A (Omega R)^2``
    with ``lambda_h = sqrt(thrust / (2 rho A)) / (Omega R)``; this is the
    calibration an ideal speed controller would apply.
    """
    from scipy.optimize import brentq

    if not thrust > 0.0:
        raise ScenarioValidationError([("thrust", "hover calibration needs thrust > 0")])
    area = geom.disk_area
    nu_h = np.sqrt(thrust / (2.0 * rho * area))

    def defect(omega):
        lam = nu_h / (omega * geom.radius)
        return thrust_coefficient(geom, lam, 0.0) * rho * area * (omega * geom.radius) ** 2 - thrust

    lo, hi = 1e-3, 1e6
    return float(brentq(defect, lo, hi, xtol=1e-12, rtol=1e-14))


class HoverCalibration:
    """Thrust-to-shaft-speed lookup built once per scenario.

    Dense log-spaced samples of :func:`hover_rotor_speed` interpolated
    linearly; evaluation is vectorised over the four rotors.
    """

    def __init__(self, geom: RotorGeometry, rho: float, hover_thrust: float,
                 lo_frac: float = 1e-3, hi_frac: float = 6.0, n: int = 768):
        self.geom = geom
        self.rho = rho
        self._thrusts = hover_thrust * np.geomspace(lo_frac, hi_frac, n)
        self._speeds = np.array(
            [hover_rotor_speed(geom, t, rho) for t in self._thrusts]
        )

    def __call__(self, thrust):
        t = np.clip(thrust, self._thrusts[0], self._thrusts[-1])
        return np.interp(t, self._thrusts, self._speeds)
