"""Adaptive control laws and their closed-loop assemblies.

A :class:`ClosedLoop` carries the loop dynamics in two coordinate systems:
gain-error coordinates (y, z) with z = theta_hat - theta, and estimate
coordinates (y, theta_hat).  Both are honest, separately-coded vector fields;
their agreement under the coordinate shift is probed at construction and is
one of the package-level invariants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ode_core import DisturbanceSignal, IntegratorConfig, Trajectory, integrate
from .systems import DynamicalSystem, _assemble, make_deadzone_loop, make_scalar_adaptive_loop

__all__ = [
    "AdaptiveController",
    "ClosedLoop",
    "make_matching_condition_loop",
    "make_high_gain_loop",
    "make_sigma_mod_loop",
    "make_deadzone_controller_loop",
    "sigma_mod_equilibria",
    "build_loop",
    "loop_ids",
]


@dataclass(frozen=True)
class AdaptiveController:
    """Static feedback plus estimate update law.

    ``static_law(y, theta_hat) -> u`` and ``update_law(y, theta_hat) ->
    d(theta_hat)/dt``.  ``gains`` records the tunable constants.
    """

    static_law: Callable
    update_law: Callable
    gains: dict
    n_y: int = 1
    n_theta: int = 1

    def __post_init__(self):
        # the control at y = 0 must stay finite for any estimate
        for th in (-10.0, 0.0, 10.0):
            u = self.static_law(np.zeros(self.n_y), th * np.ones(self.n_theta))
            if not np.all(np.isfinite(np.atleast_1d(u))):
                raise ValueError("static law is not finite at y = 0")


@dataclass(frozen=True)
class ClosedLoop:
    """Closed adaptive loop exposed as dynamical systems plus a control extractor.

    ``error_system`` has state (y..., z...); ``estimate_system`` (when the
    loop has a parameter-estimate form) has state (y..., theta_hat...).
    """

    name: str
    error_system: DynamicalSystem
    estimate_system: DynamicalSystem | None
    controller: AdaptiveController
    theta: np.ndarray
    n_plant: int
    lyapunov: Callable | None = None

    def estimate_ic_from_error(self, x_err: np.ndarray) -> np.ndarray:
        x = np.asarray(x_err, dtype=float)
        out = x.copy()
        out[self.n_plant:] = x[self.n_plant:] + self.theta
        return out

    def error_ic_from_estimate(self, x_est: np.ndarray) -> np.ndarray:
        x = np.asarray(x_est, dtype=float)
        out = x.copy()
        out[self.n_plant:] = x[self.n_plant:] - self.theta
        return out

    def control_along(self, traj: Trajectory, coords: str = "estimate") -> np.ndarray:
        """u(t) evaluated pointwise from stored states (consistent by construction)."""
        if coords not in ("estimate", "error"):
            raise ValueError("coords must be 'estimate' or 'error'")
        us = np.empty(len(traj.times))
        for i, x in enumerate(traj.states):
            y = x[: self.n_plant]
            gain = x[self.n_plant:]
            theta_hat = gain if coords == "estimate" else gain + self.theta
            us[i] = float(self.controller.static_law(y, theta_hat))
        return us


def _probe_equivalence(loop: ClosedLoop, x_err0: np.ndarray, horizon: float = 1.0) -> None:
    """Integrate both coordinate forms on an identical fixed grid and compare y."""
    if loop.estimate_system is None:
        return
    cfg = IntegratorConfig(method="rk4-fixed", step=1.0 / 64.0)
    d = DisturbanceSignal.zero(loop.error_system.m)
    t_err = integrate(loop.error_system, x_err0, d, horizon, cfg)
    t_est = integrate(loop.estimate_system, loop.estimate_ic_from_error(x_err0), d, horizon, cfg)
    dev = float(np.max(np.abs(t_err.states[:, : loop.n_plant] - t_est.states[:, : loop.n_plant])))
    if dev > 1e-9:
        raise AssertionError(f"{loop.name}: coordinate forms disagree by {dev:g}")


# ---------------------------------------------------------------------------
# Generic matched-uncertainty template
# ---------------------------------------------------------------------------


def make_matching_condition_loop(f: Callable, g: Callable, phi: Callable,
                                 P_value: Callable, P_gradient: Callable,
                                 k_law: Callable, Gamma, theta,
                                 n: int, p: int, name: str = "matching-loop") -> ClosedLoop:
    """Adaptive loop for a plant whose uncertain parameters are matched by the input.

    Plant: dy = f(y) + g(y) (u + phi(y)' theta), scalar input u.
    Controller: u = k_law(y) - phi(y)' theta_hat,
                d(theta_hat)/dt = Gamma^{-1} (grad P(y) . g(y)) phi(y).
    The loop value function V(y, z) = P(y) + 0.5 z' Gamma z is exposed for
    monitoring; it is non-increasing whenever the supplied k_law damps P.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    if Gamma.shape != (p, p):
        raise ValueError(f"Gamma must be {p}x{p}")
    if not np.allclose(Gamma, Gamma.T):
        raise ValueError("Gamma must be symmetric")
    try:
        np.linalg.cholesky(Gamma)
    except np.linalg.LinAlgError:
        raise ValueError("Gamma must be positive definite") from None
    Gamma_inv = np.linalg.inv(Gamma)

    def update_rate(y: np.ndarray) -> np.ndarray:
        scale = float(np.dot(np.atleast_1d(P_gradient(y)), np.atleast_1d(g(y))))
        return Gamma_inv @ (scale * np.atleast_1d(phi(y)))

    def f_err(x, d):
        y = x[:n]
        z = x[n:]
        u_eff = k_law(y) - float(np.dot(np.atleast_1d(phi(y)), z))
        dy = np.atleast_1d(f(y)) + np.atleast_1d(g(y)) * u_eff
        return np.concatenate([dy, update_rate(y)])

    def f_est(x, d):
        y = x[:n]
        th = x[n:]
        u = k_law(y) - float(np.dot(np.atleast_1d(phi(y)), th))
        dy = (np.atleast_1d(f(y))
              + np.atleast_1d(g(y)) * (u + float(np.dot(np.atleast_1d(phi(y)), theta))))
        return np.concatenate([dy, update_rate(y)])

    def h(x):
        return x[:n].copy()

    err_sys = _assemble(name, n + p, 0, f_err, h)
    est_sys = _assemble(name + "-estimate", n + p, 0, f_est, h)
    controller = AdaptiveController(
        static_law=lambda y, th: k_law(y) - float(np.dot(np.atleast_1d(phi(y)), np.atleast_1d(th))),
        update_law=lambda y, th: update_rate(np.atleast_1d(y)),
        gains={"Gamma": Gamma},
        n_y=n, n_theta=p,
    )

    def V(x):
        y = np.asarray(x, dtype=float)[:n]
        z = np.asarray(x, dtype=float)[n:]
        return float(P_value(y) + 0.5 * z @ Gamma @ z)

    loop = ClosedLoop(name=name, error_system=err_sys, estimate_system=est_sys,
                      controller=controller, theta=theta, n_plant=n, lyapunov=V)
    _probe_equivalence(loop, np.concatenate([0.3 * np.ones(n), -theta]))
    return loop


# ---------------------------------------------------------------------------
# Scalar loops
# ---------------------------------------------------------------------------


def _scalar_static_law(c: float, q: float) -> Callable:
    def u_of(y, theta_hat):
        yy = float(np.atleast_1d(y)[0])
        th = float(np.atleast_1d(theta_hat)[0])
        return -c * yy - th * yy - q * yy ** 3
    return u_of


def make_high_gain_loop(theta: float, c: float, gamma: float, q: float) -> ClosedLoop:
    """Scalar plant dy = theta y + u + d under u = -c y - theta_hat y - q y^3,
    with the monotone update d(theta_hat)/dt = gamma y^2."""
    if c <= 0.0 or gamma <= 0.0:
        raise ValueError("c and gamma must be > 0")
    if q < 0.0:
        raise ValueError("q must be >= 0")
    err_sys = make_scalar_adaptive_loop(theta, c, gamma, q, sigma=0.0)

    def f_est(x, d):
        y, th = x
        u = -c * y - th * y - q * y ** 3
        return np.array([theta * y + u + d[0], gamma * y * y])

    est_sys = _assemble("high-gain-loop-estimate", 2, 1, f_est,
                        lambda x: np.array([x[0]]), err_sys.params)
    controller = AdaptiveController(
        static_law=_scalar_static_law(c, q),
        update_law=lambda y, th: np.array([gamma * float(np.atleast_1d(y)[0]) ** 2]),
        gains={"c": c, "gamma": gamma, "q": q},
    )

    def V(x):  # 0.5 y^2 + z^2 / (2 gamma), error coordinates
        return 0.5 * x[0] ** 2 + x[1] ** 2 / (2.0 * gamma)

    loop = ClosedLoop(name="loop-highgain", error_system=err_sys, estimate_system=est_sys,
                      controller=controller, theta=np.array([theta]), n_plant=1, lyapunov=V)
    _probe_equivalence(loop, np.array([0.5, -theta]))
    return loop


def make_sigma_mod_loop(theta: float, c: float, gamma: float, q: float, sigma: float) -> ClosedLoop:
    """High-gain loop with leakage -sigma theta_hat added to the update law."""
    if c <= 0.0 or gamma <= 0.0 or sigma <= 0.0:
        raise ValueError("c, gamma and sigma must be > 0")
    if q < 0.0:
        raise ValueError("q must be >= 0")
    err_sys = make_scalar_adaptive_loop(theta, c, gamma, q, sigma=sigma)

    def f_est(x, d):
        y, th = x
        u = -c * y - th * y - q * y ** 3
        return np.array([theta * y + u + d[0], gamma * y * y - sigma * th])

    est_sys = _assemble("sigma-mod-loop-estimate", 2, 1, f_est,
                        lambda x: np.array([x[0]]), err_sys.params)
    controller = AdaptiveController(
        static_law=_scalar_static_law(c, q),
        update_law=lambda y, th: np.array([
            gamma * float(np.atleast_1d(y)[0]) ** 2 - sigma * float(np.atleast_1d(th)[0])]),
        gains={"c": c, "gamma": gamma, "q": q, "sigma": sigma},
    )

    def V(x):
        return 0.5 * x[0] ** 2 + x[1] ** 2 / (2.0 * gamma)

    loop = ClosedLoop(name="loop-sigma", error_system=err_sys, estimate_system=est_sys,
                      controller=controller, theta=np.array([theta]), n_plant=1, lyapunov=V)
    _probe_equivalence(loop, np.array([0.5, -theta]))
    return loop


def sigma_mod_equilibria(theta: float, c: float, gamma: float, sigma: float, q: float) -> list:
    """Equilibria of the leaky loop in (y, z) coordinates, residual-verified.

    Always contains the zero-output point (0, -theta); when theta > c an
    offset pair appears at y = +-sqrt(sigma (theta - c) / (gamma + sigma q)),
    which is why the loop settles away from y = 0 for large plant gains.
    """
    system = make_scalar_adaptive_loop(theta, c, gamma, q, sigma=sigma)
    points = [np.array([0.0, -theta])]
    if theta > c:
        y_star = math.sqrt(sigma * (theta - c) / (gamma + sigma * q))
        z_star = -(gamma * c + theta * sigma * q) / (gamma + sigma * q)
        points.append(np.array([y_star, z_star]))
        points.append(np.array([-y_star, z_star]))
    zero_d = np.zeros(1)
    for pt in points:
        residual = float(np.linalg.norm(system.f(pt, zero_d)))
        if residual > 1e-12:
            raise AssertionError(f"candidate equilibrium {pt.tolist()} has residual {residual:g}")
    return points


def make_deadzone_controller_loop(a: float, c: float, gamma: float, eps: float) -> ClosedLoop:
    """Deadzone-adaptive loop with its control signal exposed.

    Same dynamics as :func:`stabkit.systems.make_deadzone_loop` (the plant
    d(xi) = theta xi + u + d under the nonlinear damping control); here the
    extractor u(t) is available for plotting and CSV emission.
    """
    err_sys = make_deadzone_loop(a, c, gamma, eps)

    def u_of(y, z_like):
        xi = float(np.atleast_1d(y)[0])
        z = float(np.atleast_1d(z_like)[0])
        w = 1.0 + math.exp(z)
        return -(c + w * w / (2.0 * c) + (w / (4.0 * a)) * (1.0 + xi * xi)) * xi

    controller = AdaptiveController(
        static_law=u_of,
        update_law=lambda y, z: np.array([
            gamma * math.exp(-float(np.atleast_1d(z)[0]))
            * max(0.5 * float(np.atleast_1d(y)[0]) ** 2 - eps, 0.0)]),
        gains={"a": a, "c": c, "gamma": gamma, "eps": eps},
    )
    # z is the adaptive gain itself here, not an offset from a true parameter
    return ClosedLoop(name="loop-deadzone", error_system=err_sys, estimate_system=None,
                      controller=controller, theta=np.array([0.0]), n_plant=1,
                      lyapunov=lambda x: 0.5 * x[0] ** 2)


# ---------------------------------------------------------------------------
# Loop registry for the CLI
# ---------------------------------------------------------------------------

_LOOPS: dict = {
    "loop-highgain": (lambda p: make_high_gain_loop(p["theta"], p["c"], p["gamma"], p["q"]),
                      {"theta": 3.0, "c": 1.0, "gamma": 10.0, "q": 0.5},
                      "scalar adaptive loop with monotone gain update"),
    "loop-sigma": (lambda p: make_sigma_mod_loop(p["theta"], p["c"], p["gamma"], p["q"], p["sigma"]),
                   {"theta": 3.0, "c": 1.0, "gamma": 10.0, "q": 0.5, "sigma": 0.5},
                   "scalar adaptive loop with leaky gain update"),
    "loop-deadzone": (lambda p: make_deadzone_controller_loop(p["a"], p["c"], p["gamma"], p["eps"]),
                      {"a": 1.0, "c": 1.0, "gamma": 1.0, "eps": 0.125},
                      "deadzone-adaptive disturbance suppression loop"),
    "loop-matching": (lambda p: _default_matching_loop(p),
                      {"theta": 3.0, "c": 1.0, "gamma": 10.0, "q": 0.5},
                      "matched-uncertainty template, scalar instance"),
}


def _default_matching_loop(p: dict) -> ClosedLoop:
    """Scalar instance of the generic template (update gain 1/Gamma)."""
    return make_matching_condition_loop(
        f=lambda y: np.zeros(1),
        g=lambda y: np.ones(1),
        phi=lambda y: np.array([y[0]]),
        P_value=lambda y: 0.5 * y[0] ** 2,
        P_gradient=lambda y: np.array([y[0]]),
        k_law=lambda y: -p["c"] * y[0] - p["q"] * y[0] ** 3,
        Gamma=np.array([[p["gamma"]]]),
        theta=np.array([p["theta"]]),
        n=1, p=1, name="loop-matching",
    )


def loop_ids() -> list:
    return sorted(_LOOPS)


def loop_catalog() -> list:
    return [(lid, desc, dict(defaults)) for lid, (_, defaults, desc) in sorted(_LOOPS.items())]


def build_loop(loop_id: str, params: dict | None = None) -> ClosedLoop:
    try:
        builder, defaults, _ = _LOOPS[loop_id]
    except KeyError:
        raise KeyError(f"unknown loop id {loop_id!r}; known: {', '.join(loop_ids())}") from None
    merged = dict(defaults)
    for key, value in (params or {}).items():
        if key not in merged:
            raise KeyError(f"{loop_id} has no parameter {key!r}; known: {sorted(merged)}")
        merged[key] = value
    return builder(merged)
