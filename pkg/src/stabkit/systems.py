"""Catalogue of benchmark dynamical systems with outputs.

Every factory returns an immutable :class:`DynamicalSystem` whose vector
field vanishes at the origin (checked by evaluation at construction, except
where the dynamics genuinely do not vanish there, see ``build_system``).
User-supplied shape functions (``g``, ``p``, ``q``) are spot-checked on a
coarse grid against their declared properties; a mismatch warns but never
raises, since a finite sample cannot prove the property either way.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "DynamicalSystem",
    "ClosedFormAdaptiveScalar",
    "closed_form_solution",
    "make_oscillator_pair",
    "oscillator_energy",
    "make_three_dim_gaos",
    "make_adaptive_scalar",
    "make_pubibs_example",
    "make_small_gain_pair",
    "make_deadzone_loop",
    "make_planar_saturated",
    "make_scalar_adaptive_loop",
    "build_system",
    "system_ids",
    "system_catalog",
]


@dataclass(frozen=True)
class DynamicalSystem:
    """dx/dt = f(x, d) with output y = h(x).

    ``n`` is the state dimension, ``m`` the disturbance dimension (0 for
    disturbance-free systems) and ``p`` the output dimension.  Instances are
    immutable values and safe to share across concurrent integrations.
    """

    name: str
    n: int
    m: int
    p: int
    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    params: Mapping[str, float] = field(default_factory=dict)


def _assemble(name, n, m, f, h, params=None, check_origin=True) -> DynamicalSystem:
    x0 = np.zeros(n)
    d0 = np.zeros(m)
    fx = np.asarray(f(x0, d0), dtype=float)
    hx = np.atleast_1d(np.asarray(h(x0), dtype=float))
    if fx.shape != (n,):
        raise ValueError(f"{name}: f must return a vector of length {n}")
    if check_origin:
        if not np.all(fx == 0.0):
            raise ValueError(f"{name}: f(0, 0) != 0")
        if not np.all(hx == 0.0):
            raise ValueError(f"{name}: h(0) != 0")
    return DynamicalSystem(name=name, n=n, m=m, p=hx.shape[0], f=f, h=h,
                           params=dict(params or {}))


def _spot_check(label: str, ok: bool) -> None:
    if not ok:
        warnings.warn(f"{label}: declared property fails on a probe grid", stacklevel=3)


# ---------------------------------------------------------------------------
# Disturbance-free catalogue
# ---------------------------------------------------------------------------


def make_oscillator_pair(g: Callable[[float], float] | None = None) -> DynamicalSystem:
    """Two unit masses coupled by a nonlinear spring; output is the velocities.

    State (z1, z2, v1, v2):  dz_i = v_i,  dv1 = -g(z1 - z2),  dv2 = +g(z1 - z2).
    ``g`` must satisfy s*g(s) >= 0 and g(0) = 0 (spot-checked).  The energy
    0.5 v1^2 + 0.5 v2^2 + int_0^{z1-z2} g  is conserved along trajectories.
    """
    if g is None:
        g = lambda s: s
    probes = np.linspace(-3.0, 3.0, 13)
    _spot_check("oscillator pair g", g(0.0) == 0.0 and all(s * g(s) >= 0.0 for s in probes))

    def f(x, d):
        gs = g(x[0] - x[1])
        return np.array([x[2], x[3], -gs, gs])

    def h(x):
        return np.array([x[2], x[3]])

    return _assemble("oscillator-pair", 4, 0, f, h)


def oscillator_energy(g: Callable[[float], float] | None = None) -> Callable[[np.ndarray], float]:
    """Conserved energy of the oscillator pair.

    0.5 v1^2 + 0.5 v2^2 + int_0^{z1-z2} g(s) ds.  Closed form for the default
    g(s) = s; a fixed 32-node Gauss-Legendre rule otherwise (deterministic).
    """
    if g is None:
        return lambda x: 0.5 * x[2] ** 2 + 0.5 * x[3] ** 2 + 0.5 * (x[0] - x[1]) ** 2
    nodes, weights = np.polynomial.legendre.leggauss(32)

    def energy(x: np.ndarray) -> float:
        s = x[0] - x[1]
        half = 0.5 * s
        integral = half * float(np.sum(weights * np.array([g(half * (u + 1.0)) for u in nodes])))
        return 0.5 * x[2] ** 2 + 0.5 * x[3] ** 2 + integral

    return energy


def make_three_dim_gaos(g: Callable[[float, float], float], g_bound: float) -> DynamicalSystem:
    """Three-state system whose third state grows unboundedly yet the output decays.

    State (y, z, w):
        dy = -(1 + w^2) y + 2 z g(z, w) / (1 + z^2)^2
        dz = -g(z, w) y
        dw = w + |y|
    ``g`` must be bounded by ``g_bound`` (spot-checked); output is y.
    """
    if g_bound <= 0.0:
        raise ValueError("declared bound on g must be > 0")
    zs = np.linspace(-4.0, 4.0, 9)
    _spot_check("bounded g", all(abs(g(z, w)) <= g_bound for z in zs for w in zs))

    def f(x, d):
        y, z, w = x
        gz = g(z, w)
        return np.array([
            -(1.0 + w * w) * y + 2.0 * z * gz / (1.0 + z * z) ** 2,
            -gz * y,
            w + abs(y),
        ])

    def h(x):
        return np.array([x[0]])

    return _assemble("three-dim-gaos", 3, 0, f, h, {"g_bound": g_bound})


def make_adaptive_scalar(theta: float, k: float, sigma: float,
                         disturbed: bool = False) -> DynamicalSystem:
    """Scalar plant with a monotonically growing damping state.

    State (xi, z):
        d(xi) = -(z + k + sigma (theta + z)^2) xi [+ d if disturbed]
        d(z)  = xi^2
    Output is xi.  Requires k > 0 and sigma >= 0.
    """
    if k <= 0.0:
        raise ValueError("k must be > 0")
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    m = 1 if disturbed else 0

    def f(x, d):
        xi, z = x
        rate = -(z + k + sigma * (theta + z) ** 2) * xi
        if m:
            rate += d[0]
        return np.array([rate, xi * xi])

    def h(x):
        return np.array([x[0]])

    name = "adaptive-scalar-disturbed" if disturbed else "adaptive-scalar"
    return _assemble(name, 2, m, f, h, {"theta": theta, "k": k, "sigma": sigma})


@dataclass(frozen=True)
class ClosedFormAdaptiveScalar:
    """Exact solution of the undamped (sigma = 0) adaptive scalar system.

    With K = sqrt(xi0^2 + (k + z0)^2):
        xi(t) = K xi0 / (K cosh(Kt) + (z0 + k) sinh(Kt))
    and the matching z(t).  When xi0 > 0 and z0 + k < 0 the output overshoots:
    its maximum equals K at a strictly positive time, which is what makes the
    convergence rate non-uniform in the initial condition.
    """

    xi0: float
    z0: float
    k: float

    def __post_init__(self):
        if self.k <= 0.0:
            raise ValueError("k must be > 0")

    @property
    def K(self) -> float:
        return math.hypot(self.xi0, self.k + self.z0)

    def state(self, t: float) -> tuple:
        K = self.K
        if K == 0.0:
            return 0.0, self.z0  # degenerate equilibrium: xi stays 0
        s = self.z0 + self.k
        e2 = math.exp(-2.0 * K * t)
        # cosh/sinh rewritten with exp(-Kt) factored out so large Kt is safe
        xi = 2.0 * K * self.xi0 * math.exp(-K * t) / ((K + s) + (K - s) * e2)
        z = -self.k - K + 2.0 * K * (s + K) / ((s + K) * (1.0 - e2) + 2.0 * K * e2)
        return xi, z

    @property
    def peak_time(self) -> float:
        s = self.z0 + self.k
        if self.xi0 != 0.0 and s < 0.0:
            K = self.K
            return math.log((K - s) / (K + s)) / (2.0 * K)
        return 0.0

    @property
    def peak_value(self) -> float:
        """Maximum of |xi(t)| over t >= 0."""
        if self.xi0 != 0.0 and (self.z0 + self.k) < 0.0:
            return self.K
        return abs(self.xi0)


def closed_form_solution(params: ClosedFormAdaptiveScalar, t: float) -> tuple:
    """Exact (xi(t), z(t)) of the sigma = 0 adaptive scalar system."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return params.state(float(t))


# ---------------------------------------------------------------------------
# Systems with disturbance inputs
# ---------------------------------------------------------------------------


def make_pubibs_example(p: Callable | None = None, q: Callable | None = None) -> DynamicalSystem:
    """Planar system that stays bounded for every bounded input.

    State (x1, x2), scalar disturbance d:
        dx1 = p(x, d) ((1 + d - x1^2) x1 + d)
        dx2 = -q(x, d) (x2 + d)
    ``p`` and ``q`` must be non-negative (spot-checked).  Output is the state.
    """
    if p is None:
        p = lambda x, d: 1.0
    if q is None:
        q = lambda x, d: 1.0
    pts = np.linspace(-3.0, 3.0, 7)
    _spot_check("non-negative p, q", all(
        p(np.array([a, b]), c) >= 0.0 and q(np.array([a, b]), c) >= 0.0
        for a in pts for b in pts for c in (-2.0, 0.0, 2.0)))

    def f(x, d):
        dd = d[0]
        return np.array([
            p(x, dd) * ((1.0 + dd - x[0] ** 2) * x[0] + dd),
            -q(x, dd) * (x[1] + dd),
        ])

    def h(x):
        return x.copy()

    return _assemble("bounded-state-pair", 2, 1, f, h)


def make_small_gain_pair(b: float, m_exponent: int,
                         allow_large_coupling: bool = False) -> DynamicalSystem:
    """Feedback interconnection of two scalar subsystems with odd-power coupling.

        dx1 = -x1 + b x2^m + d
        dx2 = -x2^m + x1
    Requires |b| < 1 (the regime the loop-gain contraction needs) and odd m;
    ``allow_large_coupling`` skips the |b| guard so falsification runs can
    build the out-of-regime system on purpose.  Output is the state.
    """
    if abs(b) >= 1.0 and not allow_large_coupling:
        raise ValueError("need |b| < 1")
    if m_exponent < 1 or m_exponent % 2 == 0:
        raise ValueError("m must be an odd positive integer")
    me = int(m_exponent)

    def f(x, d):
        x2m = x[1] ** me
        return np.array([-x[0] + b * x2m + d[0], -x2m + x[0]])

    def h(x):
        return x.copy()

    return _assemble("small-gain-pair", 2, 1, f, h, {"b": b, "m": me})


def make_deadzone_loop(a: float, c: float, gamma: float, eps: float) -> DynamicalSystem:
    """Adaptive loop whose gain update freezes below an energy threshold.

    State (xi, z); two disturbance channels (d, theta), so a time-varying
    plant coefficient is expressible by binding theta to any signal:
        d(xi) = theta xi - (c + (1+e^z)^2/(2c) + (1+e^z)(1+xi^2)/(4a)) xi + d
        d(z)  = gamma e^{-z} (xi^2/2 - eps)^+
    Output is xi.  The update rate e^{-z} decays as the gain grows, and z is
    non-decreasing along every trajectory.
    """
    for label, v in (("a", a), ("c", c), ("gamma", gamma), ("eps", eps)):
        if v <= 0.0:
            raise ValueError(f"{label} must be > 0")

    def f(x, d):
        xi, z = x
        dist, theta = d
        w = 1.0 + math.exp(z)
        damping = c + w * w / (2.0 * c) + (w / (4.0 * a)) * (1.0 + xi * xi)
        dz = gamma * math.exp(-z) * max(0.5 * xi * xi - eps, 0.0)
        return np.array([theta * xi - damping * xi + dist, dz])

    def h(x):
        return np.array([x[0]])

    return _assemble("deadzone-loop", 2, 2, f, h,
                     {"a": a, "c": c, "gamma": gamma, "eps": eps})


def make_planar_saturated(p: Callable, q: Callable) -> DynamicalSystem:
    """Planar system with a saturated excitation term that dies off for |y| >= 1.

    State (xi, y), scalar disturbance d:
        d(xi) = 0
        d(y)  = -y p(xi, y, d) + (1 - y^2)^+ q(xi, y, d)
    ``p`` must be positive pointwise and q(0,0,0) = 0 (spot-checked).
    Output is y.
    """
    pts = np.linspace(-2.0, 2.0, 5)
    _spot_check("positive p", all(p(a, b, c) > 0.0 for a in pts for b in pts for c in pts))
    _spot_check("q vanishes at origin", q(0.0, 0.0, 0.0) == 0.0)

    def f(x, d):
        xi, y = x
        dd = d[0]
        sat = max(1.0 - y * y, 0.0)
        return np.array([0.0, -y * p(xi, y, dd) + sat * q(xi, y, dd)])

    def h(x):
        return np.array([x[1]])

    return _assemble("planar-saturated", 2, 1, f, h)


def make_scalar_adaptive_loop(theta: float, c: float, gamma: float, q: float,
                              sigma: float = 0.0) -> DynamicalSystem:
    """Scalar adaptive regulation loop in gain-error coordinates (y, z).

        dy = -c y - z y - q y^3 + d
        dz = gamma y^2 - sigma z - sigma theta
    sigma = 0 is the plain gain-growing loop; sigma > 0 adds leakage, which
    bounds the gain but shifts the equilibria away from y = 0 when theta > c.
    Output is y.
    """
    if c <= 0.0 or gamma <= 0.0:
        raise ValueError("c and gamma must be > 0")
    if q < 0.0 or sigma < 0.0:
        raise ValueError("q and sigma must be >= 0")

    def f(x, d):
        y, z = x
        dz = gamma * y * y
        if sigma != 0.0:
            dz -= sigma * z + sigma * theta
        return np.array([-c * y - z * y - q * y ** 3 + d[0], dz])

    def h(x):
        return np.array([x[0]])

    name = "sigma-mod-loop" if sigma else "high-gain-loop"
    return _assemble(name, 2, 1, f, h,
                     {"theta": theta, "c": c, "gamma": gamma, "q": q, "sigma": sigma},
                     check_origin=(sigma == 0.0 or theta == 0.0))


# ---------------------------------------------------------------------------
# Registry of stable string ids used by the CLI and config files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Entry:
    build: Callable[[dict], DynamicalSystem]
    defaults: dict
    description: str
    origin_fixed: bool = True  # f(0, 0) = 0 holds for the default build


def _q_linear_in_y(xi, y, d):
    return 2.0 * y


_REGISTRY: dict = {
    "eq8": _Entry(lambda p: make_oscillator_pair(), {},
                  "coupled oscillator pair with conserved energy, output (v1, v2)"),
    "eq20": _Entry(lambda p: make_three_dim_gaos(lambda z, w: 0.0, p["g_bound"]),
                   {"g_bound": 1.0},
                   "three-state example with unbounded solutions but decaying output"),
    "eq24": _Entry(lambda p: make_adaptive_scalar(p["theta"], p["k"], p["sigma"]),
                   {"theta": 0.0, "k": 1.0, "sigma": 1.0},
                   "adaptive scalar system, disturbance-free"),
    "eq62": _Entry(lambda p: make_adaptive_scalar(p["theta"], p["k"], p["sigma"], disturbed=True),
                   {"theta": 0.0, "k": 2.0, "sigma": 1.0},
                   "adaptive scalar system with additive disturbance"),
    "eq57": _Entry(lambda p: make_pubibs_example(), {},
                   "planar bounded-input bounded-state example"),
    "eq73": _Entry(lambda p: make_small_gain_pair(p["b"], int(p["m"])),
                   {"b": 0.5, "m": 3},
                   "small-gain interconnection of two scalar subsystems"),
    "eq111": _Entry(lambda p: make_deadzone_loop(p["a"], p["c"], p["gamma"], p["eps"]),
                    {"a": 1.0, "c": 1.0, "gamma": 1.0, "eps": 0.125},
                    "deadzone-adaptive loop, disturbance channels (d, theta)"),
    "eq121": _Entry(lambda p: make_planar_saturated(lambda xi, y, d: 1.0, _q_linear_in_y),
                    {},
                    "planar saturated system, output attracted to the unit interval"),
    "eq126": _Entry(lambda p: make_scalar_adaptive_loop(p["theta"], p["c"], p["gamma"], p["q"]),
                    {"theta": 3.0, "c": 1.0, "gamma": 10.0, "q": 0.5},
                    "high-gain adaptive loop in gain-error coordinates"),
    "eq129": _Entry(lambda p: make_scalar_adaptive_loop(p["theta"], p["c"], p["gamma"], p["q"],
                                                        sigma=p["sigma"]),
                    {"theta": 3.0, "c": 1.0, "gamma": 10.0, "q": 0.5, "sigma": 0.5},
                    "leaky adaptive loop in gain-error coordinates",
                    origin_fixed=False),
}


def system_ids() -> list:
    return sorted(_REGISTRY)


def system_catalog() -> list:
    """(id, description, default params) for every built-in system."""
    return [(sid, e.description, dict(e.defaults)) for sid, e in sorted(_REGISTRY.items())]


def registry_entry(system_id: str) -> _Entry:
    try:
        return _REGISTRY[system_id]
    except KeyError:
        raise KeyError(f"unknown system id {system_id!r}; known: {', '.join(system_ids())}") from None


def build_system(system_id: str, params: dict | None = None) -> DynamicalSystem:
    """Instantiate a catalogue system by its stable string id."""
    entry = registry_entry(system_id)
    merged = dict(entry.defaults)
    for key, value in (params or {}).items():
        if key not in merged:
            raise KeyError(f"{system_id} has no parameter {key!r}; known: {sorted(merged)}")
        merged[key] = value
    return entry.build(merged)
