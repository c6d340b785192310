"""Sampling-based falsification of Lyapunov-like certificate hypotheses.

Each checker evaluates the inequalities (and implications) of one sufficient
condition over a compact box of states and disturbances and reports either a
concrete counterexample witness or the worst satisfaction margin.  A pass is
evidence on the sampled region only, never a proof; a fail is a reproducible
counterexample.  "For all x" is undecidable by sampling, so the caller always
supplies the region.

Numerical conventions
---------------------
* An implication's premise counts as holding only with slack >= premise_tol
  (default 1e-9), so floating-point boundary cases never produce witnesses.
* An inequality lhs <= rhs counts as violated when
  lhs > rhs + tol_abs + tol_rel * max(|lhs|, |rhs|); the default 1e-9 / 1e-9
  absorbs round-off in identically-tight certificates (e.g. conserved H).
* Sample sets are deterministic in the plan's seed and grow monotonically
  with the plan (Halton prefix property; grids nest for 2n-1 refinements).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .sampling import ball_points, box_grid, box_halton

__all__ = [
    "ScalarField",
    "scalar_field",
    "ComparisonFunction",
    "comparison",
    "Region",
    "SamplingPlan",
    "Witness",
    "CertificateReport",
    "check_forward_completeness",
    "check_output_stability_pair",
    "check_gaos",
    "check_ugaos",
    "check_pubibs",
    "check_pios",
    "check_small_gain",
    "check_deadzone",
    "check_oag",
]

PREMISE_TOL = 1e-9
TOL_ABS = 1e-9
TOL_REL = 1e-9
_LOG_GRID = np.concatenate([[0.0], np.logspace(-6.0, 3.0, 64)])


# ---------------------------------------------------------------------------
# Scalar fields and comparison functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarField:
    """Candidate certificate function with gradient access.

    The gradient is either analytic (cross-checked against central finite
    differences at construction) or the finite-difference fallback itself.
    """

    name: str
    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    analytic: bool


def _fd_gradient(value: Callable, dim: int) -> Callable:
    def grad(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty(dim)
        for i in range(dim):
            h = 1e-6 * max(1.0, abs(x[i]))
            xp = x.copy()
            xm = x.copy()
            xp[i] += h
            xm[i] -= h
            out[i] = (value(xp) - value(xm)) / (2.0 * h)
        return out

    return grad


def scalar_field(value: Callable, dim: int, gradient: Callable | None = None,
                 name: str = "V", probe_half_width: float = 2.0,
                 probe_seed: int = 0) -> ScalarField:
    """Build a ScalarField; an analytic gradient is verified before use.

    Verification compares against central differences at 100 seeded random
    points in [-w, w]^dim with a mixed relative/absolute scale
    max(1, |analytic|, |numeric|); deviations above 1e-4 raise.
    """
    fd = _fd_gradient(value, dim)
    if gradient is None:
        return ScalarField(name=name, dim=dim, value=value, gradient=fd, analytic=False)
    rng = np.random.default_rng(probe_seed)
    pts = rng.uniform(-probe_half_width, probe_half_width, size=(100, dim))
    for x in pts:
        ga = np.asarray(gradient(x), dtype=float)
        gf = fd(x)
        scale = np.maximum(1.0, np.maximum(np.abs(ga), np.abs(gf)))
        dev = float(np.max(np.abs(ga - gf) / scale))
        if dev > 1e-4:
            raise ValueError(
                f"field {name!r}: analytic gradient deviates from finite differences "
                f"by {dev:.3g} at x={x.tolist()}")
    return ScalarField(name=name, dim=dim, value=value, gradient=gradient, analytic=True)


_CF_KINDS = ("class-k", "class-kinf", "nondecreasing", "positive-definite")


@dataclass(frozen=True)
class ComparisonFunction:
    """Scalar comparison function on [0, inf) with a declared kind.

    Kinds: 'class-k' (strictly increasing, zero at zero), 'class-kinf'
    (class-k and unbounded), 'nondecreasing', 'positive-definite'.  The
    declared kind is spot-checked on a 64-point log-spaced grid at
    construction; global validity remains the caller's responsibility.
    """

    name: str
    kind: str
    value: Callable[[float], float]

    def __call__(self, s: float) -> float:
        return self.value(s)


def comparison(kind: str, fn: Callable[[float], float], name: str = "fn") -> ComparisonFunction:
    if kind not in _CF_KINDS:
        raise ValueError(f"unknown comparison-function kind {kind!r}")
    vals = np.array([fn(s) for s in _LOG_GRID], dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"{name}: non-finite value on the probe grid")
    if np.any(vals < 0.0):
        raise ValueError(f"{name}: negative value on the probe grid")
    if kind in ("class-k", "class-kinf", "positive-definite") and abs(vals[0]) > 1e-12:
        raise ValueError(f"{name}: value(0) = {vals[0]!r}, expected 0")
    if kind in ("class-k", "class-kinf") and np.any(np.diff(vals) <= 0.0):
        raise ValueError(f"{name}: not strictly increasing on the probe grid")
    if kind == "nondecreasing" and np.any(np.diff(vals) < -1e-12):
        raise ValueError(f"{name}: decreasing on the probe grid")
    if kind == "positive-definite" and np.any(vals[1:] <= 0.0):
        raise ValueError(f"{name}: not positive on the probe grid")
    return ComparisonFunction(name=name, kind=kind, value=fn)


# ---------------------------------------------------------------------------
# Regions, plans, reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Closed per-coordinate boxes for the state and the disturbance."""

    x_box: tuple
    d_box: tuple = ()

    def __post_init__(self):
        for lo, hi in tuple(self.x_box) + tuple(self.d_box):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ValueError("region bounds must be finite with lo <= hi")

    @property
    def nx(self) -> int:
        return len(self.x_box)

    @property
    def nd(self) -> int:
        return len(self.d_box)


@dataclass(frozen=True)
class SamplingPlan:
    """Grid resolution plus quasi-random sample count; deterministic per seed."""

    grid_per_axis: int = 11
    quasi_random: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.grid_per_axis < 0 or self.quasi_random < 0:
            raise ValueError("sample counts must be >= 0")
        if self.grid_per_axis == 0 and self.quasi_random == 0:
            raise ValueError("plan produces no samples")


@dataclass(frozen=True)
class Witness:
    x: tuple
    d: tuple
    inequality_id: str
    lhs: float
    rhs: float
    sample_index: int = 0
    strict: bool = False  # requirement was lhs < rhs, so lhs == rhs violates

    def as_dict(self) -> dict:
        return {"x": list(self.x), "d": list(self.d), "inequality_id": self.inequality_id,
                "lhs": self.lhs, "rhs": self.rhs}


@dataclass
class CertificateReport:
    """Outcome of one certificate check over one sampled region."""

    verdict: str
    worst_margin: float
    witnesses: list
    checked: tuple
    info: dict = field(default_factory=dict)
    reevaluators: dict = field(default_factory=dict)  # inequality id -> (x, d) -> (lhs, rhs)

    @property
    def violated(self) -> bool:
        return self.verdict == "violated"

    def verify_witnesses(self) -> bool:
        """Re-evaluate every witness; True iff each reproduces its violation exactly."""
        for w in self.witnesses:
            fn = self.reevaluators.get(w.inequality_id)
            if fn is None:
                return False
            lhs, rhs = fn(np.asarray(w.x, dtype=float), np.asarray(w.d, dtype=float))
            broken = (not lhs < rhs) if w.strict else (lhs > rhs)
            if lhs != w.lhs or rhs != w.rhs or not broken:
                return False
        return True

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "worst_margin": self.worst_margin,
            "checked": list(self.checked),
            "witnesses": [w.as_dict() for w in self.witnesses],
            "info": _json_safe(self.info),
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


# ---------------------------------------------------------------------------
# Check engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Ineq:
    """One inequality lhs <= rhs, optionally gated by a premise slack."""

    ineq_id: str
    lhs: Callable
    rhs: Callable
    premise: Callable | None = None  # (x, d, fx) -> slack; holds iff slack >= premise_tol


def _joint_samples(region: Region, plan: SamplingPlan) -> np.ndarray:
    bounds = tuple(region.x_box) + tuple(region.d_box)
    parts = []
    if plan.grid_per_axis > 0:
        total = plan.grid_per_axis ** max(1, len(bounds))
        if total > 2_000_000:
            raise ValueError("grid too large; reduce grid_per_axis or use quasi-random samples")
        parts.append(box_grid(bounds, plan.grid_per_axis))
    if plan.quasi_random > 0:
        parts.append(box_halton(bounds, plan.quasi_random, plan.seed))
    return np.vstack(parts)


def _violates(lhs: float, rhs: float) -> bool:
    return lhs > rhs + TOL_ABS + TOL_REL * max(abs(lhs), abs(rhs))


class _Collector:
    def __init__(self):
        self.worst = math.inf
        self.per_ineq: dict = {}
        self.witnesses: list = []

    def record(self, ineq_id: str, x, d, lhs: float, rhs: float, index: int,
               track_margin: bool = True) -> None:
        if track_margin:
            margin = rhs - lhs
            if margin < self.worst:
                self.worst = margin
            if margin < self.per_ineq.get(ineq_id, math.inf):
                self.per_ineq[ineq_id] = margin
        if _violates(lhs, rhs):
            self.witnesses.append(Witness(tuple(np.atleast_1d(x).tolist()),
                                          tuple(np.atleast_1d(d).tolist()),
                                          ineq_id, lhs, rhs, index))

    def finish(self, checked, info, reevaluators, max_witnesses: int = 25) -> CertificateReport:
        self.witnesses.sort(key=lambda w: (w.inequality_id, w.sample_index))
        kept = self.witnesses[:max_witnesses]
        info = dict(info)
        info["per_inequality_worst_margin"] = dict(self.per_ineq)
        if len(self.witnesses) > len(kept):
            info["witnesses_truncated_from"] = len(self.witnesses)
        verdict = "violated" if self.witnesses else "no-violation-found"
        worst = self.worst if math.isfinite(self.worst) else math.inf
        return CertificateReport(verdict=verdict, worst_margin=worst, witnesses=kept,
                                 checked=tuple(checked), info=info, reevaluators=reevaluators)


def _run_point_checks(system, region: Region, plan: SamplingPlan, inequalities: Sequence[_Ineq],
                      collector: _Collector, reevaluators: dict) -> None:
    samples = _joint_samples(region, plan)
    nx = region.nx
    f = system.f
    for idx, row in enumerate(samples):
        x = row[:nx]
        d = row[nx:]
        fx = np.asarray(f(x, d), dtype=float)
        for ineq in inequalities:
            if ineq.premise is not None and ineq.premise(x, d, fx) < PREMISE_TOL:
                continue
            collector.record(ineq.ineq_id, x, d, float(ineq.lhs(x, d, fx)),
                             float(ineq.rhs(x, d, fx)), idx)
    for ineq in inequalities:
        reevaluators[ineq.ineq_id] = _make_reeval(system, region, ineq)


def _make_reeval(system, region: Region, ineq: _Ineq) -> Callable:
    def reeval(x: np.ndarray, d: np.ndarray):
        fx = np.asarray(system.f(x, d), dtype=float)
        return float(ineq.lhs(x, d, fx)), float(ineq.rhs(x, d, fx))

    return reeval


def _grid_check(collector: _Collector, reevaluators: dict, ineq_id: str,
                lhs_fn: Callable, rhs_fn: Callable, strict: bool = False,
                grid: np.ndarray | None = None, index_base: int = 10_000_000) -> None:
    """Scalar-grid inequality (monotonicity, gain composition and the like).

    Witness x holds the grid point(s).  With ``strict`` the requirement is
    lhs < rhs and equality already counts as a violation.
    """
    grid = _LOG_GRID[1:] if grid is None else grid
    for j, s in enumerate(grid):
        lhs = float(lhs_fn(s))
        rhs = float(rhs_fn(s))
        collector.record(ineq_id, np.array([s]), np.zeros(0), lhs, rhs, index_base + j)
        if strict and not lhs < rhs and not _violates(lhs, rhs):
            collector.witnesses.append(Witness((float(s),), (), ineq_id, lhs, rhs,
                                               index_base + j, strict=True))

    def reeval(x: np.ndarray, d: np.ndarray):
        s = float(np.atleast_1d(x)[0])
        return float(lhs_fn(s)), float(rhs_fn(s))

    reevaluators[ineq_id] = reeval


def _origin_check(field_: ScalarField, collector: _Collector, reevaluators: dict,
                  ineq_id: str) -> None:
    """Direct evaluation |V(0)| <= 1e-12 recorded as an inequality.

    Kept out of the worst-margin statistic: it is an equality check whose
    slack says nothing about the certificate's robustness.
    """
    origin = np.zeros(field_.dim)
    lhs = abs(float(field_.value(origin)))
    collector.record(ineq_id, origin, np.zeros(0), lhs, 1e-12, -1, track_margin=False)

    def reeval(x: np.ndarray, d: np.ndarray):
        return abs(float(field_.value(x))), 1e-12

    reevaluators[ineq_id] = reeval


def _as_fn(c) -> Callable[[float], float]:
    """Constants and comparison functions are both accepted for c(.) slots."""
    if isinstance(c, ComparisonFunction):
        return c.value
    if callable(c):
        return c
    cv = float(c)
    return lambda s: cv


def _norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def _h_norm(system) -> Callable:
    h = system.h
    return lambda x: float(np.linalg.norm(np.atleast_1d(h(x))))


# ---------------------------------------------------------------------------
# Checkers
# ---------------------------------------------------------------------------


def check_forward_completeness(system, H: ScalarField, c, sigma, region: Region,
                               plan: SamplingPlan, sublevel_r: float | None = None) -> CertificateReport:
    """Check dH/dt <= c(|d|) H + sigma(|d|) (constants allowed) plus H >= 0.

    The boundedness hypothesis on f over the sublevel set {H <= r} (with
    |d| <= r) is not decidable from samples; the sampled sup of |f| there is
    reported as a number in ``info`` when ``sublevel_r`` is given.
    """
    c_fn = _as_fn(c)
    s_fn = _as_fn(sigma)
    Hv, Hg = H.value, H.gradient
    ineqs = [
        _Ineq("H-nonnegative", lambda x, d, fx: 0.0, lambda x, d, fx: float(Hv(x))),
        _Ineq("growth-bound",
              lambda x, d, fx: float(np.dot(Hg(x), fx)),
              lambda x, d, fx: c_fn(_norm(d)) * float(Hv(x)) + s_fn(_norm(d))),
    ]
    collector = _Collector()
    reevals: dict = {}
    _run_point_checks(system, region, plan, ineqs, collector, reevals)
    info: dict = {}
    if sublevel_r is not None:
        sup_f = 0.0
        for row in _joint_samples(region, plan):
            x, d = row[:region.nx], row[region.nx:]
            if float(Hv(x)) <= sublevel_r and _norm(d) <= sublevel_r:
                sup_f = max(sup_f, _norm(np.asarray(system.f(x, d), dtype=float)))
        info["sublevel_r"] = sublevel_r
        info["sup_f_on_sublevel"] = sup_f
    return collector.finish([i.ineq_id for i in ineqs], info, reevals)


def check_output_stability_pair(system, W: ScalarField, a: ComparisonFunction,
                                region: Region, plan: SamplingPlan) -> CertificateReport:
    """Check a(|h(x)|) <= W(x) and dW/dt <= 0 for a disturbance-free system."""
    if system.m != 0:
        raise ValueError("output-stability pair applies to disturbance-free systems")
    hn = _h_norm(system)
    Wv, Wg = W.value, W.gradient
    ineqs = [
        _Ineq("output-bound", lambda x, d, fx: a.value(hn(x)), lambda x, d, fx: float(Wv(x))),
        _Ineq("W-nonincreasing", lambda x, d, fx: float(np.dot(Wg(x), fx)), lambda x, d, fx: 0.0),
    ]
    collector = _Collector()
    reevals: dict = {}
    _run_point_checks(system, region, plan, ineqs, collector, reevals)
    _origin_check(W, collector, reevals, "W-zero-at-origin")
    return collector.finish([i.ineq_id for i in ineqs] + ["W-zero-at-origin"], {}, reevals)


_GAOS_VARIANTS = ("ineq17", "ineq18", "rho-nondecreasing", "ineq19")


def check_gaos(system, V: ScalarField, W: ScalarField, a: ComparisonFunction,
               rho: ComparisonFunction, region: Region, plan: SamplingPlan,
               variant: str, gamma: ComparisonFunction | None = None,
               zeta: ComparisonFunction | None = None) -> CertificateReport:
    """Check the asymptotic-output-stability hypothesis set.

    Always checks a(|h|) <= V, a(|h|) <= W and dV/dt <= -rho(W); the
    ``variant`` selects the side condition: a growth bound on dW/dt from
    above ('ineq17') or below ('ineq18'), monotonicity of rho
    ('rho-nondecreasing'), or W <= zeta(V) ('ineq19').
    """
    if system.m != 0:
        raise ValueError("this certificate applies to disturbance-free systems")
    if variant not in _GAOS_VARIANTS:
        raise ValueError(f"variant must be one of {_GAOS_VARIANTS}")
    if variant in ("ineq17", "ineq18") and gamma is None:
        raise ValueError(f"variant {variant!r} needs gamma")
    if variant == "ineq19" and zeta is None:
        raise ValueError("variant 'ineq19' needs zeta")
    hn = _h_norm(system)
    Vv, Vg = V.value, V.gradient
    Wv, Wg = W.value, W.gradient
    ineqs = [
        _Ineq("V-output-bound", lambda x, d, fx: a.value(hn(x)), lambda x, d, fx: float(Vv(x))),
        _Ineq("W-output-bound", lambda x, d, fx: a.value(hn(x)), lambda x, d, fx: float(Wv(x))),
        _Ineq("V-decay",
              lambda x, d, fx: float(np.dot(Vg(x), fx)),
              lambda x, d, fx: -rho.value(float(Wv(x)))),
    ]
    if variant == "ineq17":
        ineqs.append(_Ineq("W-growth-upper",
                           lambda x, d, fx: float(np.dot(Wg(x), fx)),
                           lambda x, d, fx: gamma.value(float(Vv(x)))))
    elif variant == "ineq18":
        ineqs.append(_Ineq("W-growth-lower",
                           lambda x, d, fx: -gamma.value(float(Vv(x))),
                           lambda x, d, fx: float(np.dot(Wg(x), fx))))
    elif variant == "ineq19":
        ineqs.append(_Ineq("W-bounded-by-V",
                           lambda x, d, fx: float(Wv(x)),
                           lambda x, d, fx: zeta.value(float(Vv(x)))))
    collector = _Collector()
    reevals: dict = {}
    _run_point_checks(system, region, plan, ineqs, collector, reevals)
    checked = [i.ineq_id for i in ineqs]
    if variant == "rho-nondecreasing":
        _grid_check(collector, reevals, "rho-nondecreasing",
                    lambda s: rho.value(s),
                    lambda s: rho.value(min(s * 1.5, s + 1.0)))
        checked.append("rho-nondecreasing")
    _origin_check(V, collector, reevals, "V-zero-at-origin")
    _origin_check(W, collector, reevals, "W-zero-at-origin")
    checked += ["V-zero-at-origin", "W-zero-at-origin"]
    return collector.finish(checked, {"variant": variant}, reevals)


def check_ugaos(system, V: ScalarField, W: ScalarField, a: ComparisonFunction,
                rho: ComparisonFunction, region: Region, plan: SamplingPlan) -> CertificateReport:
    """Check a(|h|) <= W, dW/dt <= 0 and dV/dt <= -rho(W) (uniform variant)."""
    if system.m != 0:
        raise ValueError("this certificate applies to disturbance-free systems")
    hn = _h_norm(system)
    Vv, Vg = V.value, V.gradient
    Wv, Wg = W.value, W.gradient
    ineqs = [
        _Ineq("W-output-bound", lambda x, d, fx: a.value(hn(x)), lambda x, d, fx: float(Wv(x))),
        _Ineq("W-nonincreasing", lambda x, d, fx: float(np.dot(Wg(x), fx)), lambda x, d, fx: 0.0),
        _Ineq("V-decay",
              lambda x, d, fx: float(np.dot(Vg(x), fx)),
              lambda x, d, fx: -rho.value(float(Wv(x)))),
    ]
    collector = _Collector()
    reevals: dict = {}
    _run_point_checks(system, region, plan, ineqs, collector, reevals)
    return collector.finish([i.ineq_id for i in ineqs], {}, reevals)


def check_pubibs(system, family: Sequence[ScalarField], R: ComparisonFunction,
                 region: Region, plan: SamplingPlan) -> CertificateReport:
    """Check the implications H_i(x) >= R(|d|)  =>  dH_i/dt <= 0.

    Radial unboundedness of max_i H_i cannot be decided from samples; the
    minimum of max_i H_i over the sampled region boundary is reported in
    ``info`` as a hint.
    """
    if not family:
        raise ValueError("family must be non-empty")
    ineqs = []
    for i, Hi in enumerate(family):
        Hv, Hg = Hi.value, Hi.gradient
        ineqs.append(_Ineq(
            f"bounded-energy-H{i + 1}",
            lambda x, d, fx, Hg=Hg: float(np.dot(Hg(x), fx)),
            lambda x, d, fx: 0.0,
            premise=lambda x, d, fx, Hv=Hv: float(Hv(x)) - R.value(_norm(d)),
        ))
    collector = _Collector()
    reevals: dict = {}
    _run_point_checks(system, region, plan, ineqs, collector, reevals)
    boundary_min = math.inf
    samples = _joint_samples(region, plan)
    for row in samples:
        x = row[:region.nx]
        on_boundary = any(x[j] == lo or x[j] == hi for j, (lo, hi) in enumerate(region.x_box))
        if on_boundary:
            boundary_min = min(boundary_min, max(float(Hi.value(x)) for Hi in family))
    info = {"boundary_min_of_max_H": boundary_min}
    return collector.finish([i.ineq_id for i in ineqs], info, reevals)


def check_pios(system, family: Sequence[ScalarField], a: ComparisonFunction,
               phi: ComparisonFunction, rho_list: Sequence[ComparisonFunction],
               region: Region, plan: SamplingPlan) -> CertificateReport:
    """Check a(|h|) <= max_i V_i and V_i >= phi(|d|) => dV_i/dt <= -rho_i(V_i).

    On a pass the implied input-to-output gain a^{-1}(phi(s)) is evaluated on
    a log grid by bisection and reported in ``info``.
    """
    if len(family) != len(rho_list):
        raise ValueError("family and rho list must have the same length")
    hn = _h_norm(system)
    values = [Vi.value for Vi in family]
    ineqs = [_Ineq("output-bound",
                   lambda x, d, fx: a.value(hn(x)),
                   lambda x, d, fx: max(float(v(x)) for v in values))]
    for i, (Vi, rho_i) in enumerate(zip(family, rho_list)):
        Vv, Vg = Vi.value, Vi.gradient
        ineqs.append(_Ineq(
            f"decay-V{i + 1}",
            lambda x, d, fx, Vg=Vg: float(np.dot(Vg(x), fx)),
            lambda x, d, fx, Vv=Vv, rho_i=rho_i: -rho_i.value(float(Vv(x))),
            premise=lambda x, d, fx, Vv=Vv: float(Vv(x)) - phi.value(_norm(d)),
        ))
    collector = _Collector()
    reevals: dict = {}
    _run_point_checks(system, region, plan, ineqs, collector, reevals)
    checked = [i.ineq_id for i in ineqs]
    for i, Vi in enumerate(family):
        _origin_check(Vi, collector, reevals, f"V{i + 1}-zero-at-origin")
        checked.append(f"V{i + 1}-zero-at-origin")
    info: dict = {}
    if not collector.witnesses:
        d_max = max((max(abs(lo), abs(hi)) for lo, hi in region.d_box), default=1.0)
        s_grid = np.linspace(0.0, max(d_max, 1e-3), 9)
        info["implied_gain"] = [(float(s), _invert_monotone(a, phi.value(float(s))))
                                for s in s_grid]
    return collector.finish(checked, info, reevals)


def _invert_monotone(a: ComparisonFunction, target: float, tol: float = 1e-10) -> float:
    """a^{-1}(target) by bisection on [0, hi] with doubling bracket search."""
    if target <= 0.0:
        return 0.0
    hi = 1.0
    for _ in range(80):
        if a.value(hi) >= target:
            break
        hi *= 2.0
    else:
        raise ValueError("bisection bracket failure: comparison function never reaches target")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if a.value(mid) >= target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def check_small_gain(system, V1: ScalarField, V2: ScalarField, U: ScalarField,
                     a: ComparisonFunction, gamma1: ComparisonFunction,
                     gamma2: ComparisonFunction, zeta: ComparisonFunction,
                     p: ComparisonFunction, c: float, rho: ComparisonFunction,
                     region: Region, plan: SamplingPlan) -> CertificateReport:
    """Check the two-subsystem gain conditions plus the contraction of the loop gains.

    The composition requirements gamma1(gamma2(s)) < s and gamma2(gamma1(s)) < s
    are strict: equality at any probe point is already a violation.
    """
    hn = _h_norm(system)
    V1v, V1g = V1.value, V1.gradient
    V2v, V2g = V2.value, V2.gradient
    Uv, Ug = U.value, U.gradient
    ineqs = [
        _Ineq("output-bound",
              lambda x, d, fx: a.value(hn(x)),
              lambda x, d, fx: max(float(V1v(x)), float(V2v(x)))),
        _Ineq("aggregate-growth",
              lambda x, d, fx: float(np.dot(Ug(x), fx)),
              lambda x, d, fx: (c * float(Uv(x)) + p.value(float(V1v(x)))
                                + p.value(float(V2v(x))) + zeta.value(_norm(d)))),
        _Ineq("V1-implication",
              lambda x, d, fx: float(np.dot(V1g(x), fx)),
              lambda x, d, fx: -rho.value(float(V1v(x))),
              premise=lambda x, d, fx: float(V1v(x)) - max(zeta.value(_norm(d)),
                                                           gamma1.value(float(V2v(x))))),
        _Ineq("V2-implication",
              lambda x, d, fx: float(np.dot(V2g(x), fx)),
              lambda x, d, fx: -rho.value(float(V2v(x))),
              premise=lambda x, d, fx: float(V2v(x)) - max(zeta.value(_norm(d)),
                                                           gamma2.value(float(V1v(x))))),
        _Ineq("U-positive-definite",
              lambda x, d, fx: 0.0,
              lambda x, d, fx: float(Uv(x)),
              premise=lambda x, d, fx: _norm(x) - 1e-9),
    ]
    collector = _Collector()
    reevals: dict = {}
    _run_point_checks(system, region, plan, ineqs, collector, reevals)
    _grid_check(collector, reevals, "gain-composition-12",
                lambda s: gamma1.value(gamma2.value(s)), lambda s: s, strict=True)
    _grid_check(collector, reevals, "gain-composition-21",
                lambda s: gamma2.value(gamma1.value(s)), lambda s: s, strict=True,
                index_base=20_000_000)
    checked = [i.ineq_id for i in ineqs] + ["gain-composition-12", "gain-composition-21"]
    return collector.finish(checked, {}, reevals)


def check_deadzone(system, V: ScalarField, rho: ComparisonFunction,
                   kappa: ComparisonFunction, lam: ComparisonFunction,
                   a: float, b: float, c: float, delta: float,
                   region: Region, plan: SamplingPlan) -> CertificateReport:
    """Check the deadzone dissipation inequality for a gain-freezing loop.

    The loop state is (xi..., z) with z scalar (last coordinate) and the
    disturbance channels are (d, theta).  The requirement is
        dV/dt <= -rho(V) + chi(|d|, |theta|, e^z),
        chi(s1, s2, s3) = a (s1^2 + ((s2 - b - lam(s3))^+)^2) / (1 + kappa(s3)),
    together with the spot-check rho(s) >= c s on [0, delta].  The
    boundedness property of the sublevel sets (not finitely checkable) is
    probed and reported in ``info`` only.
    """
    if system.m != 2:
        raise ValueError("deadzone check expects disturbance channels (d, theta)")
    Vv, Vg = V.value, V.gradient

    def chi(s1: float, s2: float, s3: float) -> float:
        gap = max(s2 - b - lam.value(s3), 0.0)
        return a * (s1 * s1 + gap * gap) / (1.0 + kappa.value(s3))

    ineqs = [
        _Ineq("deadzone-decay",
              lambda x, d, fx: float(np.dot(Vg(x), fx)),
              lambda x, d, fx: -rho.value(float(Vv(x))) + chi(abs(d[0]), abs(d[1]),
                                                              math.exp(x[-1]))),
    ]
    collector = _Collector()
    reevals: dict = {}
    _run_point_checks(system, region, plan, ineqs, collector, reevals)
    _grid_check(collector, reevals, "rho-lower-bound",
                lambda s: c * s, lambda s: rho.value(s),
                grid=np.linspace(0.0, delta, 64))
    # probe sublevel boundedness: largest |x| seen inside {V <= M, |z| <= M}
    probe = []
    samples = _joint_samples(region, plan)
    for M in (1.0, 4.0, 16.0):
        biggest = 0.0
        for row in samples:
            x = row[:region.nx]
            if float(Vv(x)) <= M and abs(x[-1]) <= M:
                biggest = max(biggest, _norm(x))
        probe.append((M, biggest))
    info = {"sublevel_probe": probe,
            "note": "sublevel boundedness probed on samples only, not adjudicated"}
    return collector.finish(["deadzone-decay", "rho-lower-bound"], info, reevals)


def check_oag(system, H_of: Callable[[float], ScalarField],
              Q_of: Callable[[float], Callable], b: ComparisonFunction,
              region: Region, plan: SamplingPlan, s_levels: Sequence[float],
              q_tol: float = 1e-9, h_tol: float = 1e-6) -> CertificateReport:
    """Check the output-attractivity pair over a grid of disturbance levels s.

    For each level: max over sampled |d| <= s of dH_s/dt must not exceed
    -Q_s(x), and wherever Q_s(x) <= q_tol the output must satisfy
    |h(x)| <= b(s) + h_tol.  The inner maximum is approximated by sampling
    the disturbance ball, so it under-approximates the true maximum: a pass
    is correspondingly weaker evidence (recorded in ``info``).
    """
    if len(s_levels) == 0:
        raise ValueError("need at least one disturbance level")
    hn = _h_norm(system)
    nd = system.m
    collector = _Collector()
    reevals: dict = {}
    x_samples = _joint_samples(Region(region.x_box), plan)
    checked = []
    for level_idx, s in enumerate(s_levels):
        s = float(s)
        Hs = H_of(s)
        Qs = Q_of(s)
        Hg = Hs.gradient
        if s == 0.0 or nd == 0:
            d_samples = np.zeros((1, nd))
        else:
            d_grid = box_grid(tuple((-s, s) for _ in range(nd)), min(plan.grid_per_axis, 9))
            d_grid = d_grid[np.linalg.norm(d_grid, axis=1) <= s + 1e-15]
            d_ball = ball_points(32, nd, s, plan.seed)
            d_samples = np.vstack([d_grid, d_ball])
        decay_id = f"decay@s={s:g}"
        output_id = f"output-bound@s={s:g}"
        checked += [decay_id, output_id]
        for idx, x in enumerate(x_samples):
            grad = Hg(x)
            best = -math.inf
            best_d = d_samples[0]
            for d in d_samples:
                v = float(np.dot(grad, np.asarray(system.f(x, d), dtype=float)))
                if v > best:
                    best = v
                    best_d = d
            q_val = float(Qs(x))
            collector.record(decay_id, x, best_d, best, -q_val, idx)
            if q_val <= q_tol:
                collector.record(output_id, x, np.zeros(nd), hn(x), b.value(s) + h_tol, idx)

        def reeval_decay(x, d, Hg=Hg, Qs=Qs):
            fx = np.asarray(system.f(x, d), dtype=float)
            return float(np.dot(Hg(x), fx)), -float(Qs(x))

        def reeval_output(x, d, s=s):
            return hn(x), b.value(s) + h_tol

        reevals[decay_id] = reeval_decay
        reevals[output_id] = reeval_output
    info = {"s_levels": [float(s) for s in s_levels],
            "note": "inner max over the disturbance ball is sampled (under-approximation)"}
    return collector.finish(checked, info, reevals)
