"""Empirical stability measurement from trajectory ensembles.

These estimators measure, from finitely many simulated runs, the quantities
the stability definitions quantify over: output envelopes over initial-condition
balls, settling times, tail bounds, gain curves and state bounds.  A limsup is
not computable from finite data; the tail-window maximum used here is an
upper proxy that is valid once transients have died, and its stability under
horizon doubling is part of the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ode_core import DisturbanceSignal, IntegratorConfig, Trajectory, integrate
from .sampling import initial_conditions

__all__ = [
    "EnsembleSpec",
    "StabilityEstimate",
    "DriftReport",
    "estimate_output_envelope",
    "estimate_settling_table",
    "estimate_tail_limsup",
    "estimate_gain_curve",
    "estimate_state_bound",
    "detect_gain_drift",
    "last_exceedance_time",
    "refine_peak",
]


@dataclass(frozen=True)
class EnsembleSpec:
    """Deterministic ensemble description.

    Initial conditions are low-discrepancy points inside each ball of radius
    R plus the coordinate-axis near-extremes; the same seed reproduces the
    same ensemble exactly.
    """

    radii: tuple
    samples_per_radius: int = 8
    seed: int = 0
    horizon: float = 20.0
    disturbance_family: tuple = ()
    cfg: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if not radii or any(r <= 0.0 for r in radii):
            raise ValueError("radii must be positive")
        if any(r2 <= r1 for r1, r2 in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be > 0")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "disturbance_family", tuple(self.disturbance_family))

    def initial_conditions(self, dim: int, radius: float) -> np.ndarray:
        return initial_conditions(radius, dim, self.samples_per_radius, self.seed)


@dataclass
class StabilityEstimate:
    """Fitted curve or table; tables are stored row-major with row labels in meta."""

    kind: str
    abscissae: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissae = np.asarray(self.abscissae, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.abscissae.shape != self.values.shape:
            raise ValueError("abscissae and values must align")
        finite = self.values[np.isfinite(self.values)]
        if np.any(finite < 0.0):
            raise ValueError("estimate values must be >= 0")

    def table_value(self, row_label: float, abscissa: float) -> float:
        rows = list(self.meta.get("rows", ()))
        cols = list(self.meta.get("cols", ()))
        i = rows.index(row_label)
        j = cols.index(abscissa)
        return float(self.values[i * len(cols) + j])

    def to_csv(self, path) -> None:
        import json as _json

        header_meta = {k: v for k, v in self.meta.items()}
        lines = [f"# stabkit-estimate kind={self.kind}"]
        if header_meta:
            lines.append("# meta=" + _json.dumps(_meta_safe(header_meta), sort_keys=True))
        lines.append("abscissa,value")
        for a, v in zip(self.abscissae, self.values):
            lines.append(f"{format(float(a), '.17g')},{format(float(v), '.17g')}")
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _meta_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _meta_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_meta_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


def _dense_grid(horizon: float, step: float = 0.01) -> np.ndarray:
    return np.linspace(0.0, horizon, int(round(horizon / step)) + 1)


def _require_zero_family(spec: EnsembleSpec) -> None:
    for sig in spec.disturbance_family:
        for ch in sig.channels:
            if ch.kind != "zero":
                raise ValueError("this estimator requires a disturbance-free ensemble")


# ---------------------------------------------------------------------------
# Envelope / settling / tail
# ---------------------------------------------------------------------------


def estimate_output_envelope(system, spec: EnsembleSpec) -> StabilityEstimate:
    """Per-radius maximum of |y(t)| over the sampled ball and horizon.

    Post-processed with a running max so the reported envelope is
    non-decreasing in R by construction.  A diverged member makes the whole
    radius cell infinite.
    """
    _require_zero_family(spec)
    grid = _dense_grid(spec.horizon)
    zero = DisturbanceSignal.zero(system.m)
    raw = []
    for radius in spec.radii:
        peak = 0.0
        for x0 in spec.initial_conditions(system.n, radius):
            traj = integrate(system, x0, zero, spec.horizon, spec.cfg, grid=grid)
            if traj.diverged:
                peak = math.inf
                break
            peak = max(peak, float(np.max(traj.output_norms())))
        raw.append(peak)
    env = np.maximum.accumulate(np.array(raw))
    return StabilityEstimate("output-envelope", np.array(spec.radii), env,
                             {"seed": spec.seed, "horizon": spec.horizon, "raw": raw})


def last_exceedance_time(traj: Trajectory, eps: float) -> float:
    """Last sample time with |y| > eps; 0 if never, inf if still above at the end."""
    norms = traj.output_norms()
    above = norms > eps
    if not bool(above.any()):
        return 0.0
    if bool(above[-1]):
        return math.inf
    last = int(np.where(above)[0][-1])
    return float(traj.times[last])


def estimate_settling_table(system, spec: EnsembleSpec, eps_levels: Sequence[float],
                            extra_ics: Sequence[np.ndarray] = ()) -> StabilityEstimate:
    """Empirical settling times T(eps, R): the last time any sampled trajectory
    from the R-ball exceeds eps (last-crossing, not first entry, to match the
    "for all t >= T" quantifier).  Cells that never settle within the horizon
    are infinite and flagged in meta.

    ``extra_ics`` lets a caller inject adversarial initial conditions; each is
    used for every radius cell whose ball contains it.
    """
    _require_zero_family(spec)
    grid = _dense_grid(spec.horizon, 0.005)
    zero = DisturbanceSignal.zero(system.m)
    eps_levels = [float(e) for e in eps_levels]
    trajectories = []
    for radius in spec.radii:
        ics = list(spec.initial_conditions(system.n, radius))
        ics += [np.asarray(x, dtype=float) for x in extra_ics
                if float(np.linalg.norm(x)) <= radius]
        trajectories.append([integrate(system, x0, zero, spec.horizon, spec.cfg, grid=grid)
                             for x0 in ics])
    values = []
    short_cells = []
    for eps in eps_levels:
        for radius, trajs in zip(spec.radii, trajectories):
            cell = 0.0
            for traj in trajs:
                t_last = last_exceedance_time(traj, eps)
                cell = max(cell, t_last)
            if math.isinf(cell):
                short_cells.append((eps, radius))
            values.append(cell)
    abscissae = np.tile(np.array(spec.radii), len(eps_levels))
    meta = {"rows": eps_levels, "cols": list(spec.radii), "seed": spec.seed,
            "horizon": spec.horizon, "horizon_too_short_cells": short_cells}
    return StabilityEstimate("settling-table", abscissae, np.array(values), meta)


def estimate_tail_limsup(traj_or_ensemble, tail_window: float) -> float:
    """Max of |y| over the final tail window (ensemble: max over members).

    Upper proxy for the limsup, valid once transients have died; requires the
    horizon to be at least twice the window.
    """
    trajs = traj_or_ensemble if isinstance(traj_or_ensemble, (list, tuple)) else [traj_or_ensemble]
    if tail_window <= 0.0:
        raise ValueError("tail window must be > 0")
    worst = 0.0
    for traj in trajs:
        horizon = traj.final_time
        if horizon < 2.0 * tail_window:
            raise ValueError("horizon must be at least twice the tail window")
        mask = traj.times >= horizon - tail_window
        worst = max(worst, float(np.max(traj.output_norms()[mask])))
    return worst


# ---------------------------------------------------------------------------
# Gain curves and state bounds
# ---------------------------------------------------------------------------


def estimate_gain_curve(system, amplitudes: Sequence[float], spec: EnsembleSpec,
                        tail_window: float | None = None) -> StabilityEstimate:
    """Tail output bound per disturbance amplitude.

    For each amplitude s the disturbance family probed is the constant s and
    the unit-frequency sinusoid of amplitude s; the curve reports the max of
    the tail proxy over family members and sampled initial conditions.  The
    true gain quantifies over all bounded signals, so this curve is a lower
    bound of it (the family is a subset).
    """
    if system.m < 1:
        raise ValueError("gain estimation needs a disturbance input")
    tail_window = tail_window if tail_window is not None else spec.horizon / 4.0
    grid = _dense_grid(spec.horizon)
    radius = spec.radii[-1]
    ics = spec.initial_conditions(system.n, radius)
    values = []
    diverged_at = []
    for s in amplitudes:
        s = float(s)
        if s == 0.0:
            signals = [DisturbanceSignal.zero(system.m)]
        else:
            signals = [DisturbanceSignal.constant([s] + [0.0] * (system.m - 1)),
                       DisturbanceSignal.stack(DisturbanceSignal.sinusoid(s, 1.0),
                                               DisturbanceSignal.zero(system.m - 1))
                       if system.m > 1 else DisturbanceSignal.sinusoid(s, 1.0)]
        worst = 0.0
        for sig in signals:
            for x0 in ics:
                traj = integrate(system, x0, sig, spec.horizon, spec.cfg, grid=grid)
                if traj.diverged:
                    worst = math.inf
                    diverged_at.append(s)
                    break
                worst = max(worst, estimate_tail_limsup(traj, tail_window))
            if math.isinf(worst):
                break
        values.append(worst)
    meta = {"seed": spec.seed, "horizon": spec.horizon, "tail_window": tail_window,
            "family": "constant+sinusoid(omega=1)", "diverged_amplitudes": diverged_at}
    return StabilityEstimate("gain-curve", np.array([float(s) for s in amplitudes]),
                             np.array(values), meta)


def estimate_state_bound(system, spec: EnsembleSpec) -> StabilityEstimate:
    """Table of sup_t |x(t)| indexed by (radius, disturbance family member)."""
    grid = _dense_grid(spec.horizon, 0.02)
    family = spec.disturbance_family or (DisturbanceSignal.zero(system.m),)
    amplitudes = [sig.sup_norm(spec.horizon) for sig in family]
    values = []
    for radius in spec.radii:
        ics = spec.initial_conditions(system.n, radius)
        for sig in family:
            cell = 0.0
            for x0 in ics:
                traj = integrate(system, x0, sig, spec.horizon, spec.cfg, grid=grid)
                if traj.diverged:
                    cell = math.inf
                    break
                cell = max(cell, float(np.max(np.linalg.norm(traj.states, axis=1))))
            values.append(cell)
    abscissae = np.repeat(np.array(spec.radii), len(family))
    meta = {"rows": list(spec.radii), "cols": amplitudes, "seed": spec.seed,
            "horizon": spec.horizon}
    return StabilityEstimate("state-bound", abscissae, np.array(values), meta)


# ---------------------------------------------------------------------------
# Drift detection and peak refinement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftReport:
    status: str  # drifting | settled | indeterminate
    monotone: bool
    value_t1: float
    value_t2: float
    value_t3: float

    @property
    def delta_23(self) -> float:
        return self.value_t3 - self.value_t2

    @property
    def delta_12(self) -> float:
        return self.value_t2 - self.value_t1


def detect_gain_drift(traj: Trajectory, component_index: int, windows,
                      drift_min: float = 1e-3, mono_tol: float = 1e-9) -> DriftReport:
    """Classify an adaptive-gain component as drifting or settled.

    Drifting: non-decreasing over [t1, t3] (within mono_tol) and still gaining
    at least drift_min between t2 and t3.  Settled: the t2 -> t3 gain is below
    drift_min.  A non-monotone component that still gains more than drift_min
    is reported as indeterminate rather than forced into either bin.
    """
    t1, t2, t3 = (float(t) for t in windows)
    if not (0.0 <= t1 < t2 < t3):
        raise ValueError("need 0 <= t1 < t2 < t3")
    if t3 > traj.final_time * (1.0 + 1e-12):
        raise ValueError("windows exceed the trajectory horizon")
    series = traj.states[:, component_index]
    mask = (traj.times >= t1) & (traj.times <= t3)
    monotone = bool(np.all(np.diff(series[mask]) >= -mono_tol))
    v1 = float(traj.state_at(t1)[component_index])
    v2 = float(traj.state_at(t2)[component_index])
    v3 = float(traj.state_at(t3)[component_index])
    delta = v3 - v2
    if monotone and delta >= drift_min:
        status = "drifting"
    elif delta < drift_min:
        status = "settled"
    else:
        status = "indeterminate"
    return DriftReport(status=status, monotone=monotone,
                       value_t1=v1, value_t2=v2, value_t3=v3)


def refine_peak(times: np.ndarray, values: np.ndarray) -> tuple:
    """(t, v) of the maximum of a sampled smooth curve, parabola-refined.

    Fits a quadratic through the three samples around the grid argmax; this
    recovers sub-grid accuracy from accurate (integration-grade) samples.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    i = int(np.argmax(values))
    if i == 0 or i == len(values) - 1:
        return float(times[i]), float(values[i])
    t0, t1, t2 = times[i - 1], times[i], times[i + 1]
    v0, v1, v2 = values[i - 1], values[i], values[i + 1]
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (v1 - v0) + t1 * (v0 - v2) + t0 * (v2 - v1)) / denom
    b = (t2 * t2 * (v0 - v1) + t1 * t1 * (v2 - v0) + t0 * t0 * (v1 - v2)) / denom
    if a >= 0.0:  # degenerate (flat or upward); keep the grid point
        return float(t1), float(v1)
    t_star = -b / (2.0 * a)
    c = v1 - a * t1 * t1 - b * t1
    v_star = a * t_star * t_star + b * t_star + c
    if not (t0 <= t_star <= t2) or v_star < v1:
        return float(t1), float(v1)
    return float(t_star), float(v_star)
