"""Deterministic simulation core: disturbance signals, RK steppers, trajectories.

Everything here is a pure function of its inputs.  Identical inputs produce
bit-identical trajectories, which is what makes byte-for-byte reproducibility
of CSV artifacts possible further up the stack.

Two steppers are provided: a classical fixed-step RK4 and an embedded
Dormand-Prince 4(5) pair with step-size control.  Integration steps never
straddle a discontinuity of the disturbance signal; segment boundaries are
collected from the signal before stepping so the local order of the method
is preserved.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "NonFiniteEvaluation",
    "StepLimitExceeded",
    "DisturbanceSignal",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "evaluate_signal",
    "sup_norm",
    "write_trajectory_csv",
    "read_csv_table",
]


class DimensionError(ValueError):
    """State or disturbance dimension does not match the system."""


class NonFiniteEvaluation(RuntimeError):
    """The vector field returned NaN/Inf; carries the offending state."""

    def __init__(self, t: float, state: np.ndarray):
        self.t = float(t)
        self.state = np.asarray(state, dtype=float)
        super().__init__(f"non-finite vector field value at t={t!r}, state={self.state.tolist()!r}")


class StepLimitExceeded(RuntimeError):
    """Step budget of the integrator was exhausted before the horizon."""


# ---------------------------------------------------------------------------
# Disturbance signals
# ---------------------------------------------------------------------------

_CHANNEL_KINDS = ("zero", "constant", "sinusoid", "piecewise", "table")


@dataclass(frozen=True)
class _Channel:
    """One scalar channel of a disturbance signal."""

    kind: str
    level: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    knots: tuple = ()
    values: tuple = ()

    def value(self, t: float) -> float:
        kind = self.kind
        if kind == "zero":
            return 0.0
        if kind == "constant":
            return self.level
        if kind == "sinusoid":
            return self.amplitude * math.sin(self.omega * t + self.phase)
        if kind == "piecewise":
            # left-closed / right-open: at a breakpoint the next level applies
            return self.values[bisect.bisect_right(self.knots, t)]
        return float(np.interp(t, self.knots, self.values))

    def sup(self, horizon: float) -> float:
        kind = self.kind
        if kind == "zero":
            return 0.0
        if kind == "constant":
            return abs(self.level)
        if kind == "sinusoid":
            a = abs(self.amplitude)
            if a == 0.0 or self.omega == 0.0:
                return abs(self.amplitude * math.sin(self.phase))
            t_peak = ((math.pi / 2.0 - self.phase) % math.pi) / self.omega
            if t_peak <= horizon:
                return a
            return max(
                abs(self.amplitude * math.sin(self.phase)),
                abs(self.amplitude * math.sin(self.omega * horizon + self.phase)),
            )
        if kind == "piecewise":
            # essential sup: a segment matters only if it meets [0, horizon]
            # on a set of positive length
            j_max = bisect.bisect_left(self.knots, horizon)
            return max(abs(v) for v in self.values[: j_max + 1])
        # table: piecewise-linear extremes sit at knots or interval endpoints
        candidates = [
            abs(float(np.interp(0.0, self.knots, self.values))),
            abs(float(np.interp(horizon, self.knots, self.values))),
        ]
        candidates += [abs(v) for tk, v in zip(self.knots, self.values) if 0.0 <= tk <= horizon]
        return max(candidates)

    def jumps(self, horizon: float) -> tuple:
        """Times in (0, horizon) where the channel is non-smooth."""
        if self.kind in ("piecewise", "table"):
            return tuple(tk for tk in self.knots if 0.0 < tk < horizon)
        return ()


@dataclass(frozen=True)
class DisturbanceSignal:
    """Vector-valued input signal assembled from scalar channels.

    Each channel is one of: zero, constant, sinusoid, piecewise-constant or
    an interpolated table.  Multi-channel signals are built with ``stack``.
    """

    channels: tuple = ()

    @property
    def dimension(self) -> int:
        return len(self.channels)

    @classmethod
    def zero(cls, dim: int = 1) -> "DisturbanceSignal":
        if dim < 0:
            raise ValueError("dimension must be >= 0")
        return cls(tuple(_Channel("zero") for _ in range(dim)))

    @classmethod
    def constant(cls, level) -> "DisturbanceSignal":
        levels = np.atleast_1d(np.asarray(level, dtype=float))
        if not np.all(np.isfinite(levels)):
            raise ValueError("constant level must be finite")
        return cls(tuple(_Channel("constant", level=float(v)) for v in levels))

    @classmethod
    def sinusoid(cls, amplitude: float, angular_frequency: float, phase: float = 0.0) -> "DisturbanceSignal":
        if not all(map(math.isfinite, (amplitude, angular_frequency, phase))):
            raise ValueError("sinusoid parameters must be finite")
        if angular_frequency < 0.0:
            raise ValueError("angular frequency must be >= 0")
        return cls((_Channel("sinusoid", amplitude=float(amplitude),
                             omega=float(angular_frequency), phase=float(phase)),))

    @classmethod
    def piecewise_constant(cls, breakpoints: Sequence[float], levels: Sequence[float]) -> "DisturbanceSignal":
        bp = tuple(float(b) for b in breakpoints)
        lv = tuple(float(v) for v in levels)
        if len(lv) != len(bp) + 1:
            raise ValueError("need len(levels) == len(breakpoints) + 1")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])) or (bp and bp[0] <= 0.0):
            raise ValueError("breakpoints must be strictly increasing and > 0")
        if not all(map(math.isfinite, bp + lv)):
            raise ValueError("breakpoints and levels must be finite")
        return cls((_Channel("piecewise", knots=bp, values=lv),))

    @classmethod
    def table(cls, times: Sequence[float], values: Sequence[float]) -> "DisturbanceSignal":
        ts = tuple(float(t) for t in times)
        vs = tuple(float(v) for v in values)
        if len(ts) != len(vs) or len(ts) < 1:
            raise ValueError("times and values must be non-empty and of equal length")
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])) or ts[0] < 0.0:
            raise ValueError("table times must be strictly increasing and >= 0")
        if not all(map(math.isfinite, ts + vs)):
            raise ValueError("table entries must be finite")
        return cls((_Channel("table", knots=ts, values=vs),))

    @classmethod
    def stack(cls, *signals: "DisturbanceSignal") -> "DisturbanceSignal":
        chans: list = []
        for s in signals:
            chans.extend(s.channels)
        return cls(tuple(chans))

    def value(self, t: float) -> np.ndarray:
        return np.array([ch.value(t) for ch in self.channels], dtype=float)

    def channel_sup(self, i: int, horizon: float) -> float:
        """Exact essential sup of |channel i| over [0, horizon]."""
        if horizon <= 0.0:
            raise ValueError("horizon must be > 0")
        return self.channels[i].sup(horizon)

    def sup_norm(self, horizon: float) -> float:
        """Essential sup of the Euclidean norm over [0, horizon].

        Computed by combining per-channel sups.  Exact whenever at most one
        channel is time-varying (the common case here); otherwise an upper
        bound, which is the safe direction for every bound checked against it.
        """
        if horizon <= 0.0:
            raise ValueError("horizon must be > 0")
        if self.dimension == 0:
            return 0.0
        if self.dimension == 1:
            return self.channels[0].sup(horizon)
        return math.sqrt(sum(ch.sup(horizon) ** 2 for ch in self.channels))

    def jumps(self, horizon: float) -> tuple:
        out: set = set()
        for ch in self.channels:
            out.update(ch.jumps(horizon))
        return tuple(sorted(out))


def evaluate_signal(d: DisturbanceSignal, t: float) -> np.ndarray:
    """Value of the signal at time t >= 0."""
    if t < 0.0:
        raise ValueError("signals are defined for t >= 0")
    return d.value(float(t))


def sup_norm(d: DisturbanceSignal, horizon: float) -> float:
    """Essential sup of |d(t)| over [0, horizon], computed per kind."""
    return d.sup_norm(float(horizon))


# ---------------------------------------------------------------------------
# Integrator configuration and trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntegratorConfig:
    """Stepper selection and work bounds.

    ``rk45-adaptive`` is the default (embedded Dormand-Prince 4(5));
    ``rk4-fixed`` steps with a fixed ``step`` and is used where identical
    grids matter more than error control.
    """

    method: str = "rk45-adaptive"
    step: float = 1e-3
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    min_step: float = 1e-12
    max_step: float = 0.5
    max_steps: int = 2_000_000
    blowup_norm: float = 1e12

    def __post_init__(self):
        if self.method not in ("rk45-adaptive", "rk4-fixed"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.step <= 0.0 or self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("step and tolerances must be > 0")
        if self.min_step <= 0.0 or self.max_step <= self.min_step:
            raise ValueError("need 0 < min_step < max_step")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """One integration run: sample times, states and outputs y = h(x).

    ``times[0] == 0`` and ``states[0]`` is the initial condition, exactly.
    If the state norm crossed the blow-up bound, ``diverged`` is set and the
    samples end at the crossing.
    """

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    diverged: bool = False

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def state_at(self, t: float) -> np.ndarray:
        return _interp_rows(self.times, self.states, float(t))

    def output_at(self, t: float) -> np.ndarray:
        return _interp_rows(self.times, self.outputs, float(t))

    def output_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.outputs * self.outputs, axis=1))

    def window_mask(self, t0: float, t1: float) -> np.ndarray:
        return (self.times >= t0) & (self.times <= t1)


def _interp_rows(times: np.ndarray, rows: np.ndarray, t: float) -> np.ndarray:
    if t <= times[0]:
        return rows[0].copy()
    if t >= times[-1]:
        return rows[-1].copy()
    i = int(np.searchsorted(times, t, side="right"))
    t0, t1 = times[i - 1], times[i]
    if t == t0:
        return rows[i - 1].copy()
    w = (t - t0) / (t1 - t0)
    # a + w (b - a) is exact for constant columns (frozen gains stay frozen)
    return rows[i - 1] + w * (rows[i] - rows[i - 1])


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------

# Dormand-Prince 4(5) tableau; row 7 equals the 5th-order weights (FSAL).
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
# local error = h * sum(E_j k_j) (difference of the embedded orders)
_DP_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


def integrate(system, x0, d: DisturbanceSignal | None = None, horizon: float = 1.0,
              cfg: IntegratorConfig | None = None, *, grid=None) -> Trajectory:
    """Integrate dx/dt = f(x, d(t)) over [0, horizon].

    ``grid`` optionally lists extra sample times that are merged (by linear
    interpolation between accepted steps) into the returned trajectory in
    addition to the internal step points.
    """
    cfg = cfg if cfg is not None else IntegratorConfig()
    x0 = np.array(x0, dtype=float).reshape(-1)
    if x0.shape[0] != system.n:
        raise DimensionError(f"x0 has dimension {x0.shape[0]}, system expects {system.n}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("initial condition must be finite")
    horizon = float(horizon)
    if horizon <= 0.0:
        raise ValueError("horizon must be > 0")
    if d is None:
        d = DisturbanceSignal.zero(system.m)
    if d.dimension != system.m:
        raise DimensionError(f"signal has dimension {d.dimension}, system expects {system.m}")

    f = system.f
    if system.m == 0:
        d_empty = np.zeros(0)

        def rhs(t: float, x: np.ndarray) -> np.ndarray:
            return np.asarray(f(x, d_empty), dtype=float)
    else:
        d_value = d.value

        def rhs(t: float, x: np.ndarray) -> np.ndarray:
            return np.asarray(f(x, d_value(t)), dtype=float)

    boundaries = [0.0] + list(d.jumps(horizon)) + [horizon]

    ts: list = [0.0]
    xs: list = [x0]
    budget = [cfg.max_steps]
    diverged = False

    if cfg.method == "rk4-fixed":
        diverged = _run_rk4(rhs, boundaries, ts, xs, cfg, budget)
    else:
        diverged = _run_dopri(rhs, boundaries, ts, xs, cfg, budget)

    times = np.array(ts, dtype=float)
    states = np.vstack(xs)
    if grid is not None and len(times) > 1:
        times, states = _merge_grid(times, states, np.asarray(grid, dtype=float))
    outputs = np.vstack([np.atleast_1d(np.asarray(system.h(x), dtype=float)) for x in states])
    return Trajectory(times=times, states=states, outputs=outputs, diverged=diverged)


def _take_budget(budget: list) -> None:
    budget[0] -= 1
    if budget[0] < 0:
        raise StepLimitExceeded("integration exceeded max_steps")


def _handle_stuck(t: float, x: np.ndarray, rhs, cfg: IntegratorConfig) -> bool:
    """Decide between blow-up truncation and a hard error when steps die."""
    probe = rhs(t, x)
    if not np.all(np.isfinite(probe)):
        raise NonFiniteEvaluation(t, x)
    if float(np.linalg.norm(x)) > 1e-3 * cfg.blowup_norm:
        return True  # effectively blown up; record divergence
    raise StepLimitExceeded(f"step size underflow at t={t!r}")


def _run_dopri(rhs, boundaries, ts, xs, cfg: IntegratorConfig, budget) -> bool:
    t = 0.0
    x = xs[0]
    h = min(cfg.max_step, 1e-2)
    k = [None] * 7
    for seg_end in boundaries[1:]:
        if seg_end <= t:
            continue
        k[0] = rhs(t, x)
        h = min(h, cfg.max_step, seg_end - t)
        while t < seg_end:
            _take_budget(budget)
            h = min(h, seg_end - t)
            if h < cfg.min_step:
                h = cfg.min_step
            for i in range(1, 6):
                acc = _DP_A[i][0] * k[0]
                for j in range(1, i):
                    acc = acc + _DP_A[i][j] * k[j]
                k[i] = rhs(t + _DP_C[i] * h, x + h * acc)
            acc = _DP_A[6][0] * k[0]
            for j in range(2, 6):
                acc = acc + _DP_A[6][j] * k[j]
            x_new = x + h * acc
            k[6] = rhs(t + h, x_new)  # FSAL stage, evaluated at the 5th-order result
            err = h * (_DP_E[0] * k[0] + _DP_E[2] * k[2] + _DP_E[3] * k[3]
                       + _DP_E[4] * k[4] + _DP_E[5] * k[5] + _DP_E[6] * k[6])
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(x), np.abs(x_new))
            with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
                ratio = err / scale
                err_norm = float(np.sqrt(np.mean(ratio * ratio)))
            if math.isfinite(err_norm) and err_norm <= 1.0:
                t_new = seg_end if (seg_end - t) == h else t + h
                x = x_new
                t = t_new
                ts.append(t)
                xs.append(x)
                if float(np.linalg.norm(x)) >= cfg.blowup_norm:
                    return True
                k[0] = k[6]  # FSAL
                factor = 5.0 if err_norm == 0.0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
                h = min(h * factor, cfg.max_step)
            else:
                if h <= cfg.min_step:
                    if _handle_stuck(t, x, rhs, cfg):
                        return True
                factor = 0.2 if not math.isfinite(err_norm) else min(0.9, max(0.2, 0.9 * err_norm ** -0.2))
                h = max(h * factor, cfg.min_step)
    return False


def _run_rk4(rhs, boundaries, ts, xs, cfg: IntegratorConfig, budget) -> bool:
    t = 0.0
    x = xs[0]
    for seg_start, seg_end in zip(boundaries[:-1], boundaries[1:]):
        if seg_end <= seg_start:
            continue
        length = seg_end - seg_start
        n_steps = max(1, int(math.ceil(length / cfg.step - 1e-12)))
        h = length / n_steps
        for i in range(n_steps):
            _take_budget(budget)
            k1 = rhs(t, x)
            k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1)
            k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2)
            k4 = rhs(t + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t = seg_end if i == n_steps - 1 else seg_start + (i + 1) * h
            if not np.all(np.isfinite(x)):
                if _handle_stuck(ts[-1], xs[-1], rhs, cfg):
                    return True
            ts.append(t)
            xs.append(x)
            if float(np.linalg.norm(x)) >= cfg.blowup_norm:
                return True
    return False


def _merge_grid(times: np.ndarray, states: np.ndarray, grid: np.ndarray):
    t_end = times[-1]
    extra_t = []
    extra_x = []
    for g in np.sort(grid):
        if g <= 0.0 or g >= t_end:
            continue
        i = int(np.searchsorted(times, g, side="left"))
        if i < len(times) and times[i] == g:
            continue
        w = (g - times[i - 1]) / (times[i] - times[i - 1])
        extra_t.append(g)
        extra_x.append(states[i - 1] + w * (states[i] - states[i - 1]))
    if not extra_t:
        return times, states
    all_t = np.concatenate([times, np.array(extra_t)])
    all_x = np.vstack([states, np.vstack(extra_x)])
    order = np.argsort(all_t, kind="stable")
    return all_t[order], all_x[order]


# ---------------------------------------------------------------------------
# CSV emission (schema: t,x1,...,xn,y1,...,yp[,u])
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_trajectory_csv(traj: Trajectory, path, controls=None) -> None:
    """Write the trajectory with full double precision (17 significant digits)."""
    n = traj.states.shape[1]
    p = traj.outputs.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{j + 1}" for j in range(p)]
    if controls is not None:
        controls = np.asarray(controls, dtype=float)
        if controls.shape[0] != len(traj.times):
            raise ValueError("controls must align with trajectory samples")
        header.append("u")
    lines = [",".join(header)]
    for i, t in enumerate(traj.times):
        row = [_fmt(t)] + [_fmt(v) for v in traj.states[i]] + [_fmt(v) for v in traj.outputs[i]]
        if controls is not None:
            row.append(_fmt(controls[i]))
        lines.append(",".join(row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv_table(path):
    """Read a stabkit CSV: returns (comment_lines, header_fields, data array)."""
    comments = []
    header = None
    rows = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line)
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: missing header row")
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
    if rows and data.shape[1] != len(header):
        raise ValueError(f"{path}: row width does not match header")
    return comments, header, data
