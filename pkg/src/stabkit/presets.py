"""Built-in certificate configurations, addressable by stable preset ids.

Each preset binds a catalogue system to the certificate functions its
analysis uses (value functions, gains, decrements) and to a default region
and sampling plan.  `certify` configs select a preset and may override
parameters, region boxes and plan fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import catalog as cat
from .certificates import (
    CertificateReport,
    Region,
    SamplingPlan,
    check_deadzone,
    check_forward_completeness,
    check_gaos,
    check_oag,
    check_output_stability_pair,
    check_pios,
    check_pubibs,
    check_small_gain,
    check_ugaos,
    scalar_field,
)
from .systems import (
    make_adaptive_scalar,
    make_deadzone_loop,
    make_oscillator_pair,
    make_planar_saturated,
    make_pubibs_example,
    make_small_gain_pair,
    make_three_dim_gaos,
    oscillator_energy,
)

__all__ = ["ConfigError", "CertifySpec", "preset_ids", "preset_catalog",
           "default_spec", "run_certify", "builtin_scalar_fields"]


class ConfigError(ValueError):
    """Invalid certify/scenario configuration (maps to CLI exit code 2)."""


@dataclass
class CertifySpec:
    preset: str
    params: dict
    x_box: tuple
    d_box: tuple
    plan: SamplingPlan


# -- shared field constructors ----------------------------------------------


def _half_square(i: int, dim: int, name: str):
    def grad(x, i=i, dim=dim):
        g = np.zeros(dim)
        g[i] = x[i]
        return g

    return scalar_field(lambda x: 0.5 * x[i] ** 2, dim, grad, name=name)


def _half_norm_sq(dim: int, name: str):
    return scalar_field(lambda x: 0.5 * float(np.dot(x, x)), dim,
                        lambda x: np.asarray(x, dtype=float).copy(), name=name)


# -- preset builders ---------------------------------------------------------


def _run_eq24(spec: CertifySpec) -> CertificateReport:
    p = spec.params
    system = make_adaptive_scalar(p["theta"], p["k"], p["sigma"])
    V = _half_norm_sq(2, "V")
    W = _half_square(0, 2, "W")
    return check_ugaos(system, V, W, cat.power(0.5, 2.0, "a"),
                       cat.linear(2.0 * p["k"], "rho"),
                       Region(spec.x_box), spec.plan)


def _run_eq8(spec: CertifySpec) -> CertificateReport:
    system = make_oscillator_pair()
    energy = oscillator_energy()

    def grad(x):
        s = x[0] - x[1]
        return np.array([s, -s, x[2], x[3]])

    H = scalar_field(energy, 4, grad, name="H")
    return check_output_stability_pair(system, H, cat.power(0.5, 2.0, "a"),
                                       Region(spec.x_box), spec.plan)


def _run_eq8_fc(spec: CertifySpec) -> CertificateReport:
    system = make_oscillator_pair()
    energy = oscillator_energy()

    def grad(x):
        s = x[0] - x[1]
        return np.array([s, -s, x[2], x[3]])

    H = scalar_field(energy, 4, grad, name="H")
    return check_forward_completeness(system, H, spec.params["c"], spec.params["sigma"],
                                      Region(spec.x_box), spec.plan,
                                      sublevel_r=spec.params["r"])


def _run_eq20(spec: CertifySpec) -> CertificateReport:
    system = make_three_dim_gaos(lambda z, w: 0.0, spec.params["g_bound"])
    V = scalar_field(lambda x: 0.5 * x[0] ** 2 + x[1] ** 2 / (1.0 + x[1] ** 2), 3,
                     lambda x: np.array([x[0], 2.0 * x[1] / (1.0 + x[1] ** 2) ** 2, 0.0]),
                     name="V")
    W = _half_square(0, 3, "W")
    return check_gaos(system, V, W, cat.power(0.5, 2.0, "a"), cat.linear(2.0, "rho"),
                      Region(spec.x_box), spec.plan, variant="ineq17",
                      gamma=cat.const(0.0, "gamma"))


def _run_eq57(spec: CertifySpec) -> CertificateReport:
    system = make_pubibs_example()
    H1 = _half_square(0, 2, "H1")
    H2 = _half_square(1, 2, "H2")
    # threshold max(s + 2, s^2) / 2, nondecreasing
    R = cat.affine_max(1.0, 0.5, 0.5, 2.0, name="R")
    return check_pubibs(system, [H1, H2], R, Region(spec.x_box, spec.d_box), spec.plan)


def _run_eq62(spec: CertifySpec) -> CertificateReport:
    p = spec.params
    eps = 0.5 * (p["k"] - 1.0 / (4.0 * p["sigma"]) - p["theta"])
    if eps <= 0.0:
        raise ConfigError(
            f"eq62-ios needs k > theta + 1/(4 sigma); got margin 2*eps = {2.0 * eps:g}")
    system = make_adaptive_scalar(p["theta"], p["k"], p["sigma"], disturbed=True)
    V = _half_square(0, 2, "V")
    return check_pios(system, [V], cat.power(0.5, 2.0, "a"),
                      cat.power(1.0 / (2.0 * eps * eps), 2.0, "phi"),
                      [cat.linear(2.0 * eps, "rho")],
                      Region(spec.x_box, spec.d_box), spec.plan)


def _run_eq73(spec: CertifySpec) -> CertificateReport:
    p = spec.params
    b, m, lam = p["b"], int(p["m"]), p["lam"]
    if not (0.0 < lam < 1.0):
        raise ConfigError("lam must lie in (0, 1)")
    system = make_small_gain_pair(b, m, allow_large_coupling=abs(b) >= 1.0)
    V1 = _half_square(0, 2, "V1")
    V2 = _half_square(1, 2, "V2")
    U = _half_norm_sq(2, "U")
    gamma1 = cat.power(2.0 ** (m - 1) * b * b / lam ** 2, float(m), "gamma1")
    gamma2 = cat.power(2.0 ** ((1.0 - m) / m) / lam ** (2.0 / m), 1.0 / m, "gamma2")
    zeta = cat.power(2.0 / (1.0 - lam) ** 2, 2.0, "zeta")
    p_fn = cat.max_of(cat.power(b * b + 2.0, 1.0, "p-lin"),
                      cat.power(2.0 ** (m + 1), float(m), "p-pow"))
    # shared decrement: linear near the decay rate of V1, quadratic-capped so
    # it also lower-bounds the V2 subsystem's power-law decay near the origin
    rho = cat.min_of(cat.linear(1.0 - lam),
                     cat.power((1.0 - lam) * 2.0 ** (m + 1) / 2.0, (m + 1) / 2.0))
    return check_small_gain(system, V1, V2, U, cat.power(0.25, 2.0, "a"),
                            gamma1, gamma2, zeta, p_fn, 0.0, rho,
                            Region(spec.x_box, spec.d_box), spec.plan)


def _run_eq111(spec: CertifySpec) -> CertificateReport:
    p = spec.params
    system = make_deadzone_loop(p["a"], p["c"], p["gamma"], p["eps"])
    V = _half_square(0, 2, "V")
    rho = cat.linear(p["rho_scale"] * p["c"], "rho")
    return check_deadzone(system, V, rho, cat.identity(), cat.identity(),
                          a=p["a"], b=1.0, c=p["c"], delta=10.0,
                          region=Region(spec.x_box, spec.d_box), plan=spec.plan)


def _run_eq111_oag(spec: CertifySpec) -> CertificateReport:
    p = spec.params
    system = make_deadzone_loop(p["a"], p["c"], p["gamma"], p["eps"])
    H = scalar_field(lambda x: -math.exp(x[1]), 2,
                     lambda x: np.array([0.0, -math.exp(x[1])]), name="H_s")
    gamma = p["gamma"]
    eps = p["eps"]

    def Q_of(s):
        return lambda x: gamma * max(0.5 * x[0] ** 2 - eps, 0.0)

    return check_oag(system, lambda s: H, Q_of, cat.const(math.sqrt(2.0 * eps), "b"),
                     Region(spec.x_box), spec.plan, s_levels=spec.params["s_levels"])


def _run_eq121_oag(spec: CertifySpec) -> CertificateReport:
    system = make_planar_saturated(lambda xi, y, d: 1.0, lambda xi, y, d: 2.0 * y)
    H = scalar_field(lambda x: 0.5 * max(0.5 * x[1] ** 2 - 0.5, 0.0) ** 2, 2,
                     lambda x: np.array([0.0, max(0.5 * x[1] ** 2 - 0.5, 0.0) * x[1]]),
                     name="H_s")

    def Q_of(s):
        return lambda x: x[1] ** 2 * max(0.5 * x[1] ** 2 - 0.5, 0.0)

    return check_oag(system, lambda s: H, Q_of, cat.const(1.0, "b"),
                     Region(spec.x_box), spec.plan, s_levels=spec.params["s_levels"])


@dataclass(frozen=True)
class _Preset:
    run: Callable[[CertifySpec], CertificateReport]
    params: dict
    x_box: tuple
    d_box: tuple
    plan: SamplingPlan
    description: str


_PRESETS: dict = {
    "eq24": _Preset(_run_eq24, {"theta": 0.0, "k": 1.0, "sigma": 1.0},
                    ((-5.0, 5.0), (-5.0, 5.0)), (), SamplingPlan(41, 0, 0),
                    "uniform output-stability certificate for the adaptive scalar system"),
    "eq8": _Preset(_run_eq8, {}, ((-5.0, 5.0),) * 4, (), SamplingPlan(9, 500, 0),
                   "output boundedness of the oscillator pair via conserved energy"),
    "eq8-fc": _Preset(_run_eq8_fc, {"c": 0.0, "sigma": 0.0, "r": 2.0},
                      ((-5.0, 5.0),) * 4, (), SamplingPlan(9, 500, 0),
                      "forward-completeness growth bound for the oscillator pair"),
    "eq20": _Preset(_run_eq20, {"g_bound": 1.0}, ((-3.0, 3.0),) * 3, (),
                    SamplingPlan(15, 500, 0),
                    "asymptotic output stability despite unbounded solutions"),
    "eq57": _Preset(_run_eq57, {}, ((-4.0, 4.0), (-4.0, 4.0)), ((-2.0, 2.0),),
                    SamplingPlan(21, 500, 0),
                    "bounded-input bounded-state threshold certificate"),
    "eq62-ios": _Preset(_run_eq62, {"theta": 0.0, "k": 2.0, "sigma": 1.0},
                        ((-4.0, 4.0), (-4.0, 4.0)), ((-2.0, 2.0),),
                        SamplingPlan(17, 500, 0),
                        "input-to-output stability of the disturbed adaptive scalar system"),
    "eq73": _Preset(_run_eq73, {"b": 0.5, "m": 3, "lam": 0.8},
                    ((-3.0, 3.0), (-3.0, 3.0)), ((-1.0, 1.0),),
                    SamplingPlan(21, 1000, 0),
                    "small-gain certificate for the coupled scalar pair"),
    "eq111": _Preset(_run_eq111,
                     {"a": 1.0, "c": 1.0, "gamma": 1.0, "eps": 0.125, "rho_scale": 1.0},
                     ((-3.0, 3.0), (-1.0, 2.0)), ((-2.0, 2.0), (-4.0, 4.0)),
                     SamplingPlan(9, 1000, 0),
                     "dissipation inequality of the deadzone-adaptive loop"),
    "eq111-oag": _Preset(_run_eq111_oag,
                         {"a": 1.0, "c": 1.0, "gamma": 1.0, "eps": 0.125,
                          "s_levels": (0.0, 1.0, 2.0)},
                         ((-3.0, 3.0), (-1.0, 2.0)), (), SamplingPlan(21, 0, 0),
                         "asymptotic output bound sqrt(2 eps) for the deadzone loop"),
    "eq121-oag": _Preset(_run_eq121_oag, {"s_levels": (0.0, 0.5, 1.0, 2.0)},
                         ((-2.0, 2.0), (-2.0, 2.0)), (), SamplingPlan(21, 0, 0),
                         "asymptotic output bound 1 for the saturated planar system"),
}


def preset_ids() -> list:
    return sorted(_PRESETS)


def preset_catalog() -> list:
    return [(pid, p.description) for pid, p in sorted(_PRESETS.items())]


def default_spec(preset_id: str) -> CertifySpec:
    try:
        preset = _PRESETS[preset_id]
    except KeyError:
        raise ConfigError(f"unknown certify preset {preset_id!r}; "
                          f"known: {', '.join(preset_ids())}") from None
    return CertifySpec(preset=preset_id, params=dict(preset.params),
                       x_box=preset.x_box, d_box=preset.d_box, plan=preset.plan)


def run_certify(spec: CertifySpec) -> CertificateReport:
    try:
        preset = _PRESETS[spec.preset]
    except KeyError:
        raise ConfigError(f"unknown certify preset {spec.preset!r}") from None
    return preset.run(spec)


def builtin_scalar_fields() -> list:
    """Every ScalarField used by the built-in presets (for gradient audits)."""
    fields = [
        _half_norm_sq(2, "V-quad"),
        _half_square(0, 2, "half-x1-sq"),
        _half_square(1, 2, "half-x2-sq"),
        scalar_field(lambda x: 0.5 * x[0] ** 2 + x[1] ** 2 / (1.0 + x[1] ** 2), 3,
                     lambda x: np.array([x[0], 2.0 * x[1] / (1.0 + x[1] ** 2) ** 2, 0.0]),
                     name="saturating-V"),
        scalar_field(lambda x: -math.exp(x[1]), 2,
                     lambda x: np.array([0.0, -math.exp(x[1])]), name="neg-exp-gain"),
        scalar_field(lambda x: 0.5 * max(0.5 * x[1] ** 2 - 0.5, 0.0) ** 2, 2,
                     lambda x: np.array([0.0, max(0.5 * x[1] ** 2 - 0.5, 0.0) * x[1]]),
                     name="excess-energy-sq"),
    ]
    energy = oscillator_energy()
    fields.append(scalar_field(
        energy, 4, lambda x: np.array([x[0] - x[1], x[1] - x[0], x[2], x[3]]),
        name="oscillator-energy"))
    return fields
