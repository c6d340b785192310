"""Parametric catalogue of comparison functions used by certificate configs.

Enough shapes to express every gain/decrement function the built-in
certificates need: linear, pure power, affine-max, rational, constants,
and min/max combinators.
"""
from __future__ import annotations

from .certificates import ComparisonFunction, comparison

__all__ = [
    "linear", "power", "affine_max", "rational", "const",
    "identity", "min_of", "max_of",
]


def linear(a: float, name: str | None = None) -> ComparisonFunction:
    """s -> a s; class-K-infinity for a > 0."""
    if a < 0.0:
        raise ValueError("slope must be >= 0")
    kind = "class-kinf" if a > 0.0 else "nondecreasing"
    return comparison(kind, lambda s: a * s, name or f"linear({a:g})")


def power(coeff: float, exponent: float, name: str | None = None) -> ComparisonFunction:
    """s -> coeff * s^exponent; class-K-infinity for positive parameters."""
    if coeff < 0.0 or exponent <= 0.0:
        raise ValueError("need coeff >= 0 and exponent > 0")
    kind = "class-kinf" if coeff > 0.0 else "nondecreasing"
    return comparison(kind, lambda s: coeff * s ** exponent, name or f"power({coeff:g},{exponent:g})")


def affine_max(a0: float, a1: float, coeff: float, exponent: float,
               name: str | None = None) -> ComparisonFunction:
    """s -> max(a0 + a1 s, coeff * s^exponent), nondecreasing."""
    if a1 < 0.0 or coeff < 0.0 or exponent <= 0.0:
        raise ValueError("affine-max parameters must give a nondecreasing function")
    return comparison("nondecreasing",
                      lambda s: max(a0 + a1 * s, coeff * s ** exponent),
                      name or f"affine_max({a0:g},{a1:g},{coeff:g},{exponent:g})")


def rational(coeff: float, num_pow: float, den_pow: float,
             name: str | None = None) -> ComparisonFunction:
    """s -> coeff * s^p / (1 + s^q) with p > q >= 0 (keeps it increasing)."""
    if coeff <= 0.0 or num_pow <= den_pow or den_pow < 0.0:
        raise ValueError("need coeff > 0 and num_pow > den_pow >= 0")
    return comparison("class-k",
                      lambda s: coeff * s ** num_pow / (1.0 + s ** den_pow),
                      name or f"rational({coeff:g},{num_pow:g},{den_pow:g})")


def const(v: float, name: str | None = None) -> ComparisonFunction:
    if v < 0.0:
        raise ValueError("constant must be >= 0")
    return comparison("nondecreasing", lambda s: v, name or f"const({v:g})")


def identity() -> ComparisonFunction:
    return linear(1.0, name="identity")


def _combine(f: ComparisonFunction, g: ComparisonFunction, op, label: str) -> ComparisonFunction:
    kind = f.kind if f.kind == g.kind else "nondecreasing"
    return comparison(kind, lambda s: op(f.value(s), g.value(s)), f"{label}({f.name},{g.name})")


def min_of(f: ComparisonFunction, g: ComparisonFunction) -> ComparisonFunction:
    """Pointwise minimum; preserves a shared kind (min of class-K is class-K)."""
    return _combine(f, g, min, "min")


def max_of(f: ComparisonFunction, g: ComparisonFunction) -> ComparisonFunction:
    """Pointwise maximum; preserves a shared kind."""
    return _combine(f, g, max, "max")
