"""Deterministic SVG rendering of trajectory and estimate CSV files.

A thin emitter: time-series panels for trajectory files, a single curve for
estimate files.  Output bytes depend only on the input data and style string
(no timestamps, no environment-dependent layout), so plots can be compared
byte-for-byte across reruns.
"""
from __future__ import annotations

import math

import numpy as np

from .ode_core import read_csv_table

__all__ = ["SchemaError", "emit_plot"]

_WIDTH = 640
_PANEL_H = 170
_MARGIN_L = 64
_MARGIN_R = 16
_MARGIN_T = 28
_MARGIN_B = 34
_STYLES = ("auto", "lines")


class SchemaError(ValueError):
    """Input CSV does not conform to a known stabkit schema."""


def _f(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.6g}"


def _panel_svg(out: list, x: np.ndarray, y: np.ndarray, title: str, x_label: str,
               top: float) -> None:
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _PANEL_H - _MARGIN_T - _MARGIN_B
    x0, x1 = (float(x.min()), float(x.max())) if len(x) else (0.0, 1.0)
    y0, y1 = (float(y.min()), float(y.max())) if len(y) else (0.0, 1.0)
    if x1 - x0 <= 0.0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    if y1 - y0 <= 0.0:
        y0, y1 = y0 - 1.0, y1 + 1.0

    def sx(v):
        return _MARGIN_L + (v - x0) / (x1 - x0) * plot_w

    def sy(v):
        return top + _MARGIN_T + (1.0 - (v - y0) / (y1 - y0)) * plot_h

    out.append(f'<rect x="{_MARGIN_L}" y="{_f(top + _MARGIN_T)}" width="{plot_w}" '
               f'height="{plot_h}" fill="none" stroke="#444444" stroke-width="1"/>')
    out.append(f'<text x="{_MARGIN_L}" y="{_f(top + 18)}" font-family="monospace" '
               f'font-size="13" fill="#111111">{title}</text>')
    if y0 < 0.0 < y1:
        yz = sy(0.0)
        out.append(f'<line x1="{_MARGIN_L}" y1="{_f(yz)}" x2="{_MARGIN_L + plot_w}" '
                   f'y2="{_f(yz)}" stroke="#bbbbbb" stroke-width="0.5"/>')
    pts = " ".join(f"{_f(sx(a))},{_f(sy(b))}" for a, b in zip(x, y))
    if pts:
        out.append(f'<polyline points="{pts}" fill="none" stroke="#3a6ea5" stroke-width="1.2"/>')
    for v, anchor_y in ((y1, top + _MARGIN_T + 10), (y0, top + _MARGIN_T + plot_h)):
        out.append(f'<text x="{_MARGIN_L - 6}" y="{_f(anchor_y)}" font-family="monospace" '
                   f'font-size="10" fill="#333333" text-anchor="end">{_label(v)}</text>')
    base = top + _MARGIN_T + plot_h + 14
    out.append(f'<text x="{_MARGIN_L}" y="{_f(base)}" font-family="monospace" '
               f'font-size="10" fill="#333333">{_label(x0)}</text>')
    out.append(f'<text x="{_MARGIN_L + plot_w}" y="{_f(base)}" font-family="monospace" '
               f'font-size="10" fill="#333333" text-anchor="end">{_label(x1)}</text>')
    out.append(f'<text x="{_WIDTH // 2}" y="{_f(base)}" font-family="monospace" '
               f'font-size="10" fill="#333333" text-anchor="middle">{x_label}</text>')


def emit_plot(csv_path, out_path, style: str = "auto") -> None:
    """Render a stabkit CSV into a self-contained SVG (deterministic bytes).

    Trajectory files (header t,x1,...) get one panel per plotted column;
    output columns that bitwise duplicate a state column are skipped.
    Estimate files (header abscissa,value) get a single curve.
    """
    if style not in _STYLES:
        raise SchemaError(f"unknown style {style!r}; choose from {_STYLES}")
    comments, header, data = read_csv_table(csv_path)
    if data.shape[0] == 0:
        raise SchemaError(f"{csv_path}: no data rows")

    panels = []
    if header == ["abscissa", "value"]:
        kind = next((c.split("kind=", 1)[1].split()[0] for c in comments if "kind=" in c), "estimate")
        panels.append((data[:, 0], data[:, 1], kind, "abscissa"))
    elif header and header[0] == "t":
        state_cols = [i for i, name in enumerate(header) if name.startswith("x")]
        for i, name in enumerate(header[1:], start=1):
            if name.startswith("y"):
                duplicated = any(np.array_equal(data[:, i], data[:, j]) for j in state_cols)
                if duplicated:
                    continue
            panels.append((data[:, 0], data[:, i], name, "t"))
    else:
        raise SchemaError(f"{csv_path}: unrecognized header {header!r}")
    if not panels:
        raise SchemaError(f"{csv_path}: nothing to plot")

    height = _PANEL_H * len(panels)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{height}" '
        f'viewBox="0 0 {_WIDTH} {height}">',
        f'<rect width="{_WIDTH}" height="{height}" fill="#ffffff"/>',
    ]
    for idx, (x, y, title, x_label) in enumerate(panels):
        _panel_svg(out, np.asarray(x, dtype=float), np.asarray(y, dtype=float),
                   title, x_label, idx * _PANEL_H)
    out.append("</svg>")
    with open(out_path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
