"""Minimal self-contained SVG line and scatter plots.

Output is a deterministic function of the input: coordinates are printed
with fixed precision and nothing depends on time or environment.

Occupation coloring maps the fractions of a Bloch mode to RGB channels,
red = waveguide, green = optical cavity, blue = mechanics, each scaled to
0..255 and rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape

import numpy as np

PALETTE = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#17202a")


@dataclass(frozen=True)
class PlotSpec:
    x: str
    y: tuple
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 420
    colors: tuple | None = None  # per-point (f_wg, f_o, f_m) triples for occupation scatter plots
    markers: bool = False
    labels: tuple = field(default_factory=tuple)


def occupation_rgb(f_wg, f_o, f_m) -> str:
    """``rgb(R,G,B)`` with channels ``round(255 * fraction)``; NaN fractions map to grey."""
    vals = (f_wg, f_o, f_m)
    if any(not math.isfinite(v) for v in vals):
        return "rgb(128,128,128)"
    r, g, b = (int(round(255 * min(max(v, 0.0), 1.0))) for v in vals)
    return f"rgb({r},{g},{b})"


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def _fmt(v):
    return f"{v:.3f}"


def emit_plot(table: dict, spec: PlotSpec) -> str:
    """Render columns of ``table`` as an SVG document string.

    Each entry of ``spec.y`` becomes one polyline (split at non-finite
    values). With ``spec.colors`` every point is also drawn as a dot in its
    own color.
    """
    if not table or spec.x not in table or len(np.asarray(table[spec.x])) == 0:
        raise ValueError("cannot plot an empty table")
    x = np.asarray(table[spec.x], dtype=float)
    ys = [np.asarray(table[name], dtype=float) for name in spec.y]
    for y in ys:
        if y.shape != x.shape:
            raise ValueError("all columns must have the same length")

    finite_x = x[np.isfinite(x)]
    finite_y = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.array([])
    if finite_x.size == 0 or finite_y.size == 0:
        raise ValueError("no finite data to plot")
    x0, x1 = float(finite_x.min()), float(finite_x.max())
    y0, y1 = float(finite_y.min()), float(finite_y.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    W, H = spec.width, spec.height
    ml, mr, mt, mb = 70, 20, 40, 55
    pw, ph = W - ml - mr, H - mt - mb

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>',
    ]
    for t in _ticks(x0, x1):
        px = _fmt(sx(t))
        out.append(f'<line x1="{px}" y1="{mt + ph}" x2="{px}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{mt + ph + 18}" font-size="11" text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        py = _fmt(sy(t))
        out.append(f'<line x1="{ml - 5}" y1="{py}" x2="{ml}" y2="{py}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{py}" font-size="11" text-anchor="end" dominant-baseline="middle">{t:.4g}</text>')
    if spec.title:
        out.append(f'<text x="{W / 2:.1f}" y="22" font-size="14" text-anchor="middle">{escape(spec.title)}</text>')
    if spec.xlabel:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="{H - 12}" font-size="12" text-anchor="middle">{escape(spec.xlabel)}</text>')
    if spec.ylabel:
        cy = mt + ph / 2
        out.append(
            f'<text x="16" y="{cy:.1f}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {cy:.1f})">{escape(spec.ylabel)}</text>'
        )

    for k, y in enumerate(ys):
        color = PALETTE[k % len(PALETTE)]
        ok = np.isfinite(x) & np.isfinite(y)
        runs = []
        current = []
        for i in range(x.size):
            if ok[i]:
                current.append(f"{_fmt(sx(x[i]))},{_fmt(sy(y[i]))}")
            elif current:
                runs.append(current)
                current = []
        if current:
            runs.append(current)
        for run in runs:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(run)}"/>')
        if spec.colors is not None or spec.markers:
            for i in np.flatnonzero(ok):
                fill = occupation_rgb(*spec.colors[i]) if spec.colors is not None else color
                out.append(f'<circle cx="{_fmt(sx(x[i]))}" cy="{_fmt(sy(y[i]))}" r="2" fill="{fill}"/>')
        if k < len(spec.labels):
            ly = mt + 14 + 16 * k
            out.append(f'<line x1="{ml + pw - 110}" y1="{ly}" x2="{ml + pw - 90}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{ml + pw - 85}" y="{ly + 4}" font-size="11">{escape(spec.labels[k])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
