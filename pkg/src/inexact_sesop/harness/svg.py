"""Minimal self-contained SVG line charts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False
    color: Optional[str] = None
    markers: bool = False


def thin(x, y, max_points: int = 1500):
    """Keep at most ``max_points`` samples, spaced geometrically in index."""
    n = len(x)
    if n <= max_points:
        return np.asarray(x), np.asarray(y)
    idx = np.unique(np.geomspace(1, n, max_points).astype(int) - 1)
    idx = np.union1d(idx, [0, n - 1])
    return np.asarray(x)[idx], np.asarray(y)[idx]


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(lo), math.ceil(hi)
        step = max(1, (b - a) // 8)
        return [float(v) for v in range(a, b + 1, step)]
    span = hi - lo or 1.0
    raw = span / 6
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step) + 1)]


def _fmt(v, log):
    if log:
        return f"1e{int(v)}"
    return f"{v:g}"


def line_chart(series: list, title: str = "", xlabel: str = "k", ylabel: str = "",
               logy: bool = False, logx: bool = False,
               width: int = 720, height: int = 480) -> str:
    ml, mr, mt, mb = 80, 190, 40, 55
    pw, ph = width - ml - mr, height - mt - mb
    prepared = []
    for s in series:
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logy:
            ok &= y > 0
        if logx:
            ok &= x > 0
        x, y = thin(x[ok], y[ok])
        if logy:
            y = np.log10(y)
        if logx:
            x = np.log10(x)
        prepared.append((s, x, y))
    xs = np.concatenate([p[1] for p in prepared]) if prepared else np.array([])
    ys = np.concatenate([p[2] for p in prepared]) if prepared else np.array([])
    if xs.size == 0:
        xs, ys = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{ml + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(y0, y1, logy):
        if y0 <= t <= y1:
            out.append(f'<line x1="{ml}" x2="{ml + pw}" y1="{py(t):.1f}" y2="{py(t):.1f}" stroke="#ddd"/>')
            out.append(f'<text x="{ml - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{_fmt(t, logy)}</text>')
    for t in _ticks(x0, x1, logx):
        if x0 <= t <= x1:
            out.append(f'<line y1="{mt}" y2="{mt + ph}" x1="{px(t):.1f}" x2="{px(t):.1f}" stroke="#eee"/>')
            out.append(f'<text x="{px(t):.1f}" y="{mt + ph + 16}" text-anchor="middle">{_fmt(t, logx)}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (s, x, y) in enumerate(prepared):
        color = s.color or PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        if len(x):
            pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>')
            if s.markers:
                out.extend(f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="3" fill="{color}"/>'
                           for a, b in zip(x, y))
        ly = mt + 14 + 18 * i
        out.append(f'<line x1="{ml + pw + 10}" x2="{ml + pw + 34}" y1="{ly - 4}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{ml + pw + 40}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
