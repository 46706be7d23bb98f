"""Minimal SVG line charts and heat maps; no plotting library needed."""
from __future__ import annotations

import math
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
WIDTH, HEIGHT = 720, 400
MARGIN = dict(left=70, right=150, top=40, bottom=50)


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    a = abs(v)
    if a >= 1e4 or a < 1e-2:
        return f"{v:.2e}"
    return f"{v:.3g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def line_chart(series: Mapping[str, tuple[Sequence[float], Sequence[float]]], title: str = "",
               xlabel: str = "", ylabel: str = "") -> str:
    """One polyline per named ``(x, y)`` series, with axes, ticks and a legend."""
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    xs = [float(v) for x, _ in series.values() for v in x]
    ys = [float(v) for _, y in series.values() for v in y if math.isfinite(v)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + (abs(y0) or 1.0)

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{MARGIN["left"]}" x2="{MARGIN["left"] + pw}" y1="{py(t):.1f}" y2="{py(t):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (name, (x, y)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(float(a)):.1f},{py(float(b)):.1f}" for a, b in zip(x, y) if math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" x2="{lx + 20}" y1="{ly - 4}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(grid: np.ndarray, row_labels: Sequence[str], col_labels: Sequence[str], title: str = "",
            xlabel: str = "", ylabel: str = "") -> str:
    """Cells shaded from light (low) to dark (high), each annotated with its value."""
    grid = np.asarray(grid, dtype=float)
    rows, cols = grid.shape
    cell_w, cell_h = 80, 36
    left, top = 110, 50
    width = left + cols * cell_w + 30
    height = top + rows * cell_h + 60
    lo, hi = float(np.nanmin(grid)), float(np.nanmax(grid))
    span = hi - lo or 1.0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>']
    for i in range(rows):
        for j in range(cols):
            v = grid[i, j]
            level = (v - lo) / span if math.isfinite(v) else 0.0
            shade = int(235 - 170 * level)
            fill = f"rgb({shade},{shade},255)"
            x, y = left + j * cell_w, top + i * cell_h
            text_color = "white" if level > 0.6 else "black"
            out.append(f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="{fill}" stroke="white"/>')
            out.append(f'<text x="{x + cell_w / 2}" y="{y + cell_h / 2 + 4}" text-anchor="middle" '
                       f'fill="{text_color}">{_fmt(v)}</text>')
        out.append(f'<text x="{left - 8}" y="{top + i * cell_h + cell_h / 2 + 4}" text-anchor="end">{escape(str(row_labels[i]))}</text>')
    for j in range(cols):
        out.append(f'<text x="{left + j * cell_w + cell_w / 2}" y="{top + rows * cell_h + 18}" '
                   f'text-anchor="middle">{escape(str(col_labels[j]))}</text>')
    out.append(f'<text x="{left + cols * cell_w / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{top + rows * cell_h / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + rows * cell_h / 2})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
