"""Minimal standalone SVG 1.1 line charts."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

_COLOURS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


def _ticks(lo: float, hi: float, count: int = 5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def line_chart(
    series: dict,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    logx: bool = False,
    logy: bool = False,
    width: int = 640,
    height: int = 400,
) -> str:
    """Render ``{name: (xs, ys)}`` as an SVG document string.

    On a log axis, points with non-positive coordinates are dropped; log y
    plots |y| so that signed data such as I(N) stays visible.
    """
    margin = 60
    pts = {}
    for name, (xs, ys) in series.items():
        keep = []
        for x, y in zip(xs, ys):
            if logy:
                y = abs(y)
            if (logx and x <= 0) or (logy and y <= 0) or not (math.isfinite(x) and math.isfinite(y)):
                continue
            keep.append((math.log10(x) if logx else x, math.log10(y) if logy else y))
        pts[name] = keep
    allp = [p for v in pts.values() for p in v] or [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - 2 * margin, height - 2 * margin

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return height - margin - (y - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for tx in _ticks(x0, x1):
        label = f"1e{tx:.3g}" if logx else f"{tx:.4g}"
        out.append(f'<text x="{sx(tx):.2f}" y="{height - margin + 18}" font-size="11" text-anchor="middle">{escape(label)}</text>')
    for ty in _ticks(y0, y1):
        label = f"1e{ty:.3g}" if logy else f"{ty:.4g}"
        out.append(f'<text x="{margin - 6}" y="{sy(ty) + 4:.2f}" font-size="11" text-anchor="end">{escape(label)}</text>')
    if title:
        out.append(f'<text x="{width / 2}" y="{margin / 2}" font-size="14" text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{width / 2}" y="{height - 12}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="14" y="{height / 2}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 14 {height / 2})">{escape(ylabel)}</text>'
        )
    for k, (name, p) in enumerate(pts.items()):
        if not p:
            continue
        colour = _COLOURS[k % len(_COLOURS)]
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in p)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{path}"/>')
        out.append(f'<text x="{width - margin - 4}" y="{margin + 16 + 14 * k}" font-size="11" text-anchor="end" fill="{colour}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
