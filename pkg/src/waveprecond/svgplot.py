"""Minimal log-log line charts written as standalone SVG."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _ticks(lo: float, hi: float) -> list[int]:
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def loglog_svg(series: Sequence[tuple[str, Sequence[float], Sequence[float], bool]], title: str,
               xlabel: str, ylabel: str, header: Optional[str] = None,
               width: int = 640, height: int = 440) -> str:
    """``series`` holds ``(label, xs, ys, dashed)``; axes are base-10 logarithmic."""
    pts = [(x, y) for _, xs, ys, _ in series for x, y in zip(xs, ys) if x > 0 and y > 0]
    if not pts:
        raise ValueError("nothing to plot")
    lx = [math.log10(x) for x, _ in pts]
    ly = [math.log10(y) for _, y in pts]
    x0, x1 = min(lx), max(lx)
    y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
    if x1 == x0:
        x1 += 1
    if y1 == y0:
        y1 += 1
    left, right, top, bottom = 70, 170, 40, 55
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (math.log10(v) - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - math.log10(v)) / (y1 - y0) * ph

    out = []
    if header:
        out.append(f"<!-- {escape(header)} -->")
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
               f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">')
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for e in _ticks(y0, y1):
        y = top + (y1 - e) / (y1 - y0) * ph
        out.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end">1e{e}</text>')
    xs_all = sorted({x for x, _ in pts})
    for x in xs_all:
        X = sx(x)
        out.append(f'<line x1="{X:.1f}" y1="{top + ph}" x2="{X:.1f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.1f}" y="{top + ph + 18}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, xs, ys, dashed) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(xs, ys) if x > 0 and y > 0)
        dash = ' stroke-dasharray="5,4"' if dashed else ""
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        for x, y in zip(xs, ys):
            if x > 0 and y > 0:
                out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.6" fill="{color}"/>')
        ly_ = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly_}" x2="{left + pw + 36}" y2="{ly_}" '
                   f'stroke="{color}" stroke-width="1.6"{dash}/>')
        out.append(f'<text x="{left + pw + 42}" y="{ly_ + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
