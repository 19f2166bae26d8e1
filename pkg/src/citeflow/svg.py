"""Minimal hand-written SVG output (heatmaps and log-log scatters).

Written by string formatting so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from html import escape
from typing import Mapping, Sequence

# light -> mid -> dark; value 0 maps to the mid shade
_LIGHT = (247, 251, 255)
_MID = (107, 174, 214)
_DARK = (8, 48, 107)
_ABSENT = "#ffffff"
_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _lerp(a: tuple[int, int, int], b: tuple[int, int, int], t: float) -> str:
    r, g, bl = (round(x + (y - x) * t) for x, y in zip(a, b))
    return f"#{r:02x}{g:02x}{bl:02x}"


def diverging_color(value: float, scale: float) -> str:
    """Shade for ``value`` on a scale clamped to [-scale, scale]."""
    if math.isnan(value):
        return _ABSENT
    t = 0.0 if scale <= 0 else max(-1.0, min(1.0, value / scale))
    return _lerp(_MID, _DARK, t) if t >= 0 else _lerp(_MID, _LIGHT, -t)


def luminance(color: str) -> float:
    r, g, b = (int(color[i : i + 2], 16) for i in (1, 3, 5))
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


def heatmap(labels: Sequence[str], values: Sequence[Sequence[float]], title: str = "", cell: int = 22) -> str:
    """Square matrix heatmap: rows are sources, columns destinations."""
    c = len(labels)
    finite = [abs(v) for row in values for v in row if not math.isnan(v)]
    scale = max(finite) if finite else 0.0
    pad = 8 + 7 * max((len(s) for s in labels), default=1)
    top = pad + (24 if title else 0)
    width = pad + c * cell + 10
    height = top + c * cell + 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<desc>linear shade clamped at +/-{scale:.6f}</desc>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>')
    for i, lab in enumerate(labels):
        y = top + i * cell + cell / 2 + 4
        out.append(f'<text x="{pad - 4}" y="{y:.1f}" text-anchor="end">{escape(lab)}</text>')
        x = pad + i * cell + cell / 2 + 4
        out.append(
            f'<text x="{x:.1f}" y="{top - 4}" text-anchor="start" '
            f'transform="rotate(-90 {x:.1f} {top - 4})">{escape(lab)}</text>'
        )
    for i in range(c):
        for j in range(c):
            v = values[i][j]
            shown = "NA" if math.isnan(v) else f"{v:.6f}"
            out.append(
                f'<rect x="{pad + j * cell}" y="{top + i * cell}" width="{cell}" height="{cell}" '
                f'fill="{diverging_color(v, scale)}" stroke="#cccccc" stroke-width="0.5" '
                f'data-row="{i}" data-col="{j}" data-value="{shown}"><title>{escape(labels[i])} -&gt; '
                f"{escape(labels[j])}: {shown}</title></rect>"
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def loglog_scatter(
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
    size: tuple[int, int] = (420, 320),
) -> str:
    """Scatter of positive (x, y) points on log10 axes; non-positive points are skipped."""
    w, h = size
    left, right, top, bottom = 56, 12, 28, 42
    pts = {
        name: [(math.log10(x), math.log10(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
        for name, (xs, ys) in series.items()
    }
    allx = [p[0] for ps in pts.values() for p in ps] or [0.0, 1.0]
    ally = [p[1] for ps in pts.values() for p in ps] or [0.0, 1.0]
    x0, x1 = math.floor(min(allx)), math.ceil(max(allx))
    y0, y1 = math.floor(min(ally)), math.ceil(max(ally))
    x1 = max(x1, x0 + 1)
    y1 = max(y1, y0 + 1)

    def sx(v: float) -> float:
        return left + (v - x0) / (x1 - x0) * (w - left - right)

    def sy(v: float) -> float:
        return h - bottom - (v - y0) / (y1 - y0) * (h - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" '
        f'font-family="sans-serif" font-size="10">',
        f'<rect x="{left}" y="{top}" width="{w - left - right}" height="{h - top - bottom}" '
        f'fill="none" stroke="#444444"/>',
    ]
    if title:
        out.append(f'<text x="{w / 2:.1f}" y="16" text-anchor="middle" font-size="12">{escape(title)}</text>')
    for k in range(x0, x1 + 1):
        out.append(f'<text x="{sx(k):.1f}" y="{h - bottom + 14}" text-anchor="middle">1e{k}</text>')
    for k in range(y0, y1 + 1):
        out.append(f'<text x="{left - 4}" y="{sy(k) + 3:.1f}" text-anchor="end">1e{k}</text>')
    if xlabel:
        out.append(f'<text x="{(left + w - right) / 2:.1f}" y="{h - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="12" y="{(top + h - bottom) / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 12 {(top + h - bottom) / 2:.1f})">{escape(ylabel)}</text>'
        )
    for idx, (name, ps) in enumerate(pts.items()):
        color = _SERIES_COLORS[idx % len(_SERIES_COLORS)]
        out.append(f'<g fill="{color}" data-series="{escape(name)}">')
        out.extend(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.2"/>' for x, y in ps)
        out.append("</g>")
        out.append(
            f'<text x="{w - right - 4}" y="{top + 12 + 12 * idx}" text-anchor="end" fill="{color}">{escape(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
