"""Minimal static SVG line charts (no plotting dependency).

Charts are pure renderings of already-computed columns: polylines over a
fixed viewBox with simple axes, optional log-scale y, and dashed
horizontal reference lines.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#17becf", "#7f7f7f",
)

_W, _H = 900, 300
_ML, _MR, _MT, _MB = 70, 20, 30, 40


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * span:
        out.append(round(t, 12))
        t += step
    return out


def line_chart(
    series: list[tuple[str, "array", "array"]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    log_y: bool = False,
    ref_lines: tuple[float, ...] = (),
) -> str:
    """One chart as an SVG fragment (<g>...</g>) of fixed size 900x300."""
    xs_all = [x for _, xs, _ in series for x in (min(xs), max(xs))]
    ys_all = []
    for _, _, ys in series:
        for y in ys:
            if not log_y or y > 0:
                ys_all.append(math.log10(y) if log_y else y)
    ys_all.extend(math.log10(r) if log_y else r for r in ref_lines if not log_y or r > 0)
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if y_hi - y_lo < 1e-15:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + pw * (x - x_lo) / (x_hi - x_lo) if x_hi > x_lo else _ML

    def py(y):
        v = math.log10(y) if log_y else y
        return _MT + ph * (1.0 - (v - y_lo) / (y_hi - y_lo))

    parts = [f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>']
    if title:
        parts.append(
            f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>'
        )
    for tx in _ticks(x_lo, x_hi):
        parts.append(
            f'<text x="{px(tx):.1f}" y="{_H - _MB + 16}" text-anchor="middle" '
            f'font-size="10">{tx:g}</text>'
        )
    tick_vals = _ticks(y_lo, y_hi)
    for tv in tick_vals:
        yy = _MT + ph * (1.0 - (tv - y_lo) / (y_hi - y_lo))
        label = f"1e{tv:g}" if log_y else f"{tv:g}"
        parts.append(
            f'<text x="{_ML - 6}" y="{yy:.1f}" text-anchor="end" font-size="10">{label}</text>'
        )
        parts.append(
            f'<line x1="{_ML}" y1="{yy:.1f}" x2="{_W - _MR}" y2="{yy:.1f}" '
            f'stroke="#eee"/>'
        )
    for r in ref_lines:
        if log_y and r <= 0:
            continue
        parts.append(
            f'<line x1="{_ML}" y1="{py(r):.1f}" x2="{_W - _MR}" y2="{py(r):.1f}" '
            f'stroke="#444" stroke-dasharray="6,4"/>'
        )
    for idx, (name, xs, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        pts = []
        for x, y in zip(xs, ys):
            if log_y and y <= 0:
                continue
            pts.append(f"{px(x):.2f},{py(y):.2f}")
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
            f'stroke-width="1"/>'
        )
        if name:
            parts.append(
                f'<text x="{_W - _MR - 4}" y="{_MT + 14 + 13 * idx}" text-anchor="end" '
                f'font-size="11" fill="{color}">{escape(name)}</text>'
            )
    if x_label:
        parts.append(
            f'<text x="{_W / 2}" y="{_H - 8}" text-anchor="middle" font-size="11">'
            f"{escape(x_label)}</text>"
        )
    if y_label:
        parts.append(
            f'<text x="14" y="{_MT + ph / 2}" font-size="11" text-anchor="middle" '
            f'transform="rotate(-90 14 {_MT + ph / 2})">{escape(y_label)}</text>'
        )
    return "<g>" + "".join(parts) + "</g>"


def document(charts: list[str]) -> str:
    """Stack chart fragments vertically into one SVG 1.1 document."""
    height = _H * len(charts)
    body = []
    for i, c in enumerate(charts):
        body.append(f'<g transform="translate(0 {i * _H})">{c}</g>')
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {_W} {height}" width="{_W}" height="{height}" '
        f'font-family="sans-serif">'
        + "".join(body)
        + "</svg>\n"
    )
