"""Deterministic SVG line charts for risk curves.

Hand-rolled SVG 1.1 text with fixed formatting: identical inputs produce
byte-identical documents, so plots can be golden-file tested.  For richer
styled figures on the report path see :mod:`adasense.plots`.
"""

from __future__ import annotations

from .bounds import BoundSpec
from .errors import EmptyCurve
from .harness import RiskCurve

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 24, 28, 48
LINE_COLORS = ("#b15928", "#6a3d9a", "#33a02c", "#e31a1c")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def render_svg(curve: RiskCurve, reference_bounds: list[BoundSpec] | None = None) -> str:
    """Self-contained SVG of risk versus amplitude, with each reference
    bound drawn as a labeled vertical line."""
    if not curve.points:
        raise EmptyCurve("cannot render an empty curve")
    bounds = list(reference_bounds or [])

    mus = [p.mu for p in curve.points]
    risks = [p.risk for p in curve.points]
    x_lo = min(mus + [b.value for b in bounds])
    x_hi = max(mus + [b.value for b in bounds])
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    y_lo = 0.0
    y_hi = max(max(risks), 1e-9) * 1.05

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        # axes
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
        f'y2="{MARGIN_T + plot_h}" stroke="black" stroke-width="1"/>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T + plot_h}" '
        f'x2="{MARGIN_L + plot_w}" y2="{MARGIN_T + plot_h}" '
        f'stroke="black" stroke-width="1"/>',
    ]

    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{MARGIN_T + plot_h}" x2="{_fmt(px)}" '
            f'y2="{MARGIN_T + plot_h + 5}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{MARGIN_T + plot_h + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{_fmt(py)}" x2="{MARGIN_L}" '
            f'y2="{_fmt(py)}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{_fmt(py + 4)}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{_fmt(ty)}</text>'
        )

    parts.append(
        f'<text x="{MARGIN_L + plot_w / 2:.6g}" y="{HEIGHT - 10}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif">μ</text>'
    )
    parts.append(
        f'<text x="16" y="{MARGIN_T + plot_h / 2:.6g}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif" '
        f'transform="rotate(-90 16 {MARGIN_T + plot_h / 2:.6g})">risk</text>'
    )

    # error whiskers, polyline, markers
    for p in curve.points:
        if p.se > 0:
            parts.append(
                f'<line x1="{_fmt(sx(p.mu))}" y1="{_fmt(sy(max(p.risk - 2 * p.se, y_lo)))}" '
                f'x2="{_fmt(sx(p.mu))}" y2="{_fmt(sy(min(p.risk + 2 * p.se, y_hi)))}" '
                f'stroke="#1f78b4" stroke-width="1"/>'
            )
    if len(curve.points) > 1:
        coords = " ".join(f"{_fmt(sx(p.mu))},{_fmt(sy(p.risk))}" for p in curve.points)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="#1f78b4" '
            f'stroke-width="1.5"/>'
        )
    for p in curve.points:
        parts.append(
            f'<circle cx="{_fmt(sx(p.mu))}" cy="{_fmt(sy(p.risk))}" r="3" '
            f'fill="#1f78b4"/>'
        )

    # vertical reference bounds with legend
    legend_y = MARGIN_T + 8
    for j, bound in enumerate(bounds):
        color = LINE_COLORS[j % len(LINE_COLORS)]
        px = sx(bound.value)
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{MARGIN_T}" x2="{_fmt(px)}" '
            f'y2="{MARGIN_T + plot_h}" stroke="{color}" stroke-width="1.2" '
            f'stroke-dasharray="5,3"/>'
        )
        parts.append(
            f'<line x1="{WIDTH - 190}" y1="{legend_y}" x2="{WIDTH - 166}" '
            f'y2="{legend_y}" stroke="{color}" stroke-width="1.2" '
            f'stroke-dasharray="5,3"/>'
        )
        parts.append(
            f'<text x="{WIDTH - 160}" y="{legend_y + 4}" font-size="11" '
            f'font-family="sans-serif">{bound.name} = {_fmt(bound.value)}</text>'
        )
        legend_y += 16

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
