"""Minimal deterministic SVG plots.

Hand-rolled rather than matplotlib so that identical inputs produce
byte-identical files (no embedded ids, dates, or hash salts), which the
batch runner promises for its outputs.
"""

from __future__ import annotations

import math

__all__ = ["loglog_points_svg", "line_plot_svg"]

WIDTH, HEIGHT = 640.0, 480.0
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70.0, 20.0, 30.0, 50.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:g}" height="{HEIGHT:g}" '
            f'viewBox="0 0 {WIDTH:g} {HEIGHT:g}">',
            f'<rect width="{WIDTH:g}" height="{HEIGHT:g}" fill="white"/>',
            f'<text x="{WIDTH / 2:.2f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>',
        ]

    def line(self, x1, y1, x2, y2, color="black", width=1.0, dash=None):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{color}" stroke-width="{width:g}"{dash_attr}/>'
        )

    def circle(self, x, y, r=4.0, color="#1f77b4"):
        self.parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{r:g}" fill="{color}"/>')

    def text(self, x, y, s, size=11, anchor="middle"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="{size:g}">{s}</text>'
        )

    def polyline(self, pts, color="#d62728", width=1.5, dash=None):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{width:g}"{dash_attr}/>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _axes(canvas: _Canvas, xlabel: str, ylabel: str):
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    canvas.line(x0, y0, x1, y0)
    canvas.line(x0, y0, x0, y1)
    canvas.text((x0 + x1) / 2, HEIGHT - 12, xlabel, size=12)
    canvas.text(18, (y0 + y1) / 2, ylabel, size=12)


def _mapper(lo: float, hi: float, out_lo: float, out_hi: float):
    span = hi - lo or 1.0

    def to_px(v: float) -> float:
        return out_lo + (v - lo) / span * (out_hi - out_lo)

    return to_px


def loglog_points_svg(
    xs, ys, slope: float | None, intercept: float | None, title: str, xlabel: str, ylabel: str
) -> str:
    """Markers on log-log axes with an optional fitted power-law line."""
    if len(xs) == 0:
        raise ValueError("no points to plot")
    lx = [math.log10(v) for v in xs]
    ly = [math.log10(v) for v in ys]
    pad = 0.15
    to_px_x = _mapper(min(lx) - pad, max(lx) + pad, MARGIN_L, WIDTH - MARGIN_R)
    to_px_y = _mapper(min(ly) - pad, max(ly) + pad, HEIGHT - MARGIN_B, MARGIN_T)
    canvas = _Canvas(title)
    _axes(canvas, xlabel, ylabel)
    for v in range(math.floor(min(lx)), math.ceil(max(lx)) + 1):
        if min(lx) - pad <= v <= max(lx) + pad:
            canvas.line(to_px_x(v), HEIGHT - MARGIN_B, to_px_x(v), MARGIN_T, color="#dddddd")
            canvas.text(to_px_x(v), HEIGHT - MARGIN_B + 16, f"1e{v}")
    for v in range(math.floor(min(ly)), math.ceil(max(ly)) + 1):
        if min(ly) - pad <= v <= max(ly) + pad:
            canvas.line(MARGIN_L, to_px_y(v), WIDTH - MARGIN_R, to_px_y(v), color="#dddddd")
            canvas.text(MARGIN_L - 8, to_px_y(v) + 4, f"1e{v}", anchor="end")
    if slope is not None and intercept is not None:
        ln10 = math.log(10.0)
        xa, xb = min(lx) - pad / 2, max(lx) + pad / 2
        ya = (slope * xa * ln10 + intercept) / ln10
        yb = (slope * xb * ln10 + intercept) / ln10
        canvas.polyline([(to_px_x(xa), to_px_y(ya)), (to_px_x(xb), to_px_y(yb))], dash="6,4")
        canvas.text(WIDTH - MARGIN_R - 6, MARGIN_T + 14, f"slope {slope:.3f}", anchor="end")
    for px, py in zip(lx, ly):
        canvas.circle(to_px_x(px), to_px_y(py))
    return canvas.render()


def line_plot_svg(ts, values, overlay=None, title: str = "", xlabel: str = "t", ylabel: str = "") -> str:
    """Sampled series (markers) with an optional dense overlay curve."""
    ts = list(ts)
    values = list(values)
    if not ts:
        raise ValueError("no points to plot")
    all_y = values + ([v for _, v in overlay] if overlay else [])
    ylo, yhi = min(all_y), max(all_y)
    ypad = 0.08 * (yhi - ylo or 1.0)
    to_px_x = _mapper(min(ts), max(ts), MARGIN_L, WIDTH - MARGIN_R)
    to_px_y = _mapper(ylo - ypad, yhi + ypad, HEIGHT - MARGIN_B, MARGIN_T)
    canvas = _Canvas(title)
    _axes(canvas, xlabel, ylabel)
    n_ticks = 5
    for i in range(n_ticks + 1):
        tv = min(ts) + (max(ts) - min(ts)) * i / n_ticks
        canvas.text(to_px_x(tv), HEIGHT - MARGIN_B + 16, f"{tv:.3g}")
        yv = (ylo - ypad) + (yhi - ylo + 2 * ypad) * i / n_ticks
        canvas.text(MARGIN_L - 8, to_px_y(yv) + 4, f"{yv:.3g}", anchor="end")
    if overlay:
        canvas.polyline([(to_px_x(t), to_px_y(v)) for t, v in overlay], color="#d62728")
    for t, v in zip(ts, values):
        canvas.circle(to_px_x(t), to_px_y(v), r=3.0)
    return canvas.render()
