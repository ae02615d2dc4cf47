"""Minimal native SVG line plots for run diagnostics.

Plain polyline plots with an axes box, tick labels and a small legend; no
external plotting dependency.  These are diagnostics, not pixel-contractual
artifacts.
"""

from __future__ import annotations

import math

_WIDTH, _HEIGHT = 720, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 20, 34, 44
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]


def _finite_range(values) -> tuple[float, float]:
    vals = [v for v in values if math.isfinite(v)]
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Axes:
    def __init__(self, xlim, ylim, width=_WIDTH, height=_HEIGHT):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.width, self.height = width, height

    def px(self, x: float) -> float:
        frac = (x - self.x0) / (self.x1 - self.x0)
        return _MARGIN_L + frac * (self.width - _MARGIN_L - _MARGIN_R)

    def py(self, y: float) -> float:
        frac = (y - self.y0) / (self.y1 - self.y0)
        return self.height - _MARGIN_B - frac * (self.height - _MARGIN_T - _MARGIN_B)


def _svg_header(width, height, title):
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<text x="{width / 2}" y="20" text-anchor="middle">{title}</text>\n'
    )


def _axes_frame(ax: _Axes, xlabel: str, ylabel: str) -> str:
    parts = [
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" '
        f'width="{ax.width - _MARGIN_L - _MARGIN_R}" '
        f'height="{ax.height - _MARGIN_T - _MARGIN_B}" '
        f'fill="none" stroke="black"/>\n'
    ]
    for i in range(5):
        xv = ax.x0 + i * (ax.x1 - ax.x0) / 4
        yv = ax.y0 + i * (ax.y1 - ax.y0) / 4
        parts.append(
            f'<text x="{ax.px(xv):.1f}" y="{ax.height - _MARGIN_B + 16}" '
            f'text-anchor="middle">{xv:.3g}</text>\n'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 6}" y="{ax.py(yv):.1f}" '
            f'text-anchor="end" dominant-baseline="middle">{yv:.3g}</text>\n'
        )
    parts.append(
        f'<text x="{(ax.width + _MARGIN_L) / 2}" y="{ax.height - 8}" '
        f'text-anchor="middle">{xlabel}</text>\n'
    )
    parts.append(
        f'<text x="14" y="{(ax.height + _MARGIN_T) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {(ax.height + _MARGIN_T) / 2})">{ylabel}</text>\n'
    )
    return "".join(parts)


def _polyline(ax: _Axes, xs, ys, color: str, dashed: bool = False) -> str:
    pts = " ".join(
        f"{ax.px(x):.2f},{ax.py(y):.2f}"
        for x, y in zip(xs, ys)
        if math.isfinite(x) and math.isfinite(y)
    )
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>\n'


def line_plot(
    xs,
    series: list[tuple[str, list]],
    title: str,
    xlabel: str,
    ylabel: str,
    hlines: list[tuple[str, float]] | None = None,
) -> str:
    """Several named series over a shared abscissa, plus dashed guide lines."""
    xs = list(xs)
    all_y = [v for _, ys in series for v in ys]
    all_y += [y for _, y in (hlines or [])]
    ax = _Axes(_finite_range(xs), _finite_range(all_y))
    out = [_svg_header(ax.width, ax.height, title), _axes_frame(ax, xlabel, ylabel)]
    for (label, y) in hlines or []:
        out.append(_polyline(ax, [ax.x0, ax.x1], [y, y], "#777777", dashed=True))
        out.append(
            f'<text x="{ax.px(ax.x1) - 4}" y="{ax.py(y) - 4}" '
            f'text-anchor="end" fill="#777777">{label}</text>\n'
        )
    for i, (label, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        out.append(_polyline(ax, xs, ys, color))
        out.append(
            f'<text x="{_MARGIN_L + 8}" y="{_MARGIN_T + 16 + 16 * i}" '
            f'fill="{color}">{label}</text>\n'
        )
    out.append("</svg>\n")
    return "".join(out)


def path_plot(
    xy: list[tuple[float, float]],
    circles: list[tuple[float, float, float, str, bool]],
    reference_xy: list[tuple[float, float]],
    title: str,
) -> str:
    """Top view: trajectory polyline, reference dashed, circles for obstacles
    and the sensing disc.  Circle tuples are (cx, cy, radius, color, dashed).
    """
    xs = [p[0] for p in xy] + [p[0] for p in reference_xy]
    ys = [p[1] for p in xy] + [p[1] for p in reference_xy]
    for cx, cy, r, _, _ in circles:
        xs += [cx - r, cx + r]
        ys += [cy - r, cy + r]
    x0, x1 = _finite_range(xs)
    y0, y1 = _finite_range(ys)
    # equalize scales for an undistorted top view
    span = max(x1 - x0, y1 - y0)
    cx_mid, cy_mid = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    size = 560
    ax = _Axes(
        (cx_mid - span / 2, cx_mid + span / 2),
        (cy_mid - span / 2, cy_mid + span / 2),
        width=size + _MARGIN_L + _MARGIN_R,
        height=size + _MARGIN_T + _MARGIN_B,
    )
    out = [_svg_header(ax.width, ax.height, title), _axes_frame(ax, "x [m]", "y [m]")]
    for cx, cy, r, color, dashed in circles:
        rx = abs(ax.px(cx + r) - ax.px(cx))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        out.append(
            f'<circle cx="{ax.px(cx):.2f}" cy="{ax.py(cy):.2f}" r="{rx:.2f}" '
            f'fill="none" stroke="{color}" stroke-width="1.5"{dash}/>\n'
        )
    if reference_xy:
        out.append(
            _polyline(
                ax,
                [p[0] for p in reference_xy],
                [p[1] for p in reference_xy],
                "#2ca02c",
                dashed=True,
            )
        )
    if xy:
        out.append(_polyline(ax, [p[0] for p in xy], [p[1] for p in xy], "#1f77b4"))
        out.append(
            f'<circle cx="{ax.px(xy[-1][0]):.2f}" cy="{ax.py(xy[-1][1]):.2f}" r="4" '
            f'fill="#1f77b4"/>\n'
        )
    out.append("</svg>\n")
    return "".join(out)
