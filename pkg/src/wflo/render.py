"""Deterministic SVG rendering of farm grids and layouts."""

from __future__ import annotations

import math
from pathlib import Path

from wflo.farm_domain import FarmGrid
from wflo.qip import Layout

_MARGIN = 40.0
_CANVAS = 640.0


def render_layout_svg(
    grid: FarmGrid, layout: Layout, dominant_direction: float | None = None
) -> str:
    """SVG picture of the grid with selected cells marked.

    Output bytes are deterministic for fixed inputs: coordinates are
    formatted with fixed precision and cells drawn in index order. An
    optional arrow shows the dominant wind direction (blowing from).
    """
    if layout.n != grid.n:
        raise ValueError(f"layout has {layout.n} cells, grid has {grid.n}")
    xmin, ymin, xmax, ymax = grid.bounds
    span = max(xmax - xmin, ymax - ymin) or 1.0
    scale = (_CANVAS - 2 * _MARGIN) / span

    def sx(x: float) -> float:
        return _MARGIN + (x - xmin) * scale

    def sy(y: float) -> float:
        # y grows north; SVG y grows down.
        return _CANVAS - _MARGIN - (y - ymin) * scale

    half = grid.cell_side * scale / 2.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CANVAS:.0f}" height="{_CANVAS:.0f}" '
        f'viewBox="0 0 {_CANVAS:.0f} {_CANVAS:.0f}">',
        f'<rect x="{sx(xmin):.2f}" y="{sy(ymax):.2f}" width="{(xmax - xmin) * scale:.2f}" '
        f'height="{(ymax - ymin) * scale:.2f}" fill="white" stroke="black" stroke-width="1"/>',
    ]
    for i in range(grid.n):
        cx, cy = sx(float(grid.xs[i])), sy(float(grid.ys[i]))
        parts.append(
            f'<rect x="{cx - half:.2f}" y="{cy - half:.2f}" width="{2 * half:.2f}" '
            f'height="{2 * half:.2f}" fill="none" stroke="#bbbbbb" stroke-width="0.5"/>'
        )
    for i in layout.indices:
        cx, cy = sx(float(grid.xs[i])), sy(float(grid.ys[i]))
        parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{max(2.0, half * 0.45):.2f}" fill="#1f6fb2"/>')
    if dominant_direction is not None:
        parts.append(_wind_arrow(dominant_direction))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _wind_arrow(direction_deg: float) -> str:
    """Arrow near the top-left corner pointing the way the air moves."""
    theta = math.radians(direction_deg)
    fx, fy = -math.sin(theta), -math.cos(theta)
    cx = cy = _MARGIN * 0.6
    length = _MARGIN * 0.45
    x1, y1 = cx - fx * length, cy + fy * length
    x2, y2 = cx + fx * length, cy - fy * length
    return (
        f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
        f'stroke="#c0392b" stroke-width="2" marker-end="none"/>'
        f'<circle cx="{x2:.2f}" cy="{y2:.2f}" r="3.00" fill="#c0392b"/>'
    )


def write_svg(svg: str, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(svg, encoding="utf-8")
    return path
