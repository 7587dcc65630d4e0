"""Deterministic SVG rendering of 2-D slices of regions and certificates."""

from __future__ import annotations

from .geometry import Box, DomainError

CELL = 10
PAD = 24

_STYLE = {
    "region": "#c8d8ea",
    "U": "#dce9f5",
    "W": "#f2e3cf",
    "L": "#d1342f",
    "obstacle": "#5a5a5a",
    "component": "#d1342f",
}


def _slice_points(points, fix: dict, axes: tuple) -> set:
    out = set()
    for p in points:
        if all(p[ax] == val for ax, val in fix.items()):
            out.add((p[axes[0]], p[axes[1]]))
    return out


def plot_slice(box: Box, layers: list, fix: dict, axes: tuple | None = None,
               title: str = "") -> str:
    """Render cell layers of a 2-D slice (all other coordinates fixed).

    layers: list of (kind, points) drawn in order; kinds index the palette.
    """
    dim = box.dim
    fix = {int(a): int(v) for a, v in fix.items()}
    if axes is None:
        axes = tuple(a for a in range(dim) if a not in fix)
    if len(axes) != 2:
        raise DomainError("slice must leave exactly two free axes")
    for ax, val in fix.items():
        if not box.lo[ax] <= val <= box.hi[ax]:
            raise DomainError(f"slice coordinate {val} outside the box on axis {ax}")
    ax0, ax1 = axes
    w = box.hi[ax0] - box.lo[ax0] + 1
    h = box.hi[ax1] - box.lo[ax1] + 1
    width = w * CELL + 2 * PAD
    height = h * CELL + 2 * PAD
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{PAD}" y="{PAD}" width="{w * CELL}" height="{h * CELL}" '
        f'fill="none" stroke="#303030" stroke-width="1"/>',
    ]
    if title:
        parts.append(f'<text x="{PAD}" y="{PAD - 8}" font-size="11" '
                     f'font-family="monospace">{title}</text>')
    for kind, points in layers:
        color = _STYLE.get(kind, "#888888")
        cells = sorted(_slice_points(points, fix, (ax0, ax1)))
        for x, y in cells:
            px = PAD + (x - box.lo[ax0]) * CELL
            py = PAD + (box.hi[ax1] - y) * CELL
            parts.append(f'<rect x="{px}" y="{py}" width="{CELL}" '
                         f'height="{CELL}" fill="{color}"/>')
    mid_y = PAD + h * CELL / 2
    parts.append(f'<text x="4" y="{mid_y:.0f}" font-size="11" '
                 f'font-family="monospace">F-</text>')
    parts.append(f'<text x="{PAD + w * CELL + 4}" y="{mid_y:.0f}" '
                 f'font-size="11" font-family="monospace">F+</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
