"""Deterministic SVG rendering of phase portraits and phase lines.

Conventions: x-null-clines dashed, y-null-clines solid; field arrows point
into the sign quadrant of (dx/dt, dy/dt); equilibrium markers are a filled
disc (stable), an open circle (unstable), a half-filled disc (saddle), an
open circle with a dot (center), and a small square (degenerate).
Output is a pure function of the inputs: identical bytes for identical calls.
"""

from __future__ import annotations

import math

from .integrate import IntegratorOptions
from .linsys import Classification
from .phase1d import Model1D, build_phase_line
from .phase2d import (
    Model2D, classify_equilibrium_2d, extract_nullclines, find_equilibria_2d,
    integrate_trajectory, sample_vector_field,
)

__all__ = ["render_portrait_svg", "render_phaseline_svg"]

_W, _H = 640.0, 480.0
_MARGIN = 40.0

_STABLE = (Classification.STABLE_NODE, Classification.STABLE_SPIRAL)
_UNSTABLE = (Classification.UNSTABLE_NODE, Classification.UNSTABLE_SPIRAL)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, x_lo, x_hi, y_lo, y_hi):
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi
        self.parts: list[str] = []

    def px(self, x: float) -> float:
        return _MARGIN + (x - self.x_lo) / (self.x_hi - self.x_lo) * (_W - 2 * _MARGIN)

    def py(self, y: float) -> float:
        return _H - _MARGIN - (y - self.y_lo) / (self.y_hi - self.y_lo) * (_H - 2 * _MARGIN)

    def add(self, element: str):
        self.parts.append(element)

    def polyline(self, points, stroke: str, dashed: bool = False,
                 width: float = 1.2, cls: str | None = None):
        if len(points) < 2:
            return
        coords = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in points)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        klass = f' class="{cls}"' if cls else ""
        self.add(
            f'<polyline{klass} points="{coords}" fill="none" stroke="{stroke}"'
            f' stroke-width="{width}"{dash}/>'
        )

    def document(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_W)}" height="{int(_H)}"'
            f' viewBox="0 0 {int(_W)} {int(_H)}">'
        )
        frame = (
            f'<rect x="{_fmt(_MARGIN)}" y="{_fmt(_MARGIN)}" width="{_fmt(_W - 2 * _MARGIN)}"'
            f' height="{_fmt(_H - 2 * _MARGIN)}" fill="white" stroke="black" stroke-width="1"/>'
        )
        return "\n".join([head, frame, *self.parts, "</svg>"]) + "\n"


def _equilibrium_marker(canvas: _Canvas, x: float, y: float, cls: Classification) -> str:
    cx, cy = canvas.px(x), canvas.py(y)
    r = 5.0
    common = f'cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" stroke="black" stroke-width="1.2"'
    if cls in _STABLE:
        body = f'<circle {common} fill="black"/>'
    elif cls in _UNSTABLE:
        body = f'<circle {common} fill="white"/>'
    elif cls is Classification.SADDLE:
        half = (
            f'<path d="M {_fmt(cx - r)} {_fmt(cy)} A {_fmt(r)} {_fmt(r)} 0 0 1'
            f' {_fmt(cx + r)} {_fmt(cy)} Z" fill="black"/>'
        )
        body = f'<circle {common} fill="white"/>' + half
    elif cls is Classification.CENTER:
        dot = f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="1.5" fill="black"/>'
        body = f'<circle {common} fill="white"/>' + dot
    else:  # degenerate
        s = r - 1.0
        body = (
            f'<rect x="{_fmt(cx - s)}" y="{_fmt(cy - s)}" width="{_fmt(2 * s)}"'
            f' height="{_fmt(2 * s)}" fill="gray" stroke="black" stroke-width="1.2"/>'
        )
    return f'<g class="equilibrium" data-class="{cls.value}">{body}</g>'


def _field_arrow(canvas: _Canvas, sample) -> str | None:
    sx, sy = sample.case
    if sx == 0 and sy == 0:
        return None
    cx, cy = canvas.px(sample.x), canvas.py(sample.y)
    length = 9.0
    norm = math.hypot(sx, sy)
    dx = sx / norm * length
    dy = -sy / norm * length  # svg y grows downward
    x2, y2 = cx + dx, cy + dy
    # short shaft with a solid triangular head
    ang = math.atan2(dy, dx)
    ha = 4.0
    left = (x2 - ha * math.cos(ang - 0.5), y2 - ha * math.sin(ang - 0.5))
    right = (x2 - ha * math.cos(ang + 0.5), y2 - ha * math.sin(ang + 0.5))
    return (
        f'<g class="arrow"><line x1="{_fmt(cx)}" y1="{_fmt(cy)}" x2="{_fmt(x2)}"'
        f' y2="{_fmt(y2)}" stroke="gray" stroke-width="1"/>'
        f'<polygon points="{_fmt(x2)},{_fmt(y2)} {_fmt(left[0])},{_fmt(left[1])}'
        f' {_fmt(right[0])},{_fmt(right[1])}" fill="gray"/></g>'
    )


def render_portrait_svg(
    m: Model2D,
    grid: int = 64,
    field_grid: int = 16,
    starts: tuple[tuple[float, float], ...] = (),
    t_max: float = 10.0,
) -> str:
    """Phase portrait: null-clines, sign-quadrant arrows, equilibria, orbits."""
    canvas = _Canvas(m.x_lo, m.x_hi, m.y_lo, m.y_hi)

    field = sample_vector_field(m, field_grid)
    for sample in field.samples:
        el = _field_arrow(canvas, sample)
        if el:
            canvas.add(el)

    ncs = extract_nullclines(m, grid)
    for cline in ncs.clines:
        canvas.polyline(cline.points, stroke="#1f77b4", dashed=(cline.kind == "x"),
                        width=1.6, cls=f"nullcline-{cline.kind}")

    for start in starts:
        traj = integrate_trajectory(m, start, t_max, IntegratorOptions(max_step=t_max / 200))
        canvas.polyline(list(zip(traj.xs, traj.ys)), stroke="#d62728", width=1.4,
                        cls="trajectory")

    for loc in find_equilibria_2d(m, grid):
        rep = classify_equilibrium_2d(m, loc)
        canvas.add(_equilibrium_marker(canvas, rep.x, rep.y, rep.classification))

    return canvas.document()


def render_phaseline_svg(m: Model1D) -> str:
    """Phase line: axis, flow arrows, and stability-coded equilibrium markers."""
    line = build_phase_line(m)
    canvas = _Canvas(m.lo, m.hi, 0.0, 1.0)
    y_mid = 0.5

    canvas.add(
        f'<line x1="{_fmt(canvas.px(m.lo))}" y1="{_fmt(canvas.py(y_mid))}"'
        f' x2="{_fmt(canvas.px(m.hi))}" y2="{_fmt(canvas.py(y_mid))}"'
        f' stroke="black" stroke-width="1.5"/>'
    )
    for (a, b), direction in line.arrows:
        mid = 0.5 * (a + b)
        cx, cy = canvas.px(mid), canvas.py(y_mid)
        tip = cx + direction * 8.0
        canvas.add(
            f'<polygon class="flow" points="{_fmt(tip)},{_fmt(cy)}'
            f' {_fmt(tip - direction * 10)},{_fmt(cy - 5)}'
            f' {_fmt(tip - direction * 10)},{_fmt(cy + 5)}" fill="black"/>'
        )
    for e in line.equilibria:
        cx, cy = canvas.px(e.x), canvas.py(y_mid)
        common = f'cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="5.00" stroke="black" stroke-width="1.2"'
        fill = {"stable": "black", "unstable": "white", "degenerate": "gray"}[str(e.stability)]
        canvas.add(
            f'<g class="equilibrium" data-class="{e.stability}">'
            f'<circle {common} fill="{fill}"/></g>'
        )
    return canvas.document()
