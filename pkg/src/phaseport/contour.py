"""Zero-level curve extraction on a lattice (marching squares)."""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = ["zero_curves"]

# cell corners: c0 bottom-left, c1 bottom-right, c2 top-right, c3 top-left
# cell edges:  B (c0-c1), R (c1-c2), T (c3-c2), L (c0-c3)
_SEGMENTS = {
    0: [], 15: [],
    1: [("L", "B")], 14: [("L", "B")],
    2: [("B", "R")], 13: [("B", "R")],
    3: [("L", "R")], 12: [("L", "R")],
    4: [("T", "R")], 11: [("T", "R")],
    6: [("B", "T")], 9: [("B", "T")],
    7: [("L", "T")], 8: [("L", "T")],
}


def _edge_endpoints(i: int, j: int, edge: str):
    # returns lattice indices of the edge ends and a hashable edge id
    if edge == "B":
        return (i, j), (i + 1, j), ("h", i, j)
    if edge == "T":
        return (i, j + 1), (i + 1, j + 1), ("h", i, j + 1)
    if edge == "L":
        return (i, j), (i, j + 1), ("v", i, j)
    return (i + 1, j), (i + 1, j + 1), ("v", i + 1, j)


def zero_curves(
    fn: Callable[[float, float], float],
    xs: np.ndarray,
    ys: np.ndarray,
    values: np.ndarray,
    refine_tol: float,
) -> list[list[tuple[float, float]]]:
    """Polylines approximating {f = 0} on the lattice ``xs`` x ``ys``.

    ``values[j, i]`` must equal ``fn(xs[i], ys[j])``.  Crossing vertices are
    found by linear interpolation along cell edges and polished by bisection
    until |f| <= refine_tol.  Lattice edges whose endpoints are both
    numerically zero (curves lying exactly on grid lines, e.g. along a
    domain boundary) are emitted directly.  The ambiguous saddle cells are
    resolved with the sign of f at the cell center.
    """
    scale = max(1.0, float(np.max(np.abs(values))))
    zero_tol = 1e-12 * scale
    nx, ny = len(xs), len(ys)

    def near_zero(v: float) -> bool:
        return abs(v) <= zero_tol

    def positive(v: float) -> bool:
        return v > zero_tol or near_zero(v)

    point_cache: dict[tuple, tuple[float, float]] = {}

    def crossing(i: int, j: int, edge: str):
        (ia, ja), (ib, jb), eid = _edge_endpoints(i, j, edge)
        if eid in point_cache:
            return eid, point_cache[eid]
        va, vb = values[ja, ia], values[jb, ib]
        pa = (float(xs[ia]), float(ys[ja]))
        pb = (float(xs[ib]), float(ys[jb]))
        if near_zero(va):
            pt = pa
        elif near_zero(vb):
            pt = pb
        else:
            pt = _bisect_edge(fn, pa, va, pb, vb, refine_tol)
        point_cache[eid] = pt
        return eid, pt

    segments: list[tuple[tuple, tuple, tuple[float, float], tuple[float, float]]] = []

    # curve pieces lying exactly on lattice edges
    for j in range(ny):
        for i in range(nx - 1):
            if near_zero(values[j, i]) and near_zero(values[j, i + 1]):
                segments.append((("n", i, j), ("n", i + 1, j),
                                 (float(xs[i]), float(ys[j])), (float(xs[i + 1]), float(ys[j]))))
    for i in range(nx):
        for j in range(ny - 1):
            if near_zero(values[j, i]) and near_zero(values[j + 1, i]):
                segments.append((("n", i, j), ("n", i, j + 1),
                                 (float(xs[i]), float(ys[j])), (float(xs[i]), float(ys[j + 1]))))

    for j in range(ny - 1):
        for i in range(nx - 1):
            corners = (values[j, i], values[j, i + 1], values[j + 1, i + 1], values[j + 1, i])
            case = sum(1 << k for k, v in enumerate(corners) if positive(v))
            if case in (5, 10):
                center = fn(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))
                if case == 5:
                    pairs = [("B", "R"), ("L", "T")] if positive(center) else [("L", "B"), ("T", "R")]
                else:
                    pairs = [("L", "B"), ("T", "R")] if positive(center) else [("B", "R"), ("L", "T")]
            else:
                pairs = _SEGMENTS[case]
            for ea, eb in pairs:
                ida, pta = crossing(i, j, ea)
                idb, ptb = crossing(i, j, eb)
                if ida != idb:
                    segments.append((ida, idb, pta, ptb))

    return _chain(segments)


def _bisect_edge(fn, pa, va, pb, vb, tol, max_iter: int = 60):
    """Zero of f on the straight segment pa-pb, to |f| <= tol."""
    if va > 0 and vb > 0 or va < 0 and vb < 0:
        # no sign change (can happen only via the zero window); midpoint
        return (0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]))
    t = va / (va - vb)
    lo, flo = 0.0, va
    hi = 1.0
    for _ in range(max_iter):
        pt = (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))
        fv = fn(*pt)
        if abs(fv) <= tol:
            return pt
        if (fv > 0) == (flo > 0):
            lo, flo = t, fv
        else:
            hi = t
        t = 0.5 * (lo + hi)
    return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))


def _chain(segments) -> list[list[tuple[float, float]]]:
    """Join shared-endpoint segments into maximal polylines."""
    if not segments:
        return []
    adj: dict[tuple, list[int]] = {}
    for idx, (ida, idb, _, _) in enumerate(segments):
        adj.setdefault(ida, []).append(idx)
        adj.setdefault(idb, []).append(idx)

    used = [False] * len(segments)
    polylines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        ida, idb, pta, ptb = segments[start]
        used[start] = True
        chain_ids = [ida, idb]
        chain_pts = [pta, ptb]
        # extend forward then backward
        for end in (1, 0):
            while True:
                node = chain_ids[-1] if end else chain_ids[0]
                nxt = next((k for k in adj.get(node, ()) if not used[k]), None)
                if nxt is None:
                    break
                used[nxt] = True
                na, nb, pa, pb = segments[nxt]
                other_id, other_pt = (nb, pb) if na == node else (na, pa)
                if end:
                    chain_ids.append(other_id)
                    chain_pts.append(other_pt)
                else:
                    chain_ids.insert(0, other_id)
                    chain_pts.insert(0, other_pt)
        polylines.append(chain_pts)
    return polylines
