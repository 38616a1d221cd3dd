"""Nonlinear planar systems: equilibria, Jacobians, classification, null-clines."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import expr
from .algebra2 import EigenSystem, Mat2, SingularMatrixError, cramer_solve, eigenvectors
from .integrate import IntegratorOptions, Trajectory, integrate
from .contour import zero_curves
from .linsys import Classification, classify_linear

__all__ = [
    "Model2D", "EquilibriumReport", "SignMat2", "PartialClass",
    "NullCline", "NullClineSet", "FieldSample", "VectorField",
    "NullClineCrossingError", "NotAnEquilibriumError",
    "find_equilibria_2d", "jacobian_at", "classify_equilibrium_2d",
    "derive_sign_matrix", "classify_from_signs",
    "extract_nullclines", "sample_vector_field", "integrate_trajectory",
]


class NullClineCrossingError(ValueError):
    """A sign probe stepped across a null-cline; retry with smaller h."""


class NotAnEquilibriumError(ValueError):
    pass


@dataclass
class Model2D:
    """dx/dt = f(x, y), dy/dt = g(x, y) on a rectangular domain."""
    f: expr.Expr
    g: expr.Expr
    x_name: str
    y_name: str
    params: dict[str, float]
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError("degenerate analysis domain")
        allowed = {self.x_name, self.y_name} | set(self.params)
        for label, e in (("f", self.f), ("g", self.g)):
            extra = expr.identifiers(e) - allowed
            if extra:
                raise expr.UnboundIdentifierError(sorted(extra)[0])

    # -- compiled fast paths -------------------------------------------------

    def _compiled(self, key: str, e: expr.Expr):
        if key not in self._cache:
            self._cache[key] = expr.compile_fn(e, (self.x_name, self.y_name), self.params)
        return self._cache[key]

    def fn(self):
        return self._compiled("f", self.f)

    def gn(self):
        return self._compiled("g", self.g)

    def partials(self):
        """Compiled (df/dx, df/dy, dg/dx, dg/dy)."""
        if "partials" not in self._cache:
            asts = self.partial_asts()
            self._cache["partials"] = tuple(
                expr.compile_fn(a, (self.x_name, self.y_name), self.params) for a in asts
            )
        return self._cache["partials"]

    def partial_asts(self) -> tuple[expr.Expr, expr.Expr, expr.Expr, expr.Expr]:
        if "partial_asts" not in self._cache:
            self._cache["partial_asts"] = (
                expr.differentiate(self.f, self.x_name),
                expr.differentiate(self.f, self.y_name),
                expr.differentiate(self.g, self.x_name),
                expr.differentiate(self.g, self.y_name),
            )
        return self._cache["partial_asts"]

    # -- geometry ------------------------------------------------------------

    @property
    def diagonal(self) -> float:
        return math.hypot(self.x_hi - self.x_lo, self.y_hi - self.y_lo)

    def in_domain(self, x: float, y: float) -> bool:
        return self.x_lo <= x <= self.x_hi and self.y_lo <= y <= self.y_hi

    def with_param(self, name: str, value: float) -> "Model2D":
        if name not in self.params:
            raise KeyError(f"parameter {name!r} is not bound in the model")
        params = dict(self.params)
        params[name] = float(value)
        return Model2D(self.f, self.g, self.x_name, self.y_name, params,
                       self.x_lo, self.x_hi, self.y_lo, self.y_hi, self.name)

    def lattice(self, grid: int):
        """(xs, ys, f values, g values) on a (grid+1)^2 lattice; cached."""
        key = ("lattice", grid)
        if key not in self._cache:
            xs = np.linspace(self.x_lo, self.x_hi, grid + 1)
            ys = np.linspace(self.y_lo, self.y_hi, grid + 1)
            fv = np.empty((grid + 1, grid + 1))
            gv = np.empty((grid + 1, grid + 1))
            fn, gn = self.fn(), self.gn()
            for j, y in enumerate(ys):
                for i, x in enumerate(xs):
                    try:
                        fv[j, i] = fn(float(x), float(y))
                        gv[j, i] = gn(float(x), float(y))
                    except (ValueError, ZeroDivisionError, OverflowError) as exc:
                        raise expr.DomainError(
                            f"evaluating the model at ({x!r}, {y!r}) ({exc})", x
                        ) from exc
            self._cache[key] = (xs, ys, fv, gv)
        return self._cache[key]

    def scale(self, grid: int = 64) -> float:
        key = ("scale", grid)
        if key not in self._cache:
            _, _, fv, gv = self.lattice(grid)
            self._cache[key] = max(1.0, float(np.max(np.abs(fv))), float(np.max(np.abs(gv))))
        return self._cache[key]


@dataclass(frozen=True)
class EquilibriumReport:
    x: float
    y: float
    jacobian: Mat2
    det: float
    tr: float
    discriminant: float
    eigen: EigenSystem
    classification: Classification


# ---------------------------------------------------------------------------
# Equilibrium search


def _newton_polish(m: Model2D, x: float, y: float, tol: float, max_iter: int = 50):
    """2D Newton with a damped-gradient fallback on singular Jacobians."""
    fn, gn = m.fn(), m.gn()
    dfx, dfy, dgx, dgy = m.partials()

    def residual(x, y):
        try:
            return fn(x, y), gn(x, y)
        except (ValueError, ZeroDivisionError, OverflowError):
            return math.nan, math.nan

    for _ in range(max_iter):
        fv, gv = residual(x, y)
        if not (math.isfinite(fv) and math.isfinite(gv)):
            return None
        if max(abs(fv), abs(gv)) <= tol:
            return x, y
        try:
            jac = Mat2(dfx(x, y), dfy(x, y), dgx(x, y), dgy(x, y))
        except (ValueError, ZeroDivisionError, OverflowError):
            return None
        try:
            dx, dy = cramer_solve(jac, (fv, gv))
            x, y = x - dx, y - dy
            continue
        except SingularMatrixError:
            pass
        # descend on |F|^2 along -J^T F
        gx = jac.a * fv + jac.c * gv
        gy = jac.b * fv + jac.d * gv
        gnorm = math.hypot(gx, gy)
        if gnorm == 0.0:
            return None
        alpha = 1.0
        f2 = fv * fv + gv * gv
        for _ in range(30):
            xn, yn = x - alpha * gx, y - alpha * gy
            fn2, gn2 = residual(xn, yn)
            if math.isfinite(fn2) and math.isfinite(gn2) and fn2 * fn2 + gn2 * gn2 < f2:
                x, y = xn, yn
                break
            alpha *= 0.5
        else:
            return None
    fv, gv = residual(x, y)
    if math.isfinite(fv) and math.isfinite(gv) and max(abs(fv), abs(gv)) <= tol:
        return x, y
    return None


def _segment_intersection(p1, p2, p3, p4):
    """Intersection point of segments p1-p2 and p3-p4, or None."""
    d1x, d1y = p2[0] - p1[0], p2[1] - p1[1]
    d2x, d2y = p4[0] - p3[0], p4[1] - p3[1]
    denom = d1x * d2y - d1y * d2x
    if denom == 0.0:
        return None
    t = ((p3[0] - p1[0]) * d2y - (p3[1] - p1[1]) * d2x) / denom
    u = ((p3[0] - p1[0]) * d1y - (p3[1] - p1[1]) * d1x) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return (p1[0] + t * d1x, p1[1] + t * d1y)
    return None


def find_equilibria_2d(m: Model2D, grid: int = 64) -> list[tuple[float, float]]:
    """Locations where f and g vanish simultaneously, sorted by (x, y).

    Seeds come from lattice cells where both functions change sign and from
    pairwise intersections of x- and y-null-cline polylines; each seed is
    polished by Newton (symbolic Jacobian, damped-gradient fallback) to
    max(|f|, |g|) <= 1e-10 * scale.  Non-convergent seeds are dropped;
    duplicates within 1e-6 of the domain diagonal are merged.
    """
    xs, ys, fv, gv = m.lattice(grid)
    scale = m.scale(grid)
    ztol = 1e-12 * scale

    def mixed(vals) -> bool:
        return min(vals) <= ztol and max(vals) >= -ztol

    seeds = []
    for j in range(grid):
        for i in range(grid):
            fc = (fv[j, i], fv[j, i + 1], fv[j + 1, i + 1], fv[j + 1, i])
            gc = (gv[j, i], gv[j, i + 1], gv[j + 1, i + 1], gv[j + 1, i])
            if mixed(fc) and mixed(gc):
                seeds.append((0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])))

    ncs = extract_nullclines(m, grid)
    xseg = [seg for c in ncs.x_clines() for seg in zip(c.points[:-1], c.points[1:])]
    yseg = [seg for c in ncs.y_clines() for seg in zip(c.points[:-1], c.points[1:])]
    for a1, a2 in xseg:
        for b1, b2 in yseg:
            pt = _segment_intersection(a1, a2, b1, b2)
            if pt is not None:
                seeds.append(pt)

    tol = 1e-10 * scale
    margin = 1e-9 * m.diagonal
    dedupe = 1e-6 * m.diagonal
    found: list[tuple[float, float]] = []
    for sx, sy in seeds:
        res = _newton_polish(m, sx, sy, tol)
        if res is None:
            continue
        x, y = res
        if not (m.x_lo - margin <= x <= m.x_hi + margin
                and m.y_lo - margin <= y <= m.y_hi + margin):
            continue
        if all(math.hypot(x - px, y - py) > dedupe for px, py in found):
            found.append((float(x), float(y)))
    return sorted(found)


def jacobian_at(m: Model2D, p: tuple[float, float]) -> Mat2:
    """Matrix of symbolic partial derivatives evaluated at ``p``."""
    env = dict(m.params)
    env[m.x_name], env[m.y_name] = p
    dfx, dfy, dgx, dgy = m.partial_asts()
    return Mat2(
        expr.evaluate(dfx, env), expr.evaluate(dfy, env),
        expr.evaluate(dgx, env), expr.evaluate(dgy, env),
    )


def classify_equilibrium_2d(m: Model2D, p: tuple[float, float]) -> EquilibriumReport:
    """Full local report at an equilibrium: Jacobian, det/tr/D, eigen data, class."""
    env = dict(m.params)
    env[m.x_name], env[m.y_name] = p
    residual = max(abs(expr.evaluate(m.f, env)), abs(expr.evaluate(m.g, env)))
    if residual > 1e-8 * m.scale():
        raise NotAnEquilibriumError(
            f"point {p!r} has residual {residual!r}; not an equilibrium"
        )
    jac = jacobian_at(m, p)
    det, tr = jac.det, jac.tr
    return EquilibriumReport(
        x=float(p[0]), y=float(p[1]), jacobian=jac,
        det=det, tr=tr, discriminant=tr * tr - 4.0 * det,
        eigen=eigenvectors(jac),
        classification=classify_linear(jac),
    )


# ---------------------------------------------------------------------------
# Sign-only (graphical) Jacobian


@dataclass(frozen=True)
class SignMat2:
    """Signs (-1, 0, +1) of the four Jacobian entries read off the vector field."""
    dfdx: int
    dfdy: int
    dgdx: int
    dgdy: int

    def rows(self):
        return ((self.dfdx, self.dfdy), (self.dgdx, self.dgdy))


class PartialClass(enum.Enum):
    SADDLE = "saddle"
    STABLE_NODE = "stable_node"
    UNSTABLE_NODE = "unstable_node"
    STABLE_NODE_OR_SPIRAL = "stable_node_or_spiral"
    UNSTABLE_NODE_OR_SPIRAL = "unstable_node_or_spiral"
    CENTER = "center"
    UNSTABLE_UNKNOWN = "unstable_indeterminate"
    INDETERMINATE = "indeterminate"

    def __str__(self) -> str:
        return self.value


def derive_sign_matrix(m: Model2D, eq: tuple[float, float], h: float) -> SignMat2:
    """Signs of f and g just right of and just above the equilibrium.

    Probe points are (x*+h, y*) and (x*, y*+h); they must stay inside the
    domain and the probe segments must not cross a null-cline (verified by
    sign consistency of f and g at 8 subsamples along each segment).
    Magnitudes below 1e-9 of the probe-set scale count as exact zeros
    (horizontal/vertical null-clines through the equilibrium).
    """
    x0, y0 = eq
    if not (m.in_domain(x0 + h, y0) and m.in_domain(x0, y0 + h)):
        raise ValueError(f"probe points leave the domain for h={h!r}")
    fn, gn = m.fn(), m.gn()
    fx, gx = fn(x0 + h, y0), gn(x0 + h, y0)
    fy, gy = fn(x0, y0 + h), gn(x0, y0 + h)
    probe_scale = max(abs(v) for v in (fx, gx, fy, gy))
    ztol = 1e-9 * max(probe_scale, 1e-300)

    def sgn(v: float) -> int:
        return 0 if abs(v) <= ztol else (1 if v > 0 else -1)

    for axis, (px, py) in (("x", (x0 + h, y0)), ("y", (x0, y0 + h))):
        for fun in (fn, gn):
            end_sign = sgn(fun(px, py))
            for k in range(1, 9):
                t = k / 9.0
                v = fun(x0 + t * (px - x0), y0 + t * (py - y0))
                s = sgn(v)
                if s != 0 and end_sign != 0 and s != end_sign:
                    raise NullClineCrossingError(
                        f"probe along +{axis} crosses a null-cline; use a smaller h"
                    )

    return SignMat2(sgn(fx), sgn(fy), sgn(gx), sgn(gy))


def _sign_mul(a: int, b: int) -> int:
    return a * b


def _sign_add(a: int, b: int) -> int | None:
    if a == 0:
        return b
    if b == 0 or a == b:
        return a
    return None  # opposite signs: magnitude decides, unknown here


def _sign_sub(a: int, b: int) -> int | None:
    return _sign_add(a, -b)


def classify_from_signs(s: SignMat2) -> PartialClass:
    """Equilibrium type from entry signs alone, where determinable.

    det = ad - cb and tr = a + d are formed in sign arithmetic (None when
    the sign depends on magnitudes).  With det > 0 known, the off-diagonal
    product bc is never positive, and D = (a-d)^2 + 4bc, so bc = 0 forces a
    node while bc < 0 leaves node-or-spiral open.  An unknown determinant
    with tr > 0 is unstable but could still be a saddle.
    """
    a, b = s.dfdx, s.dfdy
    c, d = s.dgdx, s.dgdy
    det = _sign_sub(_sign_mul(a, d), _sign_mul(b, c))
    tr = _sign_add(a, d)
    bc = _sign_mul(b, c)

    if det == -1:
        return PartialClass.SADDLE
    if det == 1:
        if tr == -1:
            return PartialClass.STABLE_NODE if bc == 0 else PartialClass.STABLE_NODE_OR_SPIRAL
        if tr == 1:
            return PartialClass.UNSTABLE_NODE if bc == 0 else PartialClass.UNSTABLE_NODE_OR_SPIRAL
        if tr == 0:
            return PartialClass.CENTER
        return PartialClass.INDETERMINATE
    if det is None and tr == 1:
        return PartialClass.UNSTABLE_UNKNOWN
    return PartialClass.INDETERMINATE


# ---------------------------------------------------------------------------
# Null-clines and the vector field


@dataclass(frozen=True)
class NullCline:
    kind: str  # "x" (f = 0) or "y" (g = 0)
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class NullClineSet:
    clines: tuple[NullCline, ...]

    def x_clines(self):
        return [c for c in self.clines if c.kind == "x"]

    def y_clines(self):
        return [c for c in self.clines if c.kind == "y"]


def extract_nullclines(m: Model2D, grid: int = 64) -> NullClineSet:
    """Zero-level polylines of f (x-clines) and g (y-clines).

    Marching squares on a (grid+1)^2 lattice with vertex refinement to
    |value| <= 1e-3 of the per-function lattice scale.
    """
    if grid < 8:
        raise ValueError("grid must be >= 8")
    xs, ys, fv, gv = m.lattice(grid)
    out = []
    for kind, vals, fun in (("x", fv, m.fn()), ("y", gv, m.gn())):
        tol = 1e-3 * max(1.0, float(np.max(np.abs(vals))))
        for line in zero_curves(fun, xs, ys, vals, tol):
            out.append(NullCline(kind, tuple(line)))
    return NullClineSet(tuple(out))


@dataclass(frozen=True)
class FieldSample:
    x: float
    y: float
    fx: float
    fy: float
    case: tuple[int, int]  # sign pair (sgn dx/dt, sgn dy/dt); (0, 0) at equilibria


@dataclass(frozen=True)
class VectorField:
    samples: tuple[FieldSample, ...]
    errors: tuple[tuple[float, float, str], ...]  # (x, y, message) for skipped points


def sample_vector_field(m: Model2D, grid: int = 16) -> VectorField:
    """(f, g) and its sign quadrant on a (grid+1)^2 lattice of points."""
    if grid < 2:
        raise ValueError("grid must be >= 2")
    xs = np.linspace(m.x_lo, m.x_hi, grid + 1)
    ys = np.linspace(m.y_lo, m.y_hi, grid + 1)
    fn, gn = m.fn(), m.gn()
    samples = []
    errors = []
    finite = []
    for y in ys:
        for x in xs:
            try:
                finite.append((float(x), float(y), fn(float(x), float(y)), gn(float(x), float(y))))
            except (ValueError, ZeroDivisionError, OverflowError) as exc:
                errors.append((float(x), float(y), str(exc)))
    scale = max(1.0, max((max(abs(fx), abs(fy)) for _, _, fx, fy in finite), default=1.0))
    ztol = 1e-9 * scale
    for x, y, fx, fy in finite:
        case = (
            0 if abs(fx) <= ztol else (1 if fx > 0 else -1),
            0 if abs(fy) <= ztol else (1 if fy > 0 else -1),
        )
        samples.append(FieldSample(x, y, fx, fy, case))
    return VectorField(tuple(samples), tuple(errors))


# ---------------------------------------------------------------------------
# Trajectories


def integrate_trajectory(
    m: Model2D,
    start: tuple[float, float],
    t_end: float,
    options: IntegratorOptions | None = None,
) -> Trajectory:
    """Adaptive Runge-Kutta orbit from ``start`` until t_end or domain exit."""
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    if not m.in_domain(*start):
        raise ValueError(f"start point {start!r} is outside the domain")
    fn, gn = m.fn(), m.gn()

    def rhs(t, state):
        x, y = float(state[0]), float(state[1])
        try:
            return np.array([fn(x, y), gn(x, y)])
        except (ValueError, ZeroDivisionError, OverflowError):
            return np.array([math.nan, math.nan])

    return integrate(
        rhs, np.asarray(start, dtype=float), t_end,
        options=options,
        in_domain=lambda s: m.in_domain(s[0], s[1]),
    )
