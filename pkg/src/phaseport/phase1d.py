"""Qualitative analysis of one autonomous equation dx/dt = f(x)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import expr
from .algebra2 import Mat2, SingularMatrixError, cramer_solve

__all__ = [
    "Stability1D", "Model1D", "Equilibrium1D", "PhaseLine", "AffineSolution1D",
    "find_equilibria_1d", "classify_equilibrium_1d", "build_phase_line",
    "affine_solution_1d", "fold_scan_1d",
]


class Stability1D(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    DEGENERATE = "degenerate"

    def __str__(self) -> str:
        return self.value


@dataclass
class Model1D:
    """dx/dt = f(x) with bound parameters, studied on [lo, hi]."""
    f: expr.Expr
    var: str
    params: dict[str, float]
    lo: float
    hi: float
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty analysis interval [{self.lo}, {self.hi}]")
        extra = expr.identifiers(self.f) - {self.var} - set(self.params)
        if extra:
            raise expr.UnboundIdentifierError(sorted(extra)[0])

    def fn(self):
        if "fn" not in self._cache:
            self._cache["fn"] = expr.compile_fn(self.f, (self.var,), self.params)
        return self._cache["fn"]

    def dfn(self):
        if "dfn" not in self._cache:
            d = expr.differentiate(self.f, self.var)
            self._cache["dfn"] = expr.compile_fn(d, (self.var,), self.params)
        return self._cache["dfn"]

    def with_param(self, name: str, value: float) -> "Model1D":
        if name not in self.params:
            raise KeyError(f"parameter {name!r} is not bound in the model")
        params = dict(self.params)
        params[name] = float(value)
        return Model1D(self.f, self.var, params, self.lo, self.hi, self.name)

    def scale(self) -> float:
        if "scale" not in self._cache:
            xs = np.linspace(self.lo, self.hi, 257)
            fn = self.fn()
            self._cache["scale"] = max(1.0, max(abs(fn(float(x))) for x in xs))
        return self._cache["scale"]

    def slope_scale(self) -> float:
        if "slope_scale" not in self._cache:
            xs = np.linspace(self.lo, self.hi, 257)
            dfn = self.dfn()
            self._cache["slope_scale"] = max(1.0, max(abs(dfn(float(x))) for x in xs))
        return self._cache["slope_scale"]


@dataclass(frozen=True)
class Equilibrium1D:
    x: float
    stability: Stability1D
    fprime: float


@dataclass(frozen=True)
class PhaseLine:
    """Equilibria, flow arrows, and basins on the analysis interval.

    ``arrows`` holds ((a, b), direction) with direction +1 (rightward flow)
    or -1; ``basins`` maps each attractor to its open interval; ``escapes``
    lists (side, interval) segments whose flow leaves through an endpoint.
    """
    equilibria: tuple[Equilibrium1D, ...]
    arrows: tuple[tuple[tuple[float, float], int], ...]
    basins: tuple[tuple[float, tuple[float, float]], ...]
    escapes: tuple[tuple[str, tuple[float, float]], ...]


def _call(fn, x: float) -> float:
    """Evaluate a compiled scalar function, surfacing runtime faults as DomainError."""
    try:
        return fn(float(x))
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise expr.DomainError(f"evaluating inside the interval ({exc})", float(x)) from exc


def _evaluate_grid(m: Model1D, cells: int):
    xs = np.linspace(m.lo, m.hi, cells + 1)
    fn = m.fn()
    vals = np.empty(cells + 1)
    for i, x in enumerate(xs):
        vals[i] = _call(fn, x)
    return xs, vals


def _polish_root(m: Model1D, lo: float, hi: float, tol: float) -> float:
    """Bisection to floating-point x-resolution, then a Newton cleanup.

    Bisection runs on signs alone (no |f| early exit) so that clusters of
    nearly-tangent roots, where f is tiny across a whole neighbourhood, are
    still located to full precision.
    """
    fn, dfn = m.fn(), m.dfn()
    flo = fn(lo)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if hi - lo < 4e-16 * max(1.0, abs(mid)):
            break
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(8):
        fx = fn(x)
        if abs(fx) <= tol:
            break
        d = dfn(x)
        if d == 0.0:
            break
        step = fx / d
        if not math.isfinite(step):
            break
        x -= step
    return x


def _scan_roots(m: Model1D, grid: int):
    """Bracketed sign changes plus exact lattice zeros on a ``grid``-cell scan."""
    xs, vals = _evaluate_grid(m, grid)
    signs = [0 if v == 0.0 else (1 if v > 0.0 else -1) for v in vals]
    zeros = []
    i = 0
    while i <= grid:
        if signs[i] == 0:
            j = i
            while j < grid and signs[j + 1] == 0:
                j += 1
            zeros.append(float(xs[(i + j) // 2]))
            i = j + 1
        else:
            i += 1
    brackets = [i for i in range(grid) if signs[i] * signs[i + 1] < 0]
    return xs, brackets, zeros


def find_equilibria_1d(m: Model1D, grid: int = 1024) -> list[Equilibrium1D]:
    """All simple roots of f on [lo, hi], classified.

    Sign-change scan on ``grid`` cells, bisection plus Newton polish to
    |f| <= 1e-10 * scale, duplicates within 1e-8 * (hi - lo) merged.  Lattice
    points where f is exactly zero count as roots directly.  When two
    adjacent cells both bracket roots the scan is retried once at 4x
    resolution (close roots, e.g. near a fold, hide further structure).
    """
    xs, brackets, zeros = _scan_roots(m, grid)
    if any(b + 1 in brackets for b in brackets):
        xs, brackets, zeros = _scan_roots(m, grid * 4)

    tol = 1e-10 * m.scale()
    roots = [float(_polish_root(m, xs[i], xs[i + 1], tol)) for i in brackets]
    roots += zeros

    merged: list[float] = []
    for r in sorted(roots):
        if not merged or r - merged[-1] > 1e-8 * (m.hi - m.lo):
            merged.append(r)
    return [classify_equilibrium_1d(m, r) for r in merged]


def classify_equilibrium_1d(m: Model1D, x_star: float) -> Equilibrium1D:
    """Stability from the sign of f'(x*), with flow probing on the |f'| ~ 0 fence."""
    x_star = float(x_star)
    fprime = _call(m.dfn(), x_star)
    tol = 1e-9 * m.slope_scale()
    if fprime < -tol:
        return Equilibrium1D(x_star, Stability1D.STABLE, fprime)
    if fprime > tol:
        return Equilibrium1D(x_star, Stability1D.UNSTABLE, fprime)
    h = 1e-4 * (m.hi - m.lo)
    fn = m.fn()
    left, right = _call(fn, x_star - h), _call(fn, x_star + h)
    if left > 0.0 > right:
        return Equilibrium1D(x_star, Stability1D.STABLE, fprime)
    if left < 0.0 < right:
        return Equilibrium1D(x_star, Stability1D.UNSTABLE, fprime)
    return Equilibrium1D(x_star, Stability1D.DEGENERATE, fprime)


def build_phase_line(m: Model1D) -> PhaseLine:
    """Arrows from the sign of f between equilibria; basins for each attractor.

    Interval endpoints are absorbing: outward flow at a boundary with no
    equilibrium beyond it is reported as an escape segment.  Degenerate
    equilibria block the flow (f vanishes there) but get no basin.
    """
    eqs = find_equilibria_1d(m)
    bounds = [m.lo] + [e.x for e in eqs] + [m.hi]
    fn = m.fn()

    arrows = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a <= 0.0:
            continue
        v = _call(fn, 0.5 * (a + b))
        if v != 0.0:
            arrows.append(((a, b), 1 if v > 0 else -1))

    basins = []
    for k, e in enumerate(eqs):
        if e.stability is not Stability1D.STABLE:
            continue
        left = eqs[k - 1].x if k > 0 else m.lo
        right = eqs[k + 1].x if k + 1 < len(eqs) else m.hi
        basins.append((e.x, (left, right)))

    escapes = []
    if eqs:
        first, last = eqs[0].x, eqs[-1].x
        if first > m.lo and _call(fn, 0.5 * (m.lo + first)) < 0.0:
            escapes.append(("left", (m.lo, first)))
        if last < m.hi and _call(fn, 0.5 * (last + m.hi)) > 0.0:
            escapes.append(("right", (last, m.hi)))
    else:
        v = _call(fn, 0.5 * (m.lo + m.hi))
        if v > 0.0:
            escapes.append(("right", (m.lo, m.hi)))
        elif v < 0.0:
            escapes.append(("left", (m.lo, m.hi)))

    return PhaseLine(tuple(eqs), tuple(arrows), tuple(basins), tuple(escapes))


# ---------------------------------------------------------------------------
# Closed-form solutions of dx/dt = a + b*x


@dataclass(frozen=True)
class AffineSolution1D:
    """x(t) = x_inf + amplitude * e^(rate*t), or x0 + rate*t when b = 0.

    ``tau`` is the characteristic time 1/|b| (undefined for b = 0).
    """
    kind: str  # "exponential" | "linear"
    x0: float
    rate: float
    x_inf: float | None = None
    amplitude: float | None = None
    tau: float | None = None

    def __call__(self, t: float) -> float:
        if self.kind == "linear":
            return self.x0 + self.rate * t
        return self.x_inf + self.amplitude * math.exp(self.rate * t)

    def time_to_reach(self, x_target: float) -> float | None:
        """Solve x(t) = x_target; None when the level is never attained."""
        if self.kind == "linear":
            if self.rate == 0.0:
                return 0.0 if x_target == self.x0 else None
            return (x_target - self.x0) / self.rate
        if self.amplitude == 0.0:
            return 0.0 if x_target == self.x_inf else None
        ratio = (x_target - self.x_inf) / self.amplitude
        if ratio <= 0.0:
            return None
        return math.log(ratio) / self.rate


def affine_solution_1d(a: float, b: float, x0: float) -> AffineSolution1D:
    """Exact solution of dx/dt = a + b*x with x(0) = x0."""
    if b == 0.0:
        return AffineSolution1D("linear", x0=x0, rate=a)
    x_inf = -a / b
    return AffineSolution1D(
        "exponential", x0=x0, rate=b,
        x_inf=x_inf, amplitude=x0 - x_inf, tau=1.0 / abs(b),
    )


# ---------------------------------------------------------------------------
# Fold (saddle-node) detection by parameter sweep


def _fold_polish(m: Model1D, param: str, p_mid: float, x_seed: float) -> float | None:
    """Newton on the tangency system f = 0, df/dx = 0 in the unknowns (x, p)."""
    fx_e = expr.differentiate(m.f, m.var)
    f_fn = expr.compile_fn(m.f, (m.var, param), m.params)
    fx_fn = expr.compile_fn(fx_e, (m.var, param), m.params)
    fxx_fn = expr.compile_fn(expr.differentiate(fx_e, m.var), (m.var, param), m.params)
    fp_fn = expr.compile_fn(expr.differentiate(m.f, param), (m.var, param), m.params)
    fxp_fn = expr.compile_fn(expr.differentiate(fx_e, param), (m.var, param), m.params)

    x, p = x_seed, p_mid
    for _ in range(25):
        r = (f_fn(x, p), fx_fn(x, p))
        if max(abs(r[0]), abs(r[1])) <= 1e-13 * m.scale():
            return p
        jac = Mat2(fx_fn(x, p), fp_fn(x, p), fxx_fn(x, p), fxp_fn(x, p))
        try:
            dx, dp = cramer_solve(jac, r)
        except SingularMatrixError:
            return None
        x, p = x - dx, p - dp
        if not (math.isfinite(x) and math.isfinite(p)):
            return None
    return None


def fold_scan_1d(
    m: Model1D,
    param: str,
    p_range: tuple[float, float],
    steps: int,
) -> float | None:
    """Critical parameter value at which the equilibrium count changes.

    Sweeps ``steps`` values across ``p_range``, brackets the first count
    change, bisects to |dp| <= 1e-8 * range width, then polishes with Newton
    on the tangency condition (root and slope simultaneously zero).  Returns
    None when the count never changes.
    """
    if param not in m.params:
        raise KeyError(f"parameter {param!r} is not bound in the model")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    p_lo, p_hi = p_range
    width = p_hi - p_lo

    def count(p: float) -> int:
        return len(find_equilibria_1d(m.with_param(param, p)))

    ps = np.linspace(p_lo, p_hi, steps)
    counts = [count(p) for p in ps]
    bracket = next(
        ((ps[i], ps[i + 1]) for i in range(steps - 1) if counts[i] != counts[i + 1]),
        None,
    )
    if bracket is None:
        return None

    a, b = bracket
    ca = count(a)
    while b - a > 1e-8 * abs(width):
        mid = 0.5 * (a + b)
        if count(mid) == ca:
            a = mid
        else:
            b = mid
    crossing = float(0.5 * (a + b))

    # seed the tangency polish with the merging pair on the many-root side
    rich = m.with_param(param, a if count(a) >= count(b) else b)
    eqs = find_equilibria_1d(rich)
    if len(eqs) >= 2:
        gaps = [(eqs[i + 1].x - eqs[i].x, i) for i in range(len(eqs) - 1)]
        _, i = min(gaps)
        x_seed = 0.5 * (eqs[i].x + eqs[i + 1].x)
    elif eqs:
        x_seed = eqs[0].x
    else:
        return crossing
    polished = _fold_polish(m, param, crossing, x_seed)
    if polished is not None and min(p_lo, p_hi) <= polished <= max(p_lo, p_hi) \
            and abs(polished - crossing) <= 1e-3 * abs(width):
        return float(polished)
    return crossing
