"""Closed-form solutions and classification of 2x2 constant-coefficient systems."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .algebra2 import (
    COMPLEX_CONJUGATE, REAL_DOUBLE,
    Mat2, SingularMatrixError, cramer_solve, eigenvalues, eigenvectors,
)

__all__ = [
    "Classification", "LinearSolution", "IVPCoefficients", "DefectiveMatrixError",
    "general_solution", "solve_ivp", "eval_solution", "classify_linear",
]

_EXP_ARG_LIMIT = 700.0  # exp overflows just above this


class Classification(enum.Enum):
    SADDLE = "saddle"
    STABLE_NODE = "stable_node"
    UNSTABLE_NODE = "unstable_node"
    STABLE_SPIRAL = "stable_spiral"
    UNSTABLE_SPIRAL = "unstable_spiral"
    CENTER = "center"
    DEGENERATE = "degenerate"

    def __str__(self) -> str:  # the serialized wire name
        return self.value


class DefectiveMatrixError(ValueError):
    """Repeated eigenvalue with a one-dimensional eigenspace."""


@dataclass(frozen=True)
class LinearSolution:
    """General solution data for dX/dt = m X.

    Real eigenvalues: X = C1 v1 e^{lam1 t} + C2 v2 e^{lam2 t}.
    Complex pair alpha +- i beta (beta > 0) with eigenvector vr + i vi:
    the two real basis solutions are
        y1 = e^{alpha t} (vr cos(beta t) - vi sin(beta t))
        y2 = e^{alpha t} (vr sin(beta t) + vi cos(beta t))
    """
    matrix: Mat2
    kind: str  # "real" | "complex"
    lam1: float = 0.0
    lam2: float = 0.0
    v1: tuple[float, float] | None = None
    v2: tuple[float, float] | None = None
    alpha: float = 0.0
    beta: float = 0.0
    vr: tuple[float, float] | None = None
    vi: tuple[float, float] | None = None
    double_root: bool = False


@dataclass(frozen=True)
class IVPCoefficients:
    c1: float
    c2: float
    solution: LinearSolution
    init: tuple[float, float]


def general_solution(m: Mat2) -> LinearSolution:
    """Eigen-data for the general solution of dX/dt = m X.

    Double real roots reuse the single express eigenvector for both modes;
    such systems are representable here but rejected by :func:`solve_ivp`.
    """
    eig = eigenvectors(m)
    vals = eig.values
    if vals.kind == COMPLEX_CONJUGATE:
        return LinearSolution(
            matrix=m, kind="complex",
            alpha=vals.alpha, beta=vals.beta, vr=eig.vr, vi=eig.vi,
        )
    return LinearSolution(
        matrix=m, kind="real",
        lam1=vals.lam1, lam2=vals.lam2, v1=eig.v1, v2=eig.v2,
        double_root=vals.kind == REAL_DOUBLE,
    )


def solve_ivp(m: Mat2, init: tuple[float, float]) -> IVPCoefficients:
    """Constants C1, C2 such that the general solution passes through ``init`` at t=0.

    Real case: solve C1 v1 + C2 v2 = init.  Complex case: the basis solutions
    at t=0 are y1(0) = vr, y2(0) = vi, so solve against those.  Defective
    matrices (double eigenvalue, one eigen direction) are rejected.
    """
    sol = general_solution(m)
    if sol.kind == "complex":
        basis = Mat2(sol.vr[0], sol.vi[0], sol.vr[1], sol.vi[1])
    else:
        # scalar matrices carry the canonical basis and solve exactly; a
        # repeated eigenvalue with a 1D eigenspace makes this singular
        basis = Mat2(sol.v1[0], sol.v2[0], sol.v1[1], sol.v2[1])
    try:
        c1, c2 = cramer_solve(basis, init)
    except SingularMatrixError as exc:
        raise DefectiveMatrixError(
            "repeated eigenvalue with a single eigen direction; "
            "no pure-exponential solution through this initial point"
        ) from exc
    return IVPCoefficients(c1, c2, sol, (float(init[0]), float(init[1])))


def _checked_exp(lam: float, t: float) -> float:
    if abs(lam * t) > _EXP_ARG_LIMIT:
        raise OverflowError(f"exp argument {lam * t!r} exceeds +-{_EXP_ARG_LIMIT}")
    return math.exp(lam * t)


def eval_solution(ivp: IVPCoefficients, t: float) -> tuple[float, float]:
    """Closed-form state at time ``t``."""
    sol = ivp.solution
    if sol.kind == "real":
        e1 = _checked_exp(sol.lam1, t)
        e2 = _checked_exp(sol.lam2, t)
        return (
            ivp.c1 * sol.v1[0] * e1 + ivp.c2 * sol.v2[0] * e2,
            ivp.c1 * sol.v1[1] * e1 + ivp.c2 * sol.v2[1] * e2,
        )
    ea = _checked_exp(sol.alpha, t)
    cb, sb = math.cos(sol.beta * t), math.sin(sol.beta * t)
    y1 = (sol.vr[0] * cb - sol.vi[0] * sb, sol.vr[1] * cb - sol.vi[1] * sb)
    y2 = (sol.vr[0] * sb + sol.vi[0] * cb, sol.vr[1] * sb + sol.vi[1] * cb)
    return (
        ea * (ivp.c1 * y1[0] + ivp.c2 * y2[0]),
        ea * (ivp.c1 * y1[1] + ivp.c2 * y2[1]),
    )


def classify_linear(m: Mat2) -> Classification:
    """Determinant-trace classification of the equilibrium at the origin.

    det < 0 -> saddle; det > 0 splits on the discriminant D = tr^2 - 4 det
    (nodes for D >= 0, spirals for D < 0) with the trace sign giving
    stability; tr ~ 0 with det > 0 -> center; det ~ 0 -> degenerate.
    The zero windows use eps = 1e-9 * max(1, norm_inf^2).
    """
    eps = 1e-9 * max(1.0, m.norm_inf ** 2)
    det = m.det
    tr = m.tr
    if abs(det) <= eps:
        return Classification.DEGENERATE
    if det < 0.0:
        return Classification.SADDLE
    if abs(tr) <= eps:
        return Classification.CENTER
    disc = tr * tr - 4.0 * det
    if tr > 0.0:
        return Classification.UNSTABLE_NODE if disc >= 0.0 else Classification.UNSTABLE_SPIRAL
    return Classification.STABLE_NODE if disc >= 0.0 else Classification.STABLE_SPIRAL
