"""Complex scalars, quadratic roots, and closed-form 2x2 linear algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Complex", "Mat2", "RootPair", "EigenSystem", "SingularMatrixError",
    "quadratic_roots", "eigenvalues", "eigenvectors", "cramer_solve",
    "REAL_DISTINCT", "REAL_DOUBLE", "COMPLEX_CONJUGATE",
]

REAL_DISTINCT = "real_distinct"
REAL_DOUBLE = "real_double"
COMPLEX_CONJUGATE = "complex_conjugate"


class SingularMatrixError(ValueError):
    pass


@dataclass(frozen=True)
class Complex:
    """Complex scalar kept as an explicit (re, im) pair."""
    re: float
    im: float = 0.0

    def __add__(self, other: "Complex") -> "Complex":
        return Complex(self.re + other.re, self.im + other.im)

    def __mul__(self, other: "Complex") -> "Complex":
        return Complex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def conj(self) -> "Complex":
        return Complex(self.re, -self.im)

    def modulus(self) -> float:
        return math.hypot(self.re, self.im)

    def __truediv__(self, other: "Complex") -> "Complex":
        # multiply numerator and denominator by the conjugate of the denominator
        if other.re == 0.0 and other.im == 0.0:
            raise ZeroDivisionError("division by zero complex number")
        num = self * other.conj()
        den = other.re * other.re + other.im * other.im
        return Complex(num.re / den, num.im / den)


@dataclass(frozen=True)
class Mat2:
    """Real 2x2 matrix [[a, b], [c, d]], row-major."""
    a: float
    b: float
    c: float
    d: float

    @property
    def det(self) -> float:
        return self.a * self.d - self.c * self.b

    @property
    def tr(self) -> float:
        return self.a + self.d

    @property
    def norm_inf(self) -> float:
        return max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))

    def mul_vec(self, v: tuple[float, float]) -> tuple[float, float]:
        return (self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1])


@dataclass(frozen=True)
class RootPair:
    """Roots of a monic quadratic.

    kind REAL_DISTINCT: (lam1, lam2) with lam1 <= lam2;
    kind REAL_DOUBLE:   lam1 == lam2;
    kind COMPLEX_CONJUGATE: alpha +- i*beta stored with beta > 0.
    """
    kind: str
    lam1: float = 0.0
    lam2: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def as_complex_pair(self) -> tuple[Complex, Complex]:
        if self.kind == COMPLEX_CONJUGATE:
            return Complex(self.alpha, self.beta), Complex(self.alpha, -self.beta)
        return Complex(self.lam1), Complex(self.lam2)


def quadratic_roots(p: float, q: float) -> RootPair:
    """Roots of lambda^2 + p*lambda + q = 0 via the 'abc' formula.

    The discriminant D = p^2 - 4q decides the case; |D| below a relative
    1e-12 window collapses to a double root so the result is deterministic.
    """
    disc = p * p - 4.0 * q
    window = 1e-12 * max(1.0, p * p, abs(q))
    if abs(disc) <= window:
        return RootPair(REAL_DOUBLE, lam1=-p / 2.0, lam2=-p / 2.0)
    if disc > 0.0:
        s = math.sqrt(disc)
        # subtract-free form for the root nearest zero avoids cancellation
        if p >= 0.0:
            r1 = (-p - s) / 2.0
        else:
            r1 = (-p + s) / 2.0
        r2 = q / r1 if r1 != 0.0 else (-p - r1)
        lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
        return RootPair(REAL_DISTINCT, lam1=lo, lam2=hi)
    return RootPair(COMPLEX_CONJUGATE, alpha=-p / 2.0, beta=math.sqrt(-disc) / 2.0)


def eigenvalues(m: Mat2) -> RootPair:
    """Roots of the characteristic equation lambda^2 - tr*lambda + det = 0."""
    return quadratic_roots(-m.tr, m.det)


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues plus express-method eigenvectors.

    Real cases carry v1, v2 (not normalized; any nonzero scaling is equally
    valid).  The complex case carries the real and imaginary parts vr, vi of
    the eigenvector for alpha + i*beta.
    """
    values: RootPair
    v1: tuple[float, float] | None = None
    v2: tuple[float, float] | None = None
    vr: tuple[float, float] | None = None
    vi: tuple[float, float] | None = None


def _express_vector_real(m: Mat2, lam: float) -> tuple[float, float]:
    # primary formula (-b, a - lambda); fallback (d - lambda, -c) when it
    # degenerates to (numerically) zero
    v = (-m.b, m.a - lam)
    tol = 1e-12 * max(1.0, m.norm_inf)
    if max(abs(v[0]), abs(v[1])) > tol:
        return v
    v = (m.d - lam, -m.c)
    if max(abs(v[0]), abs(v[1])) > tol:
        return v
    raise ArithmeticError(
        "both eigenvector formulas vanished; inconsistent eigenpair"
    )


def _express_vector_complex(m: Mat2, alpha: float, beta: float
                            ) -> tuple[tuple[float, float], tuple[float, float]]:
    # (-b, a - alpha - i*beta) split into real and imaginary parts
    vr = (-m.b, m.a - alpha)
    vi = (0.0, -beta)
    tol = 1e-12 * max(1.0, m.norm_inf)
    if max(abs(vr[0]), abs(vr[1]), abs(vi[0]), abs(vi[1])) > tol:
        return vr, vi
    # fallback (d - alpha - i*beta, -c)
    vr = (m.d - alpha, -m.c)
    vi = (-beta, 0.0)
    if max(abs(vr[0]), abs(vr[1]), abs(vi[0]), abs(vi[1])) > tol:
        return vr, vi
    raise ArithmeticError("both eigenvector formulas vanished; inconsistent eigenpair")


def eigenvectors(m: Mat2, values: RootPair | None = None) -> EigenSystem:
    """Eigenvectors by the closed-form express method.

    ``values`` must be eigenvalues of ``m``; they are computed when omitted.
    Scalar multiples of the identity (where both express formulas vanish
    because every vector is an eigenvector) return the canonical basis.
    """
    if values is None:
        values = eigenvalues(m)
    if values.kind == COMPLEX_CONJUGATE:
        vr, vi = _express_vector_complex(m, values.alpha, values.beta)
        return EigenSystem(values, vr=vr, vi=vi)
    if values.kind == REAL_DOUBLE:
        tol = 1e-12 * max(1.0, m.norm_inf)
        if max(abs(m.b), abs(m.c), abs(m.a - m.d)) <= tol:
            return EigenSystem(values, v1=(1.0, 0.0), v2=(0.0, 1.0))
    v1 = _express_vector_real(m, values.lam1)
    v2 = _express_vector_real(m, values.lam2)
    return EigenSystem(values, v1=v1, v2=v2)


def cramer_solve(m: Mat2, rhs: tuple[float, float]) -> tuple[float, float]:
    """Solve m @ (x, y) = rhs by Cramer's rule.

    Raises SingularMatrixError when |det| <= 1e-12 * norm_inf^2.
    """
    det = m.det
    if abs(det) <= 1e-12 * m.norm_inf ** 2:
        raise SingularMatrixError(f"matrix is singular (det={det!r})")
    det_x = rhs[0] * m.d - rhs[1] * m.b
    det_y = m.a * rhs[1] - m.c * rhs[0]
    return (det_x / det, det_y / det)
