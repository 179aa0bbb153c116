"""Low-level kernels: cubic roots, weighted Gauss-Chebyshev quadrature,
bracketed root refinement and a Sturm-bisection tridiagonal eigensolver.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numba
import numpy as np
from scipy import optimize

from .config import DEFAULT_TOLERANCES

__all__ = [
    "Cubic",
    "TridiagonalSym",
    "cubic_real_roots",
    "integrate_sqrt_weight",
    "integrate_inv_sqrt_weight",
    "brent_root",
    "sturm_count",
    "tridiag_eigenvalues",
]


@dataclass(frozen=True)
class Cubic:
    """Real polynomial ``a3*u**3 + a2*u**2 + a1*u + a0``."""

    a3: float
    a2: float
    a1: float
    a0: float

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.a3, self.a2, self.a1, self.a0)

    def __call__(self, u):
        return ((self.a3 * u + self.a2) * u + self.a1) * u + self.a0

    def derivative(self, u):
        return (3.0 * self.a3 * u + 2.0 * self.a2) * u + self.a1


def _newton_polish(p: Cubic, u: float, iters: int = 6) -> float:
    # only accept steps that reduce the residual; double roots converge slowly
    best, fbest = u, abs(p(u))
    for _ in range(iters):
        d = p.derivative(best)
        if d == 0.0 or fbest == 0.0:
            break
        cand = best - p(best) / d
        fc = abs(p(cand))
        if not fc < fbest:
            break
        best, fbest = cand, fc
    return best


def _quadratic_roots(a: float, b: float, c: float, rel_tol: float = 1e-14) -> list[float]:
    if a == 0.0:
        if b == 0.0:
            return []
        return [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        # a tiny negative discriminant is a rounded double root
        if -disc > rel_tol * max(b * b, abs(4.0 * a * c)):
            return []
        disc = 0.0
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b)) if b != 0.0 else -0.5 * sq
    if q == 0.0:
        return [0.0, 0.0]
    r1, r2 = q / a, c / q
    return sorted([r1, r2])


def _depressed_real_root(a: float, b: float, c: float) -> float:
    """One real root of the monic cubic u^3 + a u^2 + b u + c."""
    p = b - a * a / 3.0
    q = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0.0:
        big = abs(q) / 2.0 + math.sqrt(disc)
        A = -math.copysign(big ** (1.0 / 3.0), q) if q != 0.0 else big ** (1.0 / 3.0)
        t = A - p / (3.0 * A) if A != 0.0 else 0.0
    elif p == 0.0:
        t = 0.0
    else:
        # three real roots: take the one of largest magnitude for a clean deflation
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg) / 3.0
        cands = [m * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
        t = max(cands, key=abs)
    return t - a / 3.0


def cubic_real_roots(c: Cubic | Sequence[float]) -> list[float]:
    """Real roots of a cubic, ascending, repeated according to multiplicity.

    One real root comes from the closed form and is Newton-polished; the
    remaining quadratic factor is obtained by synthetic division. Falls back
    to the quadratic or linear formula when the leading coefficient is zero.

    Raises
    ------
    ValueError
        If all coefficients vanish or any is non-finite.
    """
    if not isinstance(c, Cubic):
        c = Cubic(*map(float, c))
    coeffs = c.coefficients
    if not all(math.isfinite(x) for x in coeffs):
        raise ValueError("non-finite coefficient")
    scale = max(abs(x) for x in coeffs)
    if scale == 0.0:
        raise ValueError("zero polynomial")
    a3, a2, a1, a0 = (x / scale for x in coeffs)
    p = Cubic(a3, a2, a1, a0)

    if abs(a3) < 1e-300:
        roots = _quadratic_roots(a2, a1, a0)
        if not roots and a2 == 0.0 and a1 == 0.0:
            raise ValueError("zero polynomial")
        return sorted(_newton_polish(p, r) for r in roots)

    r0 = _newton_polish(p, _depressed_real_root(a2 / a3, a1 / a3, a0 / a3))
    # synthetic division by (u - r0)
    b2 = a3
    b1 = a2 + r0 * b2
    b0 = a1 + r0 * b1
    rest = _quadratic_roots(b2, b1, b0)
    roots = [r0] + [_newton_polish(p, r) for r in rest]
    return sorted(roots)


def _gauss_cheb2(n: int):
    k = np.arange(1, n + 1)
    theta = k * np.pi / (n + 1)
    return np.cos(theta), np.pi / (n + 1) * np.sin(theta) ** 2


def _gauss_cheb1(n: int):
    k = np.arange(1, n + 1)
    return np.cos((2 * k - 1) * np.pi / (2 * n)), np.full(n, np.pi / n)


def _weighted_rule(rule, jac_power, g, a, b, n, adaptive, tol):
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError("empty interval")
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    jac = half ** jac_power

    def apply(m):
        x, w = rule(m)
        vals = np.asarray(g(mid + half * x), dtype=float)
        return jac * float(np.dot(w, np.broadcast_to(vals, x.shape)))

    n = int(tol.quad_n0 if n is None else n)
    if n < 1:
        raise ValueError("node count must be positive")
    prev = apply(n)
    if not adaptive:
        return prev
    while n < tol.quad_max_n:
        n *= 2
        cur = apply(n)
        if abs(cur - prev) <= tol.quad_rtol * abs(cur) or cur == prev:
            return cur
        prev = cur
    warnings.warn(f"weighted quadrature not converged at n={n}", RuntimeWarning)
    return prev


def integrate_sqrt_weight(g: Callable, a: float, b: float, n: int | None = None,
                          adaptive: bool = True, tol=DEFAULT_TOLERANCES) -> float:
    """Integral of ``sqrt((r-a)(b-r)) * g(r)`` over ``[a, b]``.

    Gauss-Chebyshev rule of the second kind; ``g`` must accept arrays. With
    ``adaptive`` the node count doubles from ``n`` until successive values
    agree to ``tol.quad_rtol``.
    """
    return _weighted_rule(_gauss_cheb2, 2, g, a, b, n, adaptive, tol)


def integrate_inv_sqrt_weight(g: Callable, a: float, b: float, n: int | None = None,
                              adaptive: bool = True, tol=DEFAULT_TOLERANCES) -> float:
    """Integral of ``g(r) / sqrt((r-a)(b-r))`` over ``[a, b]`` (first-kind rule)."""
    return _weighted_rule(_gauss_cheb1, 0, g, a, b, n, adaptive, tol)


def brent_root(f: Callable[[float], float], a: float, b: float) -> float:
    """Root of ``f`` bracketed by ``[a, b]`` (Brent's method)."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return float(a)
    if fb == 0.0:
        return float(b)
    if not fa * fb < 0.0:
        raise ValueError("no sign change on bracket")
    xtol = 1e-14 * max(abs(a), abs(b), 1.0)
    return float(optimize.brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))


@dataclass(frozen=True)
class TridiagonalSym:
    """Symmetric tridiagonal matrix stored as diagonal ``d`` and off-diagonal ``e``."""

    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.d, dtype=float)
        e = np.ascontiguousarray(self.e, dtype=float)
        if d.ndim != 1 or e.ndim != 1 or len(e) != max(len(d) - 1, 0):
            raise ValueError("off-diagonal must have length len(d) - 1")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)

    @property
    def n(self) -> int:
        return len(self.d)

    def reversed(self) -> "TridiagonalSym":
        return TridiagonalSym(self.d[::-1], self.e[::-1])

    def dense(self) -> np.ndarray:
        return np.diag(self.d) + np.diag(self.e, 1) + np.diag(self.e, -1)

    def norm_inf(self) -> float:
        ae = np.abs(self.e)
        row = np.abs(self.d).copy()
        row[:-1] += ae
        row[1:] += ae
        return float(row.max()) if len(row) else 0.0


@numba.njit(cache=True, nogil=True)
def _sturm_count(d, e2, lam, pivmin):
    # LDL^T pivots; the count of negative pivots equals #eigenvalues < lam.
    # A vanishing pivot is pushed to +pivmin, i.e. lam is nudged down, so an
    # eigenvalue exactly at lam is not counted (strictly below).
    count = 0
    q = d[0] - lam
    if abs(q) < pivmin:
        q = pivmin
    if q < 0.0:
        count += 1
    for i in range(1, d.shape[0]):
        q = d[i] - lam - e2[i - 1] / q
        if abs(q) < pivmin:
            q = pivmin
        if q < 0.0:
            count += 1
    return count


@numba.njit(cache=True, nogil=True)
def _bisect_all(d, e2, lo, hi, k0, k1, rtol, atol, pivmin):
    out = np.empty(k1 - k0)
    for k in range(k0, k1):
        a, b = lo, hi
        while b - a > rtol * max(abs(a), abs(b)) + atol:
            mid = 0.5 * (a + b)
            if mid == a or mid == b:
                break
            if _sturm_count(d, e2, mid, pivmin) > k:
                b = mid
            else:
                a = mid
        out[k - k0] = 0.5 * (a + b)
    return out


def _pivmin(T: TridiagonalSym) -> float:
    emax = float(np.max(T.e ** 2)) if T.n > 1 else 0.0
    return np.finfo(float).tiny * max(1.0, emax)


def sturm_count(T: TridiagonalSym, lam: float) -> int:
    """Number of eigenvalues of ``T`` strictly below ``lam``."""
    return int(_sturm_count(T.d, T.e ** 2, float(lam), _pivmin(T)))


def tridiag_eigenvalues(T: TridiagonalSym, window: tuple[float, float],
                        tol=DEFAULT_TOLERANCES) -> np.ndarray:
    """All eigenvalues of ``T`` in ``[lo, hi)``, ascending.

    Each eigenvalue is isolated by its index in the Sturm count and refined
    by bisection to relative width ``tol.eig_rtol``; clustered eigenvalues
    are returned as separate entries, never merged.
    """
    lo, hi = map(float, window)
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError("window must be finite with lo < hi")
    if T.n == 0:
        return np.empty(0)
    e2 = T.e ** 2
    piv = _pivmin(T)
    k0 = int(_sturm_count(T.d, e2, lo, piv))
    k1 = int(_sturm_count(T.d, e2, hi, piv))
    # below eps*||T|| bisection only resolves rounding noise of the Sturm count
    atol = np.finfo(float).eps * T.norm_inf()
    vals = _bisect_all(T.d, e2, lo, hi, k0, k1, tol.eig_rtol, atol, piv)
    return np.maximum.accumulate(vals) if len(vals) else vals
