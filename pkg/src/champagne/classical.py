"""Classical champagne bottle.

Phase space is T*R^2 with coordinates ``(x1, x2, xi1, xi2)``; the momentum
map is ``F = (H, J)`` with

    H = (xi1**2 + xi2**2)/2 + s**2 - s,   s = x1**2 + x2**2
    J = x1*xi2 - x2*xi1

Values of ``F`` are always ordered ``(E, j)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .numerics import (
    Cubic,
    brent_root,
    cubic_real_roots,
    integrate_inv_sqrt_weight,
    integrate_sqrt_weight,
)

R_WELL = 1.0 / math.sqrt(2.0)
E_MIN = -0.25


class PhasePoint(NamedTuple):
    x1: float
    x2: float
    xi1: float
    xi2: float

    @classmethod
    def polar(cls, r: float, theta: float, p_r: float = 0.0, j: float = 0.0) -> "PhasePoint":
        """Point at radius ``r``, angle ``theta`` with radial momentum ``p_r`` and angular momentum ``j``."""
        c, s = math.cos(theta), math.sin(theta)
        p_t = j / r if r > 0 else 0.0
        return cls(r * c, r * s, p_r * c - p_t * s, p_r * s + p_t * c)


class EMValue(NamedTuple):
    E: float
    j: float


class SingularityType(enum.Enum):
    Regular = "regular"
    RankOneTransverseElliptic = "rank1-transversely-elliptic"
    RankZeroFocusFocus = "rank0-focus-focus"


class DegenerateSingularityError(ValueError):
    pass


class NotRegularError(ValueError):
    pass


@dataclass(frozen=True)
class ActionData:
    I_r: float
    T_r: float
    Theta: float


@dataclass(frozen=True)
class IntMatrix2:
    a: int
    b: int
    c: int
    d: int

    @classmethod
    def from_array(cls, m) -> "IntMatrix2":
        m = np.asarray(m)
        return cls(int(m[0, 0]), int(m[0, 1]), int(m[1, 0]), int(m[1, 1]))

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> int:
        return self.a + self.d

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.int64)

    def __matmul__(self, other: "IntMatrix2") -> "IntMatrix2":
        return IntMatrix2.from_array(self.as_array() @ other.as_array())

    def __str__(self) -> str:
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


IDENTITY = IntMatrix2(1, 0, 0, 1)


# --- momentum map ---------------------------------------------------------

def hamiltonian(p) -> float:
    x1, x2, xi1, xi2 = p
    s = x1 * x1 + x2 * x2
    return 0.5 * (xi1 * xi1 + xi2 * xi2) + s * s - s


def angular_momentum(p) -> float:
    x1, x2, xi1, xi2 = p
    return x1 * xi2 - x2 * xi1


def momentum_map(p) -> EMValue:
    return EMValue(hamiltonian(p), angular_momentum(p))


def potential(r):
    r2 = np.square(r)
    return r2 * r2 - r2


def grad_hamiltonian(p) -> np.ndarray:
    x1, x2, xi1, xi2 = p
    k = 4.0 * (x1 * x1 + x2 * x2) - 2.0
    return np.array([k * x1, k * x2, xi1, xi2])


def grad_angular_momentum(p) -> np.ndarray:
    x1, x2, xi1, xi2 = p
    return np.array([xi2, -xi1, -x2, x1])


def hessian_hamiltonian(p) -> np.ndarray:
    x1, x2 = p[0], p[1]
    s = x1 * x1 + x2 * x2
    h = np.zeros((4, 4))
    h[0, 0] = 4.0 * s + 8.0 * x1 * x1 - 2.0
    h[1, 1] = 4.0 * s + 8.0 * x2 * x2 - 2.0
    h[0, 1] = h[1, 0] = 8.0 * x1 * x2
    h[2, 2] = h[3, 3] = 1.0
    return h


def hessian_angular_momentum(p=None) -> np.ndarray:
    h = np.zeros((4, 4))
    h[0, 3] = h[3, 0] = 1.0
    h[1, 2] = h[2, 1] = -1.0
    return h


def poisson_bracket(grad_f, grad_g) -> float:
    """``{f, g}`` from gradients ordered ``(x1, x2, xi1, xi2)``."""
    gf, gg = np.asarray(grad_f), np.asarray(grad_g)
    return float(gf[0] * gg[2] + gf[1] * gg[3] - gf[2] * gg[0] - gf[3] * gg[1])


# --- flow -----------------------------------------------------------------

def integrate_flow(p0, dt: float, steps: int) -> np.ndarray:
    """Kick-drift-kick leapfrog trajectory of the H-flow.

    Returns an array of shape ``(steps + 1, 4)``; row 0 is ``p0``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    z = np.array(p0, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite initial state")
    out = np.empty((steps + 1, 4))
    out[0] = z
    x, xi = z[:2].copy(), z[2:].copy()

    def force(x):
        return -(4.0 * (x @ x) - 2.0) * x

    f = force(x)
    for n in range(1, steps + 1):
        xi += 0.5 * dt * f
        x += dt * xi
        f = force(x)
        xi += 0.5 * dt * f
        out[n, :2], out[n, 2:] = x, xi
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise FloatingPointError(f"non-finite state at step {n}")
    return out


# --- reduced radial problem ------------------------------------------------

def effective_potential(r: float, j: float) -> float:
    if not r > 0:
        raise ValueError("effective potential needs r > 0")
    return j * j / (2.0 * r * r) + r ** 4 - r * r


def effective_potential_dr(r: float, j: float) -> float:
    return -j * j / r ** 3 + 4.0 * r ** 3 - 2.0 * r


def effective_potential_minimum(j: float) -> float:
    """Radius minimising ``V_eff(., j)``."""
    if j == 0.0:
        return R_WELL
    # dV/dr < 0 near 0 and > 0 for large r; the root is unique
    return brent_root(lambda r: effective_potential_dr(r, j), 1e-3 * min(1.0, abs(j)) ** 0.5, 2.0 + abs(j))


def turning_polynomial(c: EMValue) -> Cubic:
    """``2u^3 - 2u^2 - 2Eu + j^2`` in ``u = r^2``; negative exactly where E > V_eff."""
    E, j = c
    return Cubic(2.0, -2.0, -2.0 * E, j * j)


def _squared_roots(c: EMValue) -> tuple[float, float, float]:
    E, j = c
    if j == 0.0:
        if E < E_MIN:
            raise NotRegularError("no classical annulus")
        s = math.sqrt(1.0 + 4.0 * E)
        return tuple(sorted((0.0, 0.5 * (1.0 - s), 0.5 * (1.0 + s))))
    roots = cubic_real_roots(turning_polynomial(c))
    if len(roots) != 3:
        raise NotRegularError("no classical annulus")
    return tuple(roots)


def turning_points(c: EMValue) -> tuple[float, float]:
    """Radial turning points ``(r_min, r_max)`` of the motion at value ``c``.

    ``r_min`` is 0 when ``j == 0`` and ``E >= 0`` (motion through the origin).
    """
    c = EMValue(*map(float, c))
    _, u1, u2 = _squared_roots(c)
    if u2 <= 0.0 or u2 - max(u1, 0.0) <= 1e-13 * max(1.0, u2):
        raise NotRegularError("no classical annulus")
    return math.sqrt(max(u1, 0.0)), math.sqrt(u2)


# --- image of F ------------------------------------------------------------

def critical_radius(E: float) -> float:
    """Radius ``r >= 1/sqrt(2)`` of the rank-one circle with energy ``E``."""
    if E < E_MIN:
        raise ValueError("E below the minimum of H")
    return math.sqrt((1.0 + math.sqrt(1.0 + 3.0 * E)) / 3.0)


def j_max(E):
    """Largest ``|j|`` attained on the energy level ``E`` (boundary of the image)."""
    E = np.asarray(E, dtype=float)
    u = (1.0 + np.sqrt(np.maximum(1.0 + 3.0 * E, 0.0))) / 3.0
    out = np.sqrt(np.maximum(4.0 * u ** 3 - 2.0 * u ** 2, 0.0))
    out = np.where(E < E_MIN, np.nan, out)
    return float(out) if out.ndim == 0 else out


def critical_value_curve(r: float) -> tuple[EMValue, EMValue]:
    """Rank-one critical values for ``r >= 1/sqrt(2)``: ``(E, +j)`` and ``(E, -j)``."""
    if r < R_WELL * (1.0 - 1e-15):
        raise ValueError("critical curve is parametrised by r >= 1/sqrt(2)")
    r2 = r * r
    E = 3.0 * r2 * r2 - 2.0 * r2
    j = math.sqrt(max(4.0 * r2 ** 3 - 2.0 * r2 * r2, 0.0))
    return EMValue(E, j), EMValue(E, -j)


def critical_point(r: float, sign: int = 1) -> tuple[PhasePoint, float]:
    """Rank-one critical point on the ``x1`` axis and its multiplier ``lambda``.

    At the returned point ``grad H = lambda * grad J`` with
    ``lambda = sign * sqrt(4 r^2 - 2)``.
    """
    E_j = critical_value_curve(r)[0 if sign >= 0 else 1]
    lam = math.copysign(math.sqrt(max(4.0 * r * r - 2.0, 0.0)), sign)
    return PhasePoint(r, 0.0, 0.0, E_j.j / r), lam


def rank_one_residual(r: float, sign: int = 1) -> float:
    p, lam = critical_point(r, sign)
    return float(np.linalg.norm(grad_hamiltonian(p) - lam * grad_angular_momentum(p)))


def in_image(c: EMValue, margin: float = 0.0) -> bool:
    """Whether ``c`` lies in the image of F, optionally inflated by ``margin``."""
    E, j = c
    if margin <= 0.0:
        return E >= E_MIN and abs(j) <= j_max(E)
    if E >= E_MIN and abs(j) <= j_max(E) + margin:
        return True
    # distance to the boundary curve, sampled along its parametrisation
    return _distance_to_boundary(c) <= margin


def _distance_to_boundary(c: EMValue) -> float:
    E, j = c
    r = np.linspace(R_WELL, 2.5, 20001)
    r2 = r * r
    Eb = 3.0 * r2 * r2 - 2.0 * r2
    jb = np.sqrt(np.maximum(4.0 * r2 ** 3 - 2.0 * r2 * r2, 0.0))
    return float(np.min(np.hypot(Eb - E, jb - abs(j))))


def is_regular_value(c: EMValue) -> bool:
    """True iff ``c`` is strictly inside the image of F and not the focus-focus value."""
    E, j = map(float, c)
    if not E > E_MIN:
        return False
    if not abs(j) < j_max(E):
        return False
    return not (E == 0.0 and j == 0.0)


# --- classification --------------------------------------------------------

_OMEGA = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])


def linearization(hess: np.ndarray) -> np.ndarray:
    """Matrix of the linearised Hamiltonian flow for a quadratic form with Hessian ``hess``."""
    return _OMEGA @ np.asarray(hess, dtype=float)


def gradient_rank(p, tol: float) -> int:
    G = np.vstack([grad_hamiltonian(p), grad_angular_momentum(p)])
    sv = np.linalg.svd(G, compute_uv=False)
    return int(np.sum(sv > tol))


def _off_axes(ev: np.ndarray, tol: float) -> bool:
    return bool(np.all(np.abs(ev.real) > tol) and np.all(np.abs(ev.imag) > tol))


def classify_point(p, tol: Tolerances = DEFAULT_TOLERANCES, b: float = 1.0) -> SingularityType:
    """Williamson type of ``p`` for the momentum map ``(H, J)``.

    Rank 0 points are classified from the spectrum of the linearised flow of
    ``H + b*J``; a second coefficient is tried if the first is not generic.
    Rank 1 points must have a transversely elliptic pair ``+-i*omega``.
    """
    p = PhasePoint(*map(float, p))
    rank = gradient_rank(p, tol.rank_tol)
    if rank == 2:
        return SingularityType.Regular
    hH, hJ = hessian_hamiltonian(p), hessian_angular_momentum(p)
    if rank == 0:
        for coeff in (b, math.sqrt(2.0) / 3.0):
            ev = np.linalg.eigvals(linearization(hH + coeff * hJ))
            if np.any(np.abs(ev) < tol.axis_tol):
                raise DegenerateSingularityError("degenerate")
            if _off_axes(ev, tol.axis_tol):
                return SingularityType.RankZeroFocusFocus
        raise DegenerateSingularityError("degenerate: rank-0 point is not of focus-focus type")
    gH, gJ = grad_hamiltonian(p), grad_angular_momentum(p)
    lam = float(gH @ gJ / (gJ @ gJ))
    ev = np.linalg.eigvals(linearization(hH - lam * hJ))
    ev = ev[np.argsort(np.abs(ev))]
    transverse = ev[2:]
    if np.max(np.abs(transverse)) < tol.axis_tol:
        raise DegenerateSingularityError("degenerate")
    if np.all(np.abs(transverse.real) <= tol.axis_tol * max(1.0, np.max(np.abs(transverse)))):
        return SingularityType.RankOneTransverseElliptic
    raise DegenerateSingularityError("degenerate: rank-1 point is not transversely elliptic")


# --- actions ----------------------------------------------------------------

def action_data(c: EMValue, tol: Tolerances = DEFAULT_TOLERANCES) -> ActionData:
    """Radial action, radial period and rotation angle at a regular value.

    With ``u = r^2`` and the roots ``u0 <= u1 < u2`` of the turning
    polynomial, ``2(E - V_eff) = (r^2 - r1^2)(r2 - r) k(r)`` with
    ``k = 2 (r + r2)(r^2 - u0) / r^2``. Substituting ``r = r1 cosh(s)``
    turns all three integrals into even, smooth integrands on
    ``[-S, S]``, ``S = acosh(r2/r1)``, times the Chebyshev weight
    ``(S^2 - s^2)^(+-1/2)``. This stays accurate as ``r1 -> 0`` (small
    ``|j|`` above the hump), where ``k`` has a pole near the inner
    turning point.
    """
    c = EMValue(*map(float, c))
    if not is_regular_value(c):
        raise NotRegularError(f"{c} is not a regular value")
    E, j = c
    u0, u1, u2 = _squared_roots(c)
    r2 = math.sqrt(u2)

    if u1 <= 0.0:
        # j == 0 above the hump: motion through the origin. The integrand is
        # even in r, so integrate over [-r2, r2] and halve. Theta -> +-pi as
        # j -> 0+-, so pi is the continuous value modulo 2*pi.
        def s(r):
            return np.sqrt(2.0 * (r * r - u0))

        I_r = 0.5 * integrate_sqrt_weight(s, -r2, r2, tol=tol) / math.pi
        T_r = integrate_inv_sqrt_weight(lambda r: 1.0 / s(r), -r2, r2, tol=tol)
        return ActionData(I_r, T_r, math.pi)

    r1 = math.sqrt(u1)
    S = math.acosh(r2 / r1)

    def radius(t):
        return r1 * np.cosh(t)

    def smooth_factor(t):
        # (r2 - r) k(r) / (S^2 - t^2), strictly positive on [-S, S]
        r = radius(t)
        sp, sm = 0.5 * (S + t), 0.5 * (S - t)
        q = r1 * np.sinh(sp) * np.sinh(sm) / (sp * sm) * 0.5
        k = 2.0 * (r + r2) * (r * r - u0) / (r * r)
        return q * k

    I_r = integrate_sqrt_weight(
        lambda t: (r1 * np.sinh(t)) ** 2 * np.sqrt(smooth_factor(t)), -S, S, tol=tol) / (2.0 * math.pi)
    T_r = integrate_inv_sqrt_weight(lambda t: 1.0 / np.sqrt(smooth_factor(t)), -S, S, tol=tol)
    if j == 0.0:
        theta = 0.0
    else:
        theta = integrate_inv_sqrt_weight(
            lambda t: j / (radius(t) ** 2 * np.sqrt(smooth_factor(t))), -S, S, tol=tol)
    return ActionData(I_r, T_r, theta)


def radial_action(c: EMValue, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    return action_data(c, tol).I_r


# --- monodromy -------------------------------------------------------------

def ellipse_loop(center: tuple[float, float], semi_axes: tuple[float, float],
                 samples: int = 256, start_angle: float = 0.0,
                 clockwise: bool = False) -> list[EMValue]:
    """Closed polyline (first vertex not repeated) on an ellipse in the ``(E, j)`` plane."""
    t = start_angle + 2.0 * np.pi * np.arange(samples) / samples
    if clockwise:
        t = start_angle - 2.0 * np.pi * np.arange(samples) / samples
    E = center[0] + semi_axes[0] * np.cos(t)
    j = center[1] + semi_axes[1] * np.sin(t)
    return [EMValue(float(a), float(b)) for a, b in zip(E, j)]


# the enclosing ellipse is sized relative to the image width at its center
DEFAULT_LOOP_CENTER = (0.1, 0.0)
DEFAULT_LOOP_E_AXIS = 0.3
DEFAULT_LOOP_J_FRACTION = 0.6
NON_ENCLOSING_LOOP = ((0.8, 0.0), (0.3, 0.4))


def default_enclosing_loop(samples: int = 256) -> list[EMValue]:
    """Ellipse around ``(0, 0)``, counter-clockwise when drawn with ``j`` horizontal."""
    center = DEFAULT_LOOP_CENTER
    axes = (DEFAULT_LOOP_E_AXIS, DEFAULT_LOOP_J_FRACTION * j_max(center[0]))
    loop = ellipse_loop(center, axes, samples, clockwise=True)
    validate_loop(loop)
    return loop


def default_non_enclosing_loop(samples: int = 256) -> list[EMValue]:
    loop = ellipse_loop(*NON_ENCLOSING_LOOP, samples, clockwise=True)
    validate_loop(loop)
    return loop


def _open_loop(loop: Sequence) -> list[EMValue]:
    pts = [EMValue(*map(float, c)) for c in loop]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(pts) < 3:
        raise ValueError("a loop needs at least three distinct vertices")
    return pts


def validate_loop(loop: Iterable) -> None:
    for k, c in enumerate(_open_loop(list(loop))):
        if not is_regular_value(c):
            raise NotRegularError(f"loop vertex {k} at {tuple(c)} is not a regular value")


def winding_number(loop: Sequence) -> int:
    """Winding number of a closed polyline around the focus-focus value ``(0, 0)``."""
    pts = np.array(_open_loop(loop))
    ang = np.arctan2(pts[:, 1], pts[:, 0])
    d = np.diff(np.append(ang, ang[0]))
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    return int(round(d.sum() / (2.0 * np.pi)))


def rotation_winding(loop: Sequence, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Total continuous variation of the rotation angle around a closed loop.

    Consecutive samples are unwrapped modulo 2*pi; an increment of
    ``tol.max_step_dtheta`` or more is ambiguous and rejected.
    """
    pts = _open_loop(loop)
    thetas = []
    for k, c in enumerate(pts):
        if not is_regular_value(c):
            raise NotRegularError(f"loop vertex {k} at {tuple(c)} is not a regular value")
        thetas.append(action_data(c, tol).Theta)
    th = np.array(thetas + thetas[:1])
    d = np.diff(th)
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    if np.any(np.abs(d) >= tol.max_step_dtheta):
        k = int(np.argmax(np.abs(d)))
        raise ValueError(f"refine loop: rotation angle jumps by {d[k]:.3f} at step {k}")
    return float(d.sum())


def classical_monodromy(loop: Sequence, tol: Tolerances = DEFAULT_TOLERANCES) -> IntMatrix2:
    """Monodromy of the period lattice along ``loop``.

    Returned in the basis (S^1-orbit cycle, radial cycle): the radial cycle
    picks up ``k`` copies of the orbit cycle, ``k`` being the winding of the
    rotation angle in units of 2*pi.
    """
    total = rotation_winding(loop, tol)
    k = int(round(total / (2.0 * math.pi)))
    if abs(total - 2.0 * math.pi * k) > tol.winding_tol:
        raise ValueError(f"rotation winding {total} is not a multiple of 2*pi")
    return IntMatrix2(1, 0, k, 1)
