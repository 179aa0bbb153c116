"""Integer holonomy of a locally-lattice point cloud.

A basic cell (anchor plus two edge vectors whose parallelogram corners are
all cloud points) is carried around a closed loop one vertex at a time:
the previous cell's affine frame predicts where the new corners should be,
and each prediction is snapped to the nearest cloud point. The final edge
vectors, written in the initial ones, give an integer matrix.

All distances are measured after dividing coordinates by ``scale``.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classical import IntMatrix2
from .config import DEFAULT_TOLERANCES, Tolerances


class NotALatticeError(ValueError):
    pass


class TransportError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class NonIntegralHolonomyError(TransportError):
    pass


class SpatialHash:
    """Uniform bucket grid for nearest-point queries in the plane."""

    def __init__(self, points: np.ndarray, bucket: float):
        self.points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(self.points) == 0:
            raise ValueError("empty point cloud")
        self.bucket = float(bucket)
        self._cells: dict[tuple[int, int], list[int]] = defaultdict(list)
        keys = np.floor(self.points / self.bucket).astype(np.int64)
        for i, (a, b) in enumerate(keys):
            self._cells[(int(a), int(b))].append(i)
        self._kmin = keys.min(axis=0)
        self._kmax = keys.max(axis=0)

    def nearest(self, q) -> tuple[int, float]:
        q = np.asarray(q, dtype=float)
        ka, kb = (int(v) for v in np.floor(q / self.bucket))
        best, best_d = -1, math.inf
        reach = int(max(np.max(np.abs(self._kmax - [ka, kb])), np.max(np.abs(self._kmin - [ka, kb])))) + 1
        for ring in range(reach + 1):
            # points in ring k or beyond are at least (k - 1) * bucket away
            if best >= 0 and best_d <= (ring - 1) * self.bucket:
                break
            for a in range(ka - ring, ka + ring + 1):
                for b in range(kb - ring, kb + ring + 1):
                    if max(abs(a - ka), abs(b - kb)) != ring:
                        continue
                    for i in self._cells.get((a, b), ()):
                        d = math.hypot(self.points[i, 0] - q[0], self.points[i, 1] - q[1])
                        if d < best_d:
                            best, best_d = i, d
        return best, best_d

    def within(self, q, radius: float) -> list[int]:
        q = np.asarray(q, dtype=float)
        span = int(math.ceil(radius / self.bucket))
        ka, kb = (int(v) for v in np.floor(q / self.bucket))
        out = []
        for a in range(ka - span, ka + span + 1):
            for b in range(kb - span, kb + span + 1):
                for i in self._cells.get((a, b), ()):
                    if math.hypot(*(self.points[i] - q)) <= radius:
                        out.append(i)
        return out


@dataclass(frozen=True)
class LatticeCell:
    anchor: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        for name in ("anchor", "v1", "v2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(2))

    @property
    def basis(self) -> np.ndarray:
        """Edge vectors as columns."""
        return np.column_stack([self.v1, self.v2])

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.basis))

    def corners(self) -> np.ndarray:
        a = self.anchor
        return np.array([a, a + self.v1, a + self.v1 + self.v2, a + self.v2])


@dataclass
class TransportResult:
    matrix: IntMatrix2
    residuals: list[float]
    steps: int
    raw_matrix: np.ndarray = field(repr=False)
    cells: list[LatticeCell] = field(default_factory=list, repr=False)


def _scaled(points, scale) -> np.ndarray:
    return np.asarray(points, dtype=float).reshape(-1, 2) / np.asarray(scale, dtype=float)


def _orient(anchor, a, b):
    """Re-anchor the same parallelogram so ``v1`` points to larger first coordinate
    and ``v2`` to larger second coordinate."""
    if abs(a[0]) * np.hypot(*b) < abs(b[0]) * np.hypot(*a):
        a, b = b, a
    if a[0] < 0:
        anchor, a = anchor + a, -a
    if b[1] < 0:
        anchor, b = anchor + b, -b
    return anchor, a, b


def estimate_cell(cloud, anchor_hint, scale=(1.0, 1.0), snap_fraction: float = DEFAULT_TOLERANCES.snap_fraction,
                  neighbours: int = 12) -> LatticeCell:
    """Basic cell of the cloud at the point nearest ``anchor_hint``.

    Candidate edges are the offsets to the nearest neighbours of the anchor;
    the first pair (shortest total length) that is not nearly collinear,
    whose fourth corner is present in the cloud and in whose coordinates the
    neighbours within reach have near-integer coordinates is returned. The cell is
    re-anchored so that ``v1`` is the edge closest to the first axis, with a
    positive first component, and ``v2`` has a positive second component.
    """
    scale = np.asarray(scale, dtype=float)
    pts = _scaled(cloud, scale)
    if len(pts) < 4:
        raise NotALatticeError("not locally a lattice: fewer than four points")
    hint = np.asarray(anchor_hint, dtype=float) / scale
    spread = np.ptp(pts, axis=0).max() or 1.0
    index = SpatialHash(pts, bucket=max(spread / max(math.sqrt(len(pts)), 1.0), 1e-12))
    i0, _ = index.nearest(hint)
    anchor = pts[i0]
    d = np.hypot(*(pts - anchor).T)
    order = np.argsort(d)[1:neighbours + 1]
    offsets = pts[order] - anchor
    pairs = []
    for p in range(len(offsets)):
        for q in range(p + 1, len(offsets)):
            a, b = offsets[p], offsets[q]
            la, lb = np.hypot(*a), np.hypot(*b)
            if abs(a[0] * b[1] - a[1] * b[0]) < 0.3 * la * lb:
                continue
            pairs.append((la + lb, p, q))
    for _, p, q in sorted(pairs):
        a, b = offsets[p], offsets[q]
        _, dist = index.nearest(anchor + a + b)
        if dist >= snap_fraction * min(np.hypot(*a), np.hypot(*b)):
            continue
        # a basic cell generates the neighbourhood: every nearby offset must
        # have near-integer coordinates in (a, b)
        near = offsets[np.hypot(*offsets.T) <= 1.05 * max(np.hypot(*a), np.hypot(*b))]
        coords = np.linalg.solve(np.column_stack([a, b]), near.T)
        if np.max(np.abs(coords - np.round(coords))) >= 0.25:
            continue
        if np.count_nonzero(d <= 3.0 * max(np.hypot(*a), np.hypot(*b))) < 8:
            raise NotALatticeError("not locally a lattice: fewer than 8 points within 3 cells")
        anc, v1, v2 = _orient(anchor, a, b)
        # re-anchoring may land on the fourth corner, which is only known up
        # to the snap distance: put every corner back on a cloud point
        anc = pts[index.nearest(anc)[0]]
        v1 = pts[index.nearest(anc + v1)[0]] - anc
        v2 = pts[index.nearest(anc + v2)[0]] - anc
        return LatticeCell(anc * scale, v1 * scale, v2 * scale)
    raise NotALatticeError("not locally a lattice near the anchor hint")


def conjugacy_invariants(M) -> tuple[int, int, bool]:
    """``(trace, det, is_unipotent_nonidentity)`` of an integer 2x2 matrix."""
    A = M.as_array() if isinstance(M, IntMatrix2) else np.asarray(M, dtype=np.int64)
    det = int(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    if abs(det) != 1:
        raise ValueError(f"|det| = {abs(det)} is not 1")
    N = A - np.eye(2, dtype=np.int64)
    unipotent = bool(np.all(N @ N == 0) and np.any(N != 0))
    return int(np.trace(A)), det, unipotent


_NEIGHBOUR_OFFSETS = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]


def _close(loop) -> np.ndarray:
    L = np.asarray(loop, dtype=float).reshape(-1, 2)
    if len(L) < 3:
        raise ValueError("a loop needs at least three vertices")
    if not np.allclose(L[0], L[-1]):
        L = np.vstack([L, L[:1]])
    return L


def _walk_back(fit, A, V, k, order, tol: Tolerances):
    """Translate the frame by the integer vector ``k`` in unit steps, axes in ``order``.

    Returns ``(A, V, residuals)`` or ``None`` if a step fails to snap.
    """
    residuals = []
    for axis in order:
        unit = np.zeros(2)
        unit[axis] = np.sign(k[axis])
        for _ in range(abs(int(k[axis]))):
            A_new, T1, T2, r = fit(unit, A, V)
            if max(r) >= _limit(V, tol):
                return None
            A, V = A_new, np.column_stack([T1 - A_new, T2 - A_new])
            residuals.append(float(max(r)))
    return A, V, residuals


def check_clearance(loop, forbidden: Sequence, clearance: float, scale=(1.0, 1.0)) -> None:
    """Raise ``ValueError`` if ``loop`` comes within ``clearance`` (scaled) of a forbidden point."""
    scale = np.asarray(scale, dtype=float)
    L = _close(loop) / scale
    for f in forbidden:
        fs = np.asarray(f, dtype=float) / scale
        dmin = float(np.min(np.hypot(*(L - fs).T)))
        if dmin < clearance:
            raise ValueError(
                f"loop passes within {dmin:.3g} (scaled) of the non-lattice point {tuple(f)}; "
                f"clearance {clearance:g} required")


def _limit(V, tol: Tolerances) -> float:
    return tol.snap_fraction * float(min(np.hypot(*V[:, 0]), np.hypot(*V[:, 1])))


def transport_cell(cloud, cell0: LatticeCell, loop, scale=(1.0, 1.0),
                   tol: Tolerances = DEFAULT_TOLERANCES,
                   forbidden: Sequence = (), clearance: float = 0.0) -> TransportResult:
    """Carry ``cell0`` around the closed polyline ``loop`` and return its holonomy.

    At each vertex the current frame is translated by an integer vector so
    that its cell contains the vertex; the anchor, both edge tips and the
    opposite corner are snapped to the nearest cloud points and the snapped
    edges become the new frame. Near the rim of the cloud the containing
    cell can lack corners, so the eight neighbouring cells are tried next,
    nearest centre first. After the loop the frame is moved back to the
    initial anchor and ``M = V0^{-1} V_final`` is rounded.

    Parameters
    ----------
    cloud : (K, 2) array
    cell0 : LatticeCell
        Starting cell, in unscaled coordinates.
    loop : (L, 2) array
        Polyline; closed automatically if the last vertex differs from the first.
    scale : (s1, s2)
        Coordinates are divided by ``scale`` before any distance is taken.
    forbidden, clearance
        Points the loop must stay ``clearance`` (scaled) away from.

    Raises
    ------
    TransportError
        A snap distance reached ``tol.snap_fraction`` of the shorter edge.
    NonIntegralHolonomyError
        An entry of ``M`` is ``tol.round_tol`` or more from an integer, or ``|det M| != 1``.
    """
    scale = np.asarray(scale, dtype=float)
    pts = _scaled(cloud, scale)
    L = _close(loop) / scale
    check_clearance(loop, forbidden, clearance, scale)

    A = cell0.anchor / scale
    V = np.column_stack([cell0.v1 / scale, cell0.v2 / scale])
    if abs(np.linalg.det(V)) <= 1e-12:
        raise NotALatticeError("initial cell is degenerate")
    V0, A0 = V.copy(), A.copy()
    index = SpatialHash(pts, bucket=float(min(np.hypot(*V[:, 0]), np.hypot(*V[:, 1]))))

    def nearest(q):
        i, dist = index.nearest(q)
        return pts[i], dist

    def fit(k, A=None, V=None):
        # snap the corners of the frame translated to A + V k
        A = cur[0] if A is None else A
        V = cur[1] if V is None else V
        A_new, r0 = nearest(A + V @ k)
        T1, r1 = nearest(A_new + V[:, 0])
        T2, r2 = nearest(A_new + V[:, 1])
        _, r3 = nearest(T1 + T2 - A_new)
        return A_new, T1, T2, (r0, r1, r2, r3)

    what = ("anchor", "first edge", "second edge", "opposite corner")
    cur = [A, V]
    residuals, cells = [], [LatticeCell(A * scale, V[:, 0] * scale, V[:, 1] * scale)]
    for step, p in enumerate(L[1:], start=1):
        limit = _limit(V, tol)
        x = np.linalg.solve(V, p - A)
        base = np.floor(x)
        cand = sorted((base + np.array(o) for o in _NEIGHBOUR_OFFSETS),
                      key=lambda k: float(np.sum((V @ (k + 0.5 - x)) ** 2)))
        first = None
        for k in cand:
            A_new, T1, T2, r = fit(k)
            if max(r) < limit:
                break
            if first is None:
                first = r
        else:
            worst = int(np.argmax(first))
            raise TransportError(
                f"transport broke at step {step}: {what[worst]} snap distance "
                f"{first[worst]:.3g} >= {limit:.3g}", step)
        A, V = A_new, np.column_stack([T1 - A_new, T2 - A_new])
        cur[:] = [A, V]
        if abs(np.linalg.det(V)) <= 1e-12:
            raise TransportError(f"transport broke at step {step}: cell collapsed", step)
        residuals.append(float(max(r)))
        cells.append(LatticeCell(A * scale, V[:, 0] * scale, V[:, 1] * scale))

    if not np.allclose(A, A0):
        # The last cell contains loop[0] but may be a translate of the first,
        # and after a non-trivial holonomy it is strongly sheared. Write it
        # over a reduced local basis B, walk B back to the initial anchor one
        # lattice step at a time, and rebuild the frame there.
        red = estimate_cell(pts, A, snap_fraction=tol.snap_fraction)
        B = red.basis
        N = np.round(np.linalg.solve(B, V))
        if np.max(np.abs(B @ N - V)) >= _limit(B, tol) or abs(round(np.linalg.det(N))) != 1:
            raise TransportError(
                f"transport broke at step {len(L)}: final frame is not a basis of the local lattice", len(L))
        k = np.round(np.linalg.solve(B, A0 - red.anchor)).astype(int)
        for order in ((0, 1), (1, 0)):
            walk = _walk_back(fit, red.anchor, B, k, order, tol)
            if walk is not None and np.allclose(walk[0], A0):
                break
        else:
            raise TransportError(
                f"transport broke at step {len(L)}: cannot return to the initial anchor", len(L))
        A, B, extra = walk
        V = B @ N
        residuals.extend(extra)
        cells.append(LatticeCell(A * scale, V[:, 0] * scale, V[:, 1] * scale))

    raw = np.linalg.solve(V0, V)
    Mi = np.round(raw)
    err = float(np.max(np.abs(raw - Mi)))
    if err >= tol.round_tol:
        raise NonIntegralHolonomyError(f"non-integral holonomy (max rounding residual {err:.3f})", len(L) - 1)
    M = IntMatrix2.from_array(Mi.astype(np.int64))
    if abs(M.det) != 1:
        raise NonIntegralHolonomyError(f"holonomy has det {M.det}", len(L) - 1)
    return TransportResult(M, residuals, len(L) - 1, raw, cells)
