from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from champagne import classical as cl
from champagne import lattice as lt
from champagne import quantum as q


def grid(v1, v2, n=12, origin=(0.0, 0.0)):
    i, j = np.meshgrid(np.arange(-n, n + 1), np.arange(-n, n + 1), indexing="ij")
    return np.asarray(origin) + i.reshape(-1, 1) * np.asarray(v1) + j.reshape(-1, 1) * np.asarray(v2)


def reversed_loop(loop):
    loop = np.asarray(loop)
    return np.vstack([loop[:1], loop[:0:-1]])


# --- spatial hash ------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 2.0))
def test_spatial_hash_nearest_is_exact(seed, bucket):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-3, 3, size=(200, 2))
    index = lt.SpatialHash(pts, bucket)
    for qpt in rng.uniform(-4, 4, size=(10, 2)):
        i, d = index.nearest(qpt)
        brute = np.hypot(*(pts - qpt).T)
        assert d == pytest.approx(brute.min())
        assert brute[i] == pytest.approx(brute.min())


def test_spatial_hash_within():
    pts = grid((1, 0), (0, 1), 3)
    index = lt.SpatialHash(pts, 1.0)
    got = sorted(map(tuple, pts[index.within((0.0, 0.0), 1.01)]))
    assert got == sorted([(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)])


# --- cell estimation -----------------------------------------------------------

def test_estimate_cell_square():
    cell = lt.estimate_cell(grid((1, 0), (0, 1)), (0.2, 0.1))
    # the point nearest the hint is a corner; ties between edges may re-anchor
    assert np.min(np.hypot(*(cell.corners()).T)) == 0.0
    assert np.allclose(cell.v1, (1, 0)) and np.allclose(cell.v2, (0, 1))
    assert cell.det == pytest.approx(1.0)


def test_estimate_cell_sheared():
    v1, v2 = np.array([1.0, 0.0]), np.array([0.4, 0.9])
    cell = lt.estimate_cell(grid(v1, v2), (0.05, 0.0))
    # any basis of the lattice: the transition matrix is unimodular
    T = np.linalg.solve(np.column_stack([v1, v2]), cell.basis)
    assert np.allclose(T, np.round(T), atol=1e-12)
    assert abs(round(np.linalg.det(T))) == 1
    assert cell.v1[0] > 0 and cell.v2[1] > 0


def test_estimate_cell_anchor_is_a_cloud_point():
    # a centred-rectangular lattice, where the reduced cell is diagonal
    pts = grid((0.75, 1.0), (-0.75, 1.0))
    cell = lt.estimate_cell(pts, (0.3, -0.2))
    for c in cell.corners()[[0, 1, 3]]:
        assert np.min(np.hypot(*(pts - c).T)) == 0.0


def test_estimate_cell_respects_scale():
    pts = grid((0.2, 0.0), (0.0, 0.1))
    cell = lt.estimate_cell(pts, (0.0, 0.0), scale=(0.2, 0.1))
    assert np.allclose(cell.v1, (0.2, 0.0)) and np.allclose(cell.v2, (0.0, 0.1))


def test_estimate_cell_rejects_non_lattices():
    rng = np.random.default_rng(3)
    with pytest.raises(lt.NotALatticeError):
        lt.estimate_cell(rng.uniform(size=(300, 2)), (0.5, 0.5))
    with pytest.raises(lt.NotALatticeError):
        lt.estimate_cell([(0, 0), (1, 0), (0, 1)], (0, 0))
    with pytest.raises(lt.NotALatticeError, match="fewer than 8"):
        lt.estimate_cell([(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)], (0, 0))


def test_cell_near_half_against_sector_spacings(default_spectrum):
    h = 0.1
    pts = q.spectrum_array(default_spectrum)
    cell = lt.estimate_cell(pts, (0.5, 0.0), q.lattice_scale(h))
    table = {(p.n, p.m): p.E for p in default_spectrum}
    # the anchor is a joint eigenvalue and both edges join it to lattice neighbours
    a = next(p for p in default_spectrum if np.allclose((p.E, p.j), cell.anchor))
    ends = [next(p for p in default_spectrum if np.allclose((p.E, p.j), cell.anchor + v)) for v in (cell.v1, cell.v2)]
    for p, v in zip(ends, (cell.v1, cell.v2)):
        assert v[1] == pytest.approx((p.m - a.m) * h)
        assert v[0] == pytest.approx(table[(p.n, p.m)] - table[(a.n, a.m)])
        assert abs(p.n - a.n) <= 1 and abs(p.m - a.m) <= 1


# --- conjugacy invariants --------------------------------------------------------

@pytest.mark.parametrize("M,expected", [
    ([[1, 0], [1, 1]], (2, 1, True)),
    ([[2, -1], [1, 0]], (2, 1, True)),
    ([[1, 0], [0, 1]], (2, 1, False)),
    ([[2, 1], [1, 1]], (3, 1, False)),
    ([[0, 1], [1, 0]], (0, -1, False)),
])
def test_conjugacy_invariants(M, expected):
    assert lt.conjugacy_invariants(M) == expected
    assert lt.conjugacy_invariants(cl.IntMatrix2.from_array(M)) == expected


def test_conjugacy_invariants_rejects_non_unimodular():
    with pytest.raises(ValueError):
        lt.conjugacy_invariants([[2, 0], [0, 1]])


@settings(max_examples=100, deadline=None)
@given(st.integers(-5, 5), st.integers(-3, 3), st.integers(-3, 3))
def test_conjugacy_invariants_are_invariant(k, a, b):
    # conjugate [[1, 0], [k, 1]] by an SL(2, Z) matrix built from two shears
    P = np.array([[1, a], [0, 1]]) @ np.array([[1, 0], [b, 1]])
    Pinv = np.round(np.linalg.inv(P)).astype(int)
    M = P @ np.array([[1, 0], [k, 1]]) @ Pinv
    assert lt.conjugacy_invariants(M) == (2, 1, k != 0)


# --- transport on exact lattices -----------------------------------------------------

@pytest.mark.parametrize("v2", [(0.0, 1.0), (0.3, 1.0), (-0.45, 0.8)])
def test_exact_lattice_has_trivial_holonomy(v2):
    pts = grid((1.0, 0.0), v2, n=15)
    cell = lt.estimate_cell(pts, (3.2, 0.1))
    loop = cl.ellipse_loop((0.0, 0.0), (3.2, 3.0), 200)
    res = lt.transport_cell(pts, cell, loop)
    assert res.matrix == cl.IDENTITY
    assert np.allclose(res.raw_matrix, np.eye(2), atol=1e-12)
    assert max(res.residuals) < 1e-9
    assert res.steps == 200


def test_transport_with_affine_distortion_is_trivial():
    # a smooth, single-valued deformation of Z^2 has no monodromy
    base = grid((1.0, 0.0), (0.0, 1.0), n=15)
    warp = lambda p: p + 0.02 * np.column_stack([p[:, 1] ** 2, np.sin(p[:, 0])])
    pts = warp(base)
    cell = lt.estimate_cell(pts, (4.0, 0.0))
    res = lt.transport_cell(pts, cell, cl.ellipse_loop((0.0, 0.0), (4.0, 4.0), 256))
    assert res.matrix == cl.IDENTITY


def test_transport_break_reports_step():
    pts = grid((1.0, 0.0), (0.0, 1.0), n=10)
    pts = pts[~((np.abs(pts[:, 0]) <= 2) & (pts[:, 1] >= 4))]  # a hole on the path
    cell = lt.estimate_cell(pts, (5.0, 0.0))
    with pytest.raises(lt.TransportError) as err:
        lt.transport_cell(pts, cell, cl.ellipse_loop((0.0, 0.0), (5.0, 5.0), 100))
    assert err.value.step is not None and 0 < err.value.step <= 100
    assert f"step {err.value.step}" in str(err.value)


def test_transport_clearance():
    pts = grid((1.0, 0.0), (0.0, 1.0))
    cell = lt.estimate_cell(pts, (1.0, 0.0))
    with pytest.raises(ValueError, match="clearance"):
        lt.transport_cell(pts, cell, cl.ellipse_loop((0.0, 0.0), (1.0, 1.0), 50),
                          forbidden=[(0.0, 0.0)], clearance=2.0)


def test_transport_rejects_degenerate_cell():
    pts = grid((1.0, 0.0), (0.0, 1.0))
    bad = lt.LatticeCell((0, 0), (1, 0), (2, 0))
    with pytest.raises(lt.NotALatticeError):
        lt.transport_cell(pts, bad, cl.ellipse_loop((0.0, 0.0), (3.0, 3.0), 50))


def test_loop_helpers():
    with pytest.raises(ValueError):
        lt.transport_cell(grid((1, 0), (0, 1)), lt.LatticeCell((0, 0), (1, 0), (0, 1)), [(0, 0), (1, 1)])


# --- transport on the joint spectrum ---------------------------------------------------

def test_quantum_lattice_monodromy_default(default_spectrum):
    res = q.quantum_monodromy(default_spectrum, 0.1)
    assert lt.conjugacy_invariants(res.matrix) == (2, 1, True)
    assert np.max(np.abs(res.raw_matrix - res.matrix.as_array())) < 0.2


def test_quantum_monodromy_reversal_inverts(default_spectrum):
    loop = q.default_quantum_loop()
    M = q.quantum_monodromy(default_spectrum, 0.1, loop).matrix
    R = q.quantum_monodromy(default_spectrum, 0.1, reversed_loop(loop)).matrix
    assert M @ R == cl.IDENTITY
    there_and_back = np.vstack([loop, reversed_loop(loop)])
    assert q.quantum_monodromy(default_spectrum, 0.1, there_and_back).matrix == cl.IDENTITY


def test_quantum_monodromy_refinement(default_spectrum):
    a = q.quantum_monodromy(default_spectrum, 0.1, q.default_quantum_loop(256)).matrix
    b = q.quantum_monodromy(default_spectrum, 0.1, q.default_quantum_loop(512)).matrix
    assert a == b


@pytest.mark.parametrize("start", [0.0, 0.25 * math.pi, 0.5 * math.pi, 0.75 * math.pi])
def test_quantum_monodromy_base_cell_independence_h01(default_spectrum, start):
    loop = cl.ellipse_loop(q.DEFAULT_QUANTUM_LOOP_CENTER, q.DEFAULT_QUANTUM_LOOP_AXES, 256, start_angle=start)
    res = q.quantum_monodromy(default_spectrum, 0.1, loop)
    assert lt.conjugacy_invariants(res.matrix) == (2, 1, True)


@pytest.mark.parametrize("start", np.linspace(0, 2 * math.pi, 8, endpoint=False))
def test_quantum_monodromy_base_cell_independence_h005(fine_spectrum, start):
    loop = cl.ellipse_loop(q.DEFAULT_QUANTUM_LOOP_CENTER, q.DEFAULT_QUANTUM_LOOP_AXES, 256, start_angle=start)
    M = q.quantum_monodromy(fine_spectrum, 0.05, loop).matrix
    assert lt.conjugacy_invariants(M) == (2, 1, True)


def test_quantum_monodromy_twice_is_square(fine_spectrum):
    loop = q.default_quantum_loop()
    M = q.quantum_monodromy(fine_spectrum, 0.05, loop).matrix
    M2 = q.quantum_monodromy(fine_spectrum, 0.05, np.vstack([loop, loop])).matrix
    assert M2 == M @ M
    assert M2 != cl.IDENTITY


@pytest.mark.parametrize("center,axes", [((0.9, 0.0), (0.3, 0.3)), ((0.8, 0.3), (0.25, 0.2)),
                                         ((0.8, -0.4), (0.2, 0.2)), ((0.6, 0.5), (0.2, 0.15))])
def test_non_enclosing_loops_are_trivial(default_spectrum, center, axes):
    loop = cl.ellipse_loop(center, axes, 256, start_angle=0.5 * math.pi)
    assert q.quantum_monodromy(default_spectrum, 0.1, loop).matrix == cl.IDENTITY


def test_non_enclosing_trivial_at_finer_h(fine_spectrum):
    loop = q.default_quantum_loop(enclosing=False)
    assert q.quantum_monodromy(fine_spectrum, 0.05, loop).matrix == cl.IDENTITY


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_scale_equivariance(default_spectrum, c):
    pts = q.spectrum_array(default_spectrum)
    loop = q.default_quantum_loop()
    a = q.lattice_monodromy(pts, 0.1, loop).matrix
    b = q.lattice_monodromy(c * pts, c * 0.1, c * loop).matrix
    assert a == b


def test_classical_and_quantum_monodromy_conjugate(default_spectrum):
    Mc = cl.classical_monodromy(cl.default_enclosing_loop())
    Mq = q.quantum_monodromy(default_spectrum, 0.1).matrix
    assert lt.conjugacy_invariants(Mc) == lt.conjugacy_invariants(Mq)


@pytest.mark.parametrize("which", ["v1, v1+v2", "v1+v2, v2"])
def test_different_starting_cell_same_anchor(default_spectrum, which):
    pts = q.spectrum_array(default_spectrum)
    loop = q.default_quantum_loop()
    s = q.lattice_scale(0.1)
    c = lt.estimate_cell(pts, loop[0], s)
    a, b = (c.v1, c.v1 + c.v2) if which == "v1, v1+v2" else (c.v1 + c.v2, c.v2)
    ref = lt.transport_cell(pts, c, loop, s).matrix
    other = lt.transport_cell(pts, lt.LatticeCell(c.anchor, a, b), loop, s).matrix
    assert lt.conjugacy_invariants(other) == lt.conjugacy_invariants(ref)
