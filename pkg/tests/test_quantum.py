from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from champagne import classical as cl
from champagne import quantum as q
from champagne.numerics import tridiag_eigenvalues


# --- configuration -----------------------------------------------------------

def test_config_defaults_and_validation():
    cfg = q.QuantumConfig()
    assert (cfg.h, cfg.R, cfg.N, cfg.E_max) == (0.1, 2.2, 4000, 1.5)
    assert cfg.epsilon == pytest.approx(math.sqrt(cfg.h))
    for bad in [dict(h=0.0), dict(N=10), dict(R=-1.0), dict(R=1.2), dict(margin=0.5),
                dict(epsilon=-0.1), dict(m_max=-1)]:
        with pytest.raises(q.ConfigError):
            q.QuantumConfig(**bad)


def test_grid_is_offset():
    cfg = q.QuantumConfig(N=200)
    r = cfg.grid()
    assert r[0] == pytest.approx(0.5 * cfg.dr)
    assert r[-1] == pytest.approx(cfg.R - 0.5 * cfg.dr)


# --- radial matrix -----------------------------------------------------------

def test_radial_matrix_hand_entries():
    cfg = q.QuantumConfig(h=0.1, R=2.2, N=200)
    m, h, dr = 2, 0.1, 2.2 / 200
    T = q.radial_matrix(m, cfg)
    for i in range(3):
        r = (i + 0.5) * dr
        # flux form: (h^2 / (2 dr^2)) (r_{i-1/2} + r_{i+1/2}) / r_i = h^2 / dr^2
        d = h * h / dr ** 2 + m * m * h * h / (2 * r * r) + r ** 4 - r * r
        assert T.d[i] == pytest.approx(d, rel=1e-14)
        r_next = (i + 1.5) * dr
        e = -0.5 * h * h / dr ** 2 * (i + 1) * dr / math.sqrt(r * r_next)
        assert T.e[i] == pytest.approx(e, rel=1e-14)


def test_radial_matrix_is_even_in_m():
    cfg = q.QuantumConfig(N=300)
    a, b = q.radial_matrix(3, cfg), q.radial_matrix(-3, cfg)
    assert np.array_equal(a.d, b.d) and np.array_equal(a.e, b.e)


def test_radial_matrix_against_dense_eigensolver():
    cfg = q.QuantumConfig(N=400)
    T = q.radial_matrix(1, cfg)
    ref = np.linalg.eigvalsh(T.dense())
    ref = ref[ref <= cfg.E_max]
    assert q.sector_eigenvalues(1, cfg) == pytest.approx(ref, rel=1e-11, abs=1e-12)


# --- sector and joint spectra -------------------------------------------------

RICHARDSON_PAIRS = [(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (2, 2), (0, 3), (1, 4), (0, 5)]


@pytest.mark.parametrize("n,m", RICHARDSON_PAIRS)
def test_richardson_ratio(n, m):
    cfg = q.QuantumConfig()
    E = [q.sector_eigenvalues(m, cfg.replace(N=N))[n] for N in (1000, 2000, 4000)]
    ratio = abs(E[0] - E[1]) / abs(E[1] - E[2])
    assert 3.5 <= ratio <= 4.5


def test_ground_state_harmonic_approximation():
    # radial frequency at the well bottom is 2, so E_0 ~ -1/4 + h
    h = 0.05
    cfg = q.QuantumConfig(h=h, N=8000, E_max=0.0)
    E0 = q.sector_eigenvalues(0, cfg)[0]
    assert abs(E0 - (-0.25 + h)) <= 0.1 * h


@pytest.mark.parametrize("h", [0.1, 0.07, 0.05])
def test_no_eigenvalue_below_well(h):
    cfg = q.QuantumConfig(h=h, N=4000, E_max=0.0)
    assert min(p.E for p in q.joint_spectrum(cfg)) >= -0.25 - 0.01


def test_sector_eigenvalues_strictly_increasing(default_spectrum):
    by_m = {}
    for p in default_spectrum:
        by_m.setdefault(p.m, []).append((p.n, p.E))
    for m, rows in by_m.items():
        ns, Es = zip(*rows)
        assert list(ns) == list(range(len(ns)))
        assert np.all(np.diff(Es) > 0)


def test_joint_spectrum_symmetry_and_labels(default_spectrum, default_config):
    table = {(p.n, p.m): p for p in default_spectrum}
    for (n, m), p in table.items():
        assert table[(n, -m)].E == p.E
        assert p.j == m * default_config.h
        assert p.E <= default_config.E_max
    ms = sorted({p.m for p in default_spectrum})
    assert ms == list(range(-ms[-1], ms[-1] + 1))
    # the next sector out has nothing below E_max
    assert q.sector_count(ms[-1] + 1, default_config) == 0


def test_joint_spectrum_sorted(default_spectrum):
    keys = [(p.m, p.n) for p in default_spectrum]
    assert keys == sorted(keys)


def test_joint_spectrum_thread_invariance(default_config, default_spectrum):
    assert q.joint_spectrum(default_config, threads=4) == default_spectrum


def test_m_max_is_widened(default_config, default_spectrum):
    assert q.joint_spectrum(default_config.replace(m_max=2)) == default_spectrum


def test_truncation_insensitivity():
    # enlarge R by 20% at fixed spacing
    cfg = q.QuantumConfig()
    big = cfg.replace(R=1.2 * cfg.R, N=int(round(1.2 * cfg.N)))
    for m in (0, 3, 7):
        a, b = q.sector_eigenvalues(m, cfg), q.sector_eigenvalues(m, big)
        assert len(a) == len(b)
        assert np.max(np.abs(a - b)) < 1e-9


def test_weyl_law():
    cfg = q.QuantumConfig(E_max=1.0)
    count = len(q.joint_spectrum(cfg))
    assert abs(count - q.weyl_count(1.0, cfg.h)) <= 0.2 * count


def test_phase_space_volume_is_increasing():
    v = [q.phase_space_volume(E, samples=100_000) for E in (-0.2, 0.0, 0.5)]
    assert 0 < v[0] < v[1] < v[2]


def test_spectrum_inside_inflated_image(default_spectrum):
    h = 0.1
    inside = [cl.in_image((p.E, p.j), margin=5 * h) for p in default_spectrum]
    assert np.mean(inside) >= 0.99


def test_bohr_sommerfeld(default_spectrum):
    d = q.bohr_sommerfeld_defects(default_spectrum, 0.1)
    d = d[~np.isnan(d)]
    assert len(d) > 50
    assert np.mean(np.abs(d) <= 5 * 0.1 ** 2) >= 0.95


# --- non-selfadjoint perturbation ----------------------------------------------

def test_chi_examples():
    assert np.array_equal(q.chi((1.0, 2.0), 0.5), [1.0, 1.0])
    assert np.array_equal(q.chi_inverse((1.0, 1.0), 0.5), [1.0, 2.0])
    assert np.array_equal(q.chi([[1.0, 2.0], [3.0, -4.0]], 2.0), [[1.0, 4.0], [3.0, -8.0]])
    with pytest.raises(ValueError):
        q.chi_inverse((1.0, 1.0), 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(1e-3, 10))
def test_chi_round_trip(a, b, eps):
    u = q.chi_inverse(q.chi((a, b), eps), eps)
    assert u[0] == a
    assert u[1] == pytest.approx(b, rel=1e-15, abs=1e-300)


def test_perturbed_spectrum(default_spectrum, default_config):
    eps = default_config.epsilon
    z = q.perturbed_spectrum(default_spectrum, eps)
    m_max = max(abs(p.m) for p in default_spectrum)
    for p, w in zip(default_spectrum, z):
        assert complex(w) == complex(p.E, eps * p.j)
        assert abs(w.im) <= eps * default_config.h * m_max + 1e-15
    real = q.perturbed_spectrum(default_spectrum, 0.0)
    assert all(w.im == 0.0 for w in real)
    with pytest.raises(ValueError):
        q.perturbed_spectrum(default_spectrum, -1.0)


def test_perturbed_operator_eigenvalues_on_a_sector():
    # on the sector m the operator is H_m + i eps m h: the same real matrix shifted
    cfg = q.QuantumConfig(N=300)
    m, eps = 2, 0.3
    T = q.radial_matrix(m, cfg).dense().astype(complex) + 1j * eps * m * cfg.h * np.eye(cfg.N)
    ev = np.linalg.eigvals(T)
    ev = np.sort_complex(ev[ev.real <= cfg.E_max])
    E = tridiag_eigenvalues(q.radial_matrix(m, cfg), (-1.0, cfg.E_max))
    assert ev.real == pytest.approx(E, rel=1e-9, abs=1e-10)
    assert ev.imag == pytest.approx(eps * m * cfg.h, rel=1e-9)


# --- monodromy on the joint spectrum -------------------------------------------

def test_default_quantum_loop_geometry():
    loop = q.default_quantum_loop()
    assert loop.shape == (q.DEFAULT_QUANTUM_LOOP_SAMPLES, 2)
    assert loop[0] == pytest.approx([0.4, 0.5])
    assert cl.winding_number(loop) == 1
    assert cl.winding_number(q.default_quantum_loop(enclosing=False)) == 0


def test_quantum_monodromy(default_spectrum):
    from champagne.lattice import conjugacy_invariants
    res = q.quantum_monodromy(default_spectrum, 0.1)
    assert conjugacy_invariants(res.matrix) == (2, 1, True)
    assert max(res.residuals) < 0.35
    assert q.quantum_monodromy(default_spectrum, 0.1, q.default_quantum_loop(enclosing=False)).matrix == cl.IDENTITY


def test_spectral_monodromy_matches_quantum(default_spectrum, default_config):
    a = q.quantum_monodromy(default_spectrum, 0.1)
    b = q.spectral_monodromy(default_spectrum, 0.1, default_config.epsilon)
    assert a.matrix == b.matrix


def test_loop_too_close_to_focus_focus_value(default_spectrum):
    loop = cl.ellipse_loop((0.02, 0.0), (0.05, 0.05), 64)
    with pytest.raises(ValueError, match="clearance"):
        q.quantum_monodromy(default_spectrum, 0.1, loop)


def test_phase_space_volume_harmonic_limit():
    # V ~ -1/4 + 2 (r - r_w)^2 near the well bottom; integrating 2 pi (E - V)
    # over the thin annulus gives 4 pi^2 r_w (4/3) dE sqrt(dE / 2)
    dE = 0.01
    expected = 4 * math.pi ** 2 * cl.R_WELL * (4.0 / 3.0) * dE * math.sqrt(dE / 2)
    assert q.phase_space_volume(-0.25 + dE, samples=400_000) == pytest.approx(expected, rel=0.05)
