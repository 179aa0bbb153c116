"""Quantum champagne bottle.

``H_hat = -(h^2/2) Laplacian + r^4 - r^2`` commutes with
``J_hat = (h/i) d/dtheta``; on the sector ``J_hat = m h`` it reduces to the
radial operator

    -(h^2/2) (1/r) d/dr (r d/dr) + m^2 h^2 / (2 r^2) + r^4 - r^2

which is discretised in flux form on the offset grid ``r_i = (i + 1/2) R / N``
(no node at the origin, Dirichlet at ``R``) and symmetrised, giving a
second-order accurate symmetric tridiagonal matrix for every ``m``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import classical, lattice
from .config import DEFAULT_TOLERANCES, Tolerances
from .numerics import TridiagonalSym, sturm_count, tridiag_eigenvalues


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class QuantumConfig:
    h: float = 0.1
    R: float = 2.2
    N: int = 4000
    m_max: int | None = None
    E_max: float = 1.5
    epsilon: float = field(default=math.sqrt(0.1))
    margin: float = 1.0

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if self.N < 200:
            raise ConfigError("N must be at least 200")
        if not self.R > 0:
            raise ConfigError("R must be positive")
        if self.margin < 1.0:
            raise ConfigError("margin must be at least 1")
        if self.R ** 4 - self.R ** 2 < self.E_max + self.margin:
            raise ConfigError(
                f"V(R) = {self.R ** 4 - self.R ** 2:.4g} is below E_max + margin; increase R")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be non-negative")
        if self.m_max is not None and self.m_max < 0:
            raise ConfigError("m_max must be non-negative")

    @property
    def dr(self) -> float:
        return self.R / self.N

    def grid(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.dr

    def replace(self, **kw) -> "QuantumConfig":
        d = asdict(self)
        d.update(kw)
        return QuantumConfig(**d)


class SpectrumPoint(NamedTuple):
    n: int
    m: int
    E: float
    j: float


class ComplexSpectrumPoint(NamedTuple):
    re: float
    im: float

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


def radial_matrix(m: int, cfg: QuantumConfig) -> TridiagonalSym:
    """Discretised sector operator ``H_m`` as a symmetric tridiagonal matrix.

    Flux form of the radial Laplacian with face radii ``r_{i+1/2} = (i+1) dr``,
    symmetrised by ``u_i = sqrt(r_i) psi_i``. The face at the origin has zero
    radius, so no boundary condition is needed there.
    """
    r = cfg.grid()
    h2, dr2 = cfg.h * cfg.h, cfg.dr * cfg.dr
    d = h2 / dr2 + (m * m) * h2 / (2.0 * r * r) + (r ** 4 - r * r)
    face = np.arange(1, cfg.N) * cfg.dr
    e = -0.5 * h2 / dr2 * face / np.sqrt(r[:-1] * r[1:])
    return TridiagonalSym(d, e)


def _lower_bound(T: TridiagonalSym) -> float:
    # Gershgorin
    ae = np.abs(T.e)
    rad = np.zeros(T.n)
    rad[:-1] += ae
    rad[1:] += ae
    return float(np.min(T.d - rad)) - 1.0


def sector_eigenvalues(m: int, cfg: QuantumConfig, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Eigenvalues ``E_{n,m} <= E_max`` of the sector operator, ascending in ``n``."""
    T = radial_matrix(abs(m), cfg)
    hi = float(np.nextafter(cfg.E_max, np.inf))
    lo = _lower_bound(T)
    if lo >= hi:
        return np.empty(0)
    return tridiag_eigenvalues(T, (lo, hi), tol)


def sector_count(m: int, cfg: QuantumConfig) -> int:
    """Number of sector eigenvalues ``<= E_max`` from a single Sturm count."""
    return sturm_count(radial_matrix(abs(m), cfg), float(np.nextafter(cfg.E_max, np.inf)))


def joint_spectrum(cfg: QuantumConfig, threads: int = 1,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> list[SpectrumPoint]:
    """Joint spectrum of ``(H_hat, J_hat)`` below ``E_max``, sorted by ``(m, n)``.

    Sectors ``m`` and ``-m`` share one matrix, so only ``m >= 0`` is solved.
    The angular range grows past ``cfg.m_max`` until the outermost sector
    has nothing below ``E_max``.
    """
    m_hi = cfg.m_max if cfg.m_max is not None else 0
    while sector_count(m_hi + 1, cfg) > 0:
        m_hi += 1
    ms = list(range(0, m_hi + 1))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            spectra = list(pool.map(lambda m: sector_eigenvalues(m, cfg, tol), ms))
    else:
        spectra = [sector_eigenvalues(m, cfg, tol) for m in ms]
    by_m = dict(zip(ms, spectra))

    points = []
    for m in range(-m_hi, m_hi + 1):
        for n, E in enumerate(by_m[abs(m)]):
            points.append(SpectrumPoint(n, m, float(E), m * cfg.h))
    return points


def spectrum_array(points: Sequence[SpectrumPoint]) -> np.ndarray:
    """``(K, 2)`` array of ``(E, j)`` pairs."""
    return np.array([(p.E, p.j) for p in points], dtype=float).reshape(-1, 2)


def chi(u, epsilon: float) -> np.ndarray:
    """``(u1, u2) -> (u1, epsilon * u2)``; accepts a single pair or an ``(K, 2)`` array."""
    u = np.array(u, dtype=float)
    u[..., 1] *= epsilon
    return u


def chi_inverse(u, epsilon: float) -> np.ndarray:
    if epsilon == 0:
        raise ValueError("chi is not invertible for epsilon = 0")
    u = np.array(u, dtype=float)
    u[..., 1] /= epsilon
    return u


def perturbed_spectrum(points: Sequence[SpectrumPoint], epsilon: float) -> list[ComplexSpectrumPoint]:
    """Spectrum of ``H_hat + i*epsilon*J_hat``: each joint eigenvalue ``(E, j)`` maps to ``E + i*epsilon*j``."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    return [ComplexSpectrumPoint(*chi((p.E, p.j), epsilon)) for p in points]


def complex_array(points: Sequence[ComplexSpectrumPoint]) -> np.ndarray:
    return np.array([(p.re, p.im) for p in points], dtype=float).reshape(-1, 2)


def bohr_sommerfeld_defects(points: Sequence[SpectrumPoint], h: float) -> np.ndarray:
    """``I_r(E_{n,m}, m h) - h (n + 1/2)`` for every point at a regular value (NaN otherwise)."""
    out = np.full(len(points), np.nan)
    for k, p in enumerate(points):
        c = classical.EMValue(p.E, p.j)
        if classical.is_regular_value(c):
            out[k] = classical.radial_action(c) - h * (p.n + 0.5)
    return out


def phase_space_volume(E: float, samples: int = 400_000, seed: int = 0) -> float:
    """Monte-Carlo estimate of the 4D volume of ``{H <= E}``.

    The momentum integral is done exactly (a disc of area ``2 pi (E - V)``);
    the position integral is sampled uniformly over the square containing
    the classically allowed disc.
    """
    r_max = math.sqrt(0.5 * (1.0 + math.sqrt(1.0 + 4.0 * E))) if E >= 0 else classical.turning_points((E, 0.0))[1]
    rng = np.random.default_rng(seed)
    x = rng.uniform(-r_max, r_max, size=(samples, 2))
    s = np.sum(x * x, axis=1)
    f = 2.0 * np.pi * np.maximum(E - (s * s - s), 0.0)
    return float(f.mean() * (2.0 * r_max) ** 2)


def weyl_count(E: float, h: float, samples: int = 400_000, seed: int = 0) -> float:
    return phase_space_volume(E, samples, seed) / (2.0 * math.pi * h) ** 2


# Default loop around the focus-focus value for lattice transport. It crosses
# j = 0 below the origin between the n = 0 and n = 1 rows and starts at its
# top so that the cell crossing that narrow band is the unsheared one.
DEFAULT_QUANTUM_LOOP_CENTER = (0.4, 0.0)
DEFAULT_QUANTUM_LOOP_AXES = (0.5, 0.5)
DEFAULT_QUANTUM_LOOP_SAMPLES = 256
NON_ENCLOSING_QUANTUM_LOOP = ((0.9, 0.0), (0.3, 0.3))


def default_quantum_loop(samples: int = DEFAULT_QUANTUM_LOOP_SAMPLES, enclosing: bool = True) -> np.ndarray:
    center, axes = ((DEFAULT_QUANTUM_LOOP_CENTER, DEFAULT_QUANTUM_LOOP_AXES) if enclosing
                    else NON_ENCLOSING_QUANTUM_LOOP)
    return np.asarray(classical.ellipse_loop(center, axes, samples, start_angle=0.5 * math.pi, clockwise=False))


def lattice_scale(h: float) -> tuple[float, float]:
    """Rescaling used for lattice transport of the joint spectrum.

    The energy pitch ``2 pi h / T_r`` is close to ``2h`` near the bottom of
    the well (``T_r -> pi``), the angular pitch is exactly ``h``.
    """
    return (2.0 * h, h)


def lattice_monodromy(cloud, h: float, loop=None, scale=None,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> lattice.TransportResult:
    """Holonomy of a basic cell of ``cloud`` (``(K, 2)`` array of ``(E, j)``) around ``loop``.

    The cell is estimated at the first loop vertex. The loop must keep
    ``tol.loop_clearance`` (in scaled units) away from the focus-focus value.
    """
    loop = default_quantum_loop() if loop is None else np.asarray(loop, dtype=float)
    scale = lattice_scale(h) if scale is None else scale
    lattice.check_clearance(loop, [(0.0, 0.0)], tol.loop_clearance, scale)
    cell0 = lattice.estimate_cell(cloud, loop[0], scale, tol.snap_fraction)
    return lattice.transport_cell(cloud, cell0, loop, scale, tol,
                                  forbidden=[(0.0, 0.0)], clearance=tol.loop_clearance)


def quantum_monodromy(points: Sequence[SpectrumPoint], h: float, loop=None,
                      tol: Tolerances = DEFAULT_TOLERANCES) -> lattice.TransportResult:
    return lattice_monodromy(spectrum_array(points), h, loop, tol=tol)


def spectral_monodromy(points: Sequence[SpectrumPoint], h: float, epsilon: float, loop=None,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> lattice.TransportResult:
    """Same transport on ``chi^{-1}`` of the spectrum of ``H_hat + i epsilon J_hat``."""
    cloud = chi_inverse(complex_array(perturbed_spectrum(points, epsilon)), epsilon)
    return lattice_monodromy(cloud, h, loop, tol=tol)
