"""Spectral monodromy of the non-selfadjoint operator H + i eps J.

The spectrum of H + i eps J is the joint spectrum pushed through
chi(E, j) = (E, eps j). Undoing chi gives back the joint spectrum, so
lattice transport on it must return the quantum monodromy; this demo
also shows how eps squeezes the complex spectrum vertically.

    python demos/spectral_monodromy.py
"""
from __future__ import annotations

import math

import numpy as np

from champagne import quantum as q


def main(h=0.1):
    pts = q.joint_spectrum(q.QuantumConfig(h=h))
    for eps in (math.sqrt(h), 0.1, 0.01):
        z = q.complex_array(q.perturbed_spectrum(pts, eps))
        back = q.chi_inverse(z, eps)
        print(f"eps = {eps:.4f}: Im range [{z[:, 1].min():+.4f}, {z[:, 1].max():+.4f}], "
              f"round-trip error {np.max(np.abs(back - q.spectrum_array(pts))):.1e}, "
              f"monodromy {q.spectral_monodromy(pts, h, eps).matrix}")
    print("quantum monodromy for comparison:", q.quantum_monodromy(pts, h).matrix)


if __name__ == "__main__":
    main()
