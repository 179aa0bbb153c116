"""Quantum monodromy read off the joint spectrum.

Computes the joint spectrum of (H, J) at h = 0.1, checks it against the
Bohr-Sommerfeld rule, then carries a lattice cell around the focus-focus
value and prints how it deforms.

    python demos/quantum_monodromy.py
"""
from __future__ import annotations

import time

import numpy as np

from champagne import lattice as lt
from champagne import quantum as q


def main(h=0.1):
    cfg = q.QuantumConfig(h=h)
    t = time.perf_counter()
    pts = q.joint_spectrum(cfg)
    print(f"{len(pts)} joint eigenvalues below E = {cfg.E_max} in {time.perf_counter() - t:.2f} s")
    print(f"Weyl estimate {q.weyl_count(cfg.E_max, h):.1f}")
    print("lowest levels (n, m, E):", [(p.n, p.m, round(p.E, 5)) for p in sorted(pts, key=lambda p: p.E)[:5]])

    d = q.bohr_sommerfeld_defects(pts, h)
    d = d[~np.isnan(d)]
    print(f"Bohr-Sommerfeld: max |I_r - h(n + 1/2)| = {np.max(np.abs(d)):.2e}  (h^2 = {h * h:.0e})")

    res = q.quantum_monodromy(pts, h)
    print("\ncell along the loop (scaled by (2h, h)); every 32nd step")
    s = np.array(q.lattice_scale(h))
    for k, cell in enumerate(res.cells[::32]):
        v1, v2 = cell.v1 / s, cell.v2 / s
        print(f"  step {32 * k:3d}: anchor ({cell.anchor[0]:+.3f}, {cell.anchor[1]:+.2f})  "
              f"v1 = ({v1[0]:+.2f}, {v1[1]:+.0f})  v2 = ({v2[0]:+.2f}, {v2[1]:+.0f})")
    print("holonomy:", res.matrix, " invariants (trace, det, unipotent):", lt.conjugacy_invariants(res.matrix))
    print("raw matrix before rounding:\n", np.round(res.raw_matrix, 4))
    print("non-enclosing loop:", q.quantum_monodromy(pts, h, q.default_quantum_loop(enclosing=False)).matrix)


if __name__ == "__main__":
    main()
