"""Centralised numerical tolerances.

Every tolerance that influences a pass/fail decision somewhere in the
package lives here, so a run can be reproduced from one record.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    # numerics
    quad_n0: int = 128
    quad_rtol: float = 1e-10
    quad_max_n: int = 1 << 17
    eig_rtol: float = 1e-12
    # classical
    rank_tol: float = 1e-8
    axis_tol: float = 1e-8
    winding_tol: float = 1e-3
    max_step_dtheta: float = 0.5 * 3.141592653589793
    # lattice
    snap_fraction: float = 0.35
    round_tol: float = 0.2
    # minimum distance (in scaled lattice units) between a quantum loop and (0, 0)
    loop_clearance: float = 0.4

    def updated(self, **overrides) -> "Tolerances":
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise KeyError(f"unknown tolerance(s): {sorted(bad)}")
        return replace(self, **overrides)


DEFAULT_TOLERANCES = Tolerances()
