"""Classical monodromy of the champagne bottle, step by step.

Walks a loop of regular values around the focus-focus value (0, 0),
prints the action data along the way and shows how the rotation angle
picks up a full turn, which is the monodromy.

    python demos/classical_monodromy.py
"""
from __future__ import annotations

import math

from champagne import classical as cl


def main():
    print("well bottom: r =", cl.R_WELL, " E =", cl.E_MIN)
    print("focus-focus point at the origin:", cl.classify_point((0, 0, 0, 0)).value)
    for r in (cl.R_WELL, 0.8, 1.0):
        (E, j), _ = cl.critical_value_curve(r)
        print(f"  critical value at r = {r:.4f}: E = {E:+.6f}, j = +-{j:.6f}, "
              f"residual {cl.rank_one_residual(r):.1e}")

    loop = cl.default_enclosing_loop(256)
    print("\nalong the enclosing loop (every 32nd vertex)")
    print("      E          j         I_r        T_r       Theta")
    for c in loop[::32]:
        a = cl.action_data(c)
        print(f"{c.E:+.5f}  {c.j:+.5f}  {a.I_r:.6f}  {a.T_r:.6f}  {a.Theta:+.6f}")

    w = cl.rotation_winding(loop)
    print(f"\nrotation angle winds by {w:.9f} = {w / (2 * math.pi):+.6f} turns")
    M = cl.classical_monodromy(loop)
    print("monodromy (basis: S^1 orbit, radial cycle):", M)
    print("non-enclosing loop:", cl.classical_monodromy(cl.default_non_enclosing_loop()))
    print("reversed loop:", cl.classical_monodromy(loop[::-1]))


if __name__ == "__main__":
    main()
