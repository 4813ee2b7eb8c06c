"""In the frame z = rho + A(t) the drift disappears and the boundary moves instead.

The same solution is recomputed as heat flow on {z > A(t)} with a cut-cell
boundary, and the two solvers are compared at three resolutions.  Then we
measure how much of a parabolic cube centred on the moving boundary sits
outside the domain: a positive fraction when the boundary runs away
(increasing), at least one half when it runs towards the domain (decreasing).
"""

import math

from swirlreg import DriftProfile, Grid1D, HalfLineProblem, InitialData1D, TimeGrid, solve_halfline
from swirlreg.moving_frame import (
    DECREASING,
    INCREASING,
    MovingDomain,
    compare_with_halfline,
    exterior_fraction_reference,
    exterior_measure_fraction,
    solve_moving_domain,
)

drift = DriftProfile.type_i(1.0, 1.0)
prev = None
print("spacing   relative gap   order")
for n in (64, 128, 256):
    h = 1 / n
    times = TimeGrid.graded(1.0, h, h / 4, t_end=0.9)
    u = solve_halfline(HalfLineProblem(drift, InitialData1D.linear(), Grid1D.uniform(20.0, h), times))
    dom = MovingDomain(drift, INCREASING, 20.0 + float(drift.A(0.9)), times)
    nu = solve_moving_domain(dom, InitialData1D.linear(), h, times)
    rel, _, where = compare_with_halfline(u, nu, drift)
    order = "" if prev is None else f"{math.log2(prev / rel):.2f}"
    print(f"1/{n:<6d}  {rel:.3e}      {order}")
    prev = rel

delta = 0.05
print("\nexterior fraction of the cube Q(b(t), t, r), delta = 0.05")
print("   t        r        increasing   decreasing   (adaptive quadrature)")
for t in (delta**2, 0.5, 0.99, 1 - 1e-4):
    for r in (delta / 4, delta):
        inc = exterior_measure_fraction(MovingDomain(drift, INCREASING), t, r)
        dec = exterior_measure_fraction(MovingDomain(drift, DECREASING), t, r)
        ref = exterior_fraction_reference(MovingDomain(drift, INCREASING), t, r)
        print(f"  {t:<8.4g} {r:<8.4g} {inc:10.6f}   {dec:10.6f}   {ref:.6f}")
