"""With the drift ln(10/(1-t))/sqrt(1-t) no modulus of continuity survives.

phi(r, t) = exp(-a I(t)) eta((h(t) - r)/h(t)) is a subsolution whose
transition layer has width h(t) = sqrt(1-t) ln(10/(1-t)) -> 0, while its
height at r = h(t) never drops below exp(-a/ln 10).  A solution above phi
therefore jumps from 0 to a fixed value over a vanishing distance.
The type I drift, by contrast, lets the value at distance h(t) decay.
"""

import numpy as np

from swirlreg.core import LN10
from swirlreg.sharpness import (
    CounterexampleSpec,
    h_inv2_integral,
    modulus_collapse_experiment,
    smooth_eta_threshold,
    verify_subsolution,
)

spec = CounterexampleSpec.default()
print(f"cosine eta admissible from a = pi^2/2 = {spec.a:.4f}; a smooth eta needs a >= {smooth_eta_threshold():.3f}")
print(f"int_0^1 h^-2 = {float(h_inv2_integral(1.0)):.12f}  (1/ln 10 = {1 / LN10:.12f})")

sub = verify_subsolution(spec)
print(f"min residual of phi on the evaluation grid: {sub['min_residual']:.2e} (pass: {sub['pass']})")

rep = modulus_collapse_experiment(spec)
tr, co = rep.trace, rep.contrast
print(f"\nthreshold 0.9 exp(-a/ln 10) = {rep.certificate['threshold']:.4f}")
print("  1 - t      h(t)     u(h, t)   phi(h, t)   type I contrast")
for i in np.unique(np.geomspace(1, tr["t"].size, 10).astype(int) - 1):
    print(f"  {1 - tr['t'][i]:<9.1e} {tr['h'][i]:.4f}   {tr['u'][i]:.4f}    {tr['phi'][i]:.4f}      {co['u'][i]:.4f}")
print("\nflags:", rep.flags)
