"""Shooting for the predicted orbits, and watching the family grow.

The theory predicts small periodic orbits near lambda0 = 1/2 for the
strict-minimum example.  Here we find one numerically, compare its minimal
period with the predicted limit, show that an off-grid lambda finds
nothing, and follow the family in amplitude until the solver gives up.
"""

import math

import numpy as np

from hambif.orbits import OrbitRecord, continue_in_amplitude, shoot_periodic, trajectory_metrics
from hambif.problem import registry_problem

spec = registry_problem("paper-example-exmin")
cps = spec.critical_points[0]
fld, x0, L = spec.field, cps.point, cps.declared

rec = shoot_periodic(fld, x0, 0.5, 1e-2, hessian=L)
dist, period = trajectory_metrics(rec, x0)
print(f"converged at amplitude {rec.requested_amplitude:g} (asked for 1e-2), lambda = {rec.lam:.8f}")
print(f"residual {rec.residual:.2e}, minimal period {period:.5f} vs pi = {math.pi:.5f}, "
      f"distance to the equilibrium {dist:.2e}")

off = shoot_periodic(fld, x0, 0.37, 1e-2, hessian=L)
print("lambda = 0.37:", type(off).__name__, "-", off.reason)

print("amplitude continuation:")
for r in continue_in_amplitude(fld, x0, 0.5, np.geomspace(1e-3, 2e-2, 8), hessian=L):
    if isinstance(r, OrbitRecord):
        print(f"  amplitude {r.requested_amplitude:.2e}: lambda {r.lam:.8f}, residual {r.residual:.1e}")
    else:
        print("  stopped:", r.reason)
