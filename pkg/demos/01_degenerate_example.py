"""A degenerate equilibrium where index theory still decides bifurcation.

The 6-dimensional registry example has a Hessian with a zero eigenvalue, so
the usual nondegenerate Lyapunov argument is unavailable.  We compute the
topological index by boundary subdivision, then ask which of the candidate
parameters lambda_j = j / sqrt(nu) are certified bifurcation points.
"""

import math
import time

import numpy as np

from hambif import (
    CandidateParam,
    CriticalPoint,
    IndexSource,
    VectorField,
    check_local,
    product_spectrum,
    registry_problem,
    topological_index,
)

spec = registry_problem("paper-example-1")
cps = spec.critical_points[0]
L = cps.declared

print("A =\n", L.A)
print("B =\n", L.B)
print("det L =", np.linalg.det(L.L), "(degenerate, so no shortcut)")

ps = product_spectrum(L)
print("spectrum of AB:", [(round(nu, 12), m) for nu, m in ps.real])

t0 = time.perf_counter()
index, cert = topological_index(VectorField(6, spec.gradient), cps.point)
print(f"index by subdivision: {index} ({cert.grade}, {cert.cells} cells, {time.perf_counter() - t0:.2f} s)")

cp = CriticalPoint(cps.point, L, index, IndexSource.COMPUTED)
nu0 = 2 + 2 * math.sqrt(7)
for j0 in range(1, 5):
    v = check_local(cp, CandidateParam.from_nu(j0, nu0))
    print(f"lambda0 = {v.candidate.lambda0:.6f} (j0={j0}): certified by {v.certified_by.value}, "
          f"eta = {v.index.nonzero}")

e = check_local(cp, CandidateParam.from_nu(1, nu0)).emanation
print(f"orbits emanating at j0=1 have minimal period -> {e.target_period:.12f} "
      f"(2 pi / sqrt(nu0) = {2 * math.pi / math.sqrt(nu0):.12f})")
