"""A strict minimum: the index is known for free, and every j is unbounded.

For a strict local extremum the topological index is 1 without any
computation.  We cross-check that against subdivision, then look at the
local verdicts and the global classification, which for a single point
with a definite block says every candidate branch is unbounded.
"""

from hambif import (
    CandidateParam,
    CriticalPoint,
    IndexSource,
    VectorField,
    check_local,
    classify_global,
    lambda_window,
    registry_problem,
    topological_index,
)
from hambif.degree import IndexKind, index_shortcut

spec = registry_problem("paper-example-exmin")
cps = spec.critical_points[0]
L = cps.declared

by_subdivision, _ = topological_index(VectorField(4, spec.gradient), cps.point)
print("index: shortcut", index_shortcut(IndexKind.STRICT_EXTREMUM), "/ subdivision", by_subdivision)

print("candidate parameters in [0.1, 2.5]:", [round(p.lam, 12) for p in lambda_window(L, 0.1, 2.5)])

cp = CriticalPoint(cps.point, L, 1, IndexSource.SHORTCUT)
for j0 in range(1, 5):
    v = check_local(cp, CandidateParam.from_nu(j0, 4.0))
    print(f"lambda0 = {v.candidate.lambda0}: {v.certified_by.value}, eta = {v.index.nonzero}")

g = classify_global([cp])
print("E =", g.E)
for f in g.findings:
    print(" -", f)
