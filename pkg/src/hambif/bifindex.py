"""Bifurcation indices, local branching verdicts and global sum conditions.

A critical point ``x0`` with block-diagonal Hessian ``L`` and a candidate
parameter ``lambda0 = j0 / sqrt(nu0)`` are combined into the integer sequence

    eta_j = ind(grad H, x0) * (Morse jump of Q_j at lambda0) / 2,

and a nonzero entry certifies a branch of nontrivial periodic solutions.
Four algebraic criteria guarantee a nonzero entry without computing it;
:func:`check_local` evaluates all of them and keeps the whole trail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .bifalgebra import (
    MATCH_TOL,
    BlockHessian,
    CandidateParam,
    Certificate,
    MorseJump,
    Route,
    _definite_block,
    _positive,
    isolation_epsilon,
    joint_diagonalize,
    match_nu,
    morse_jump_commuting,
    morse_jump_definite,
    morse_jump_direct,
    jump_nonzero_certificates,
    product_spectrum,
    y_sets,
)

__all__ = [
    "DEFAULT_JMAX",
    "BifurcationIndex",
    "CriticalPoint",
    "EmanationReport",
    "GlobalClassification",
    "GlobalHypothesisError",
    "GlobalSum",
    "IndexSource",
    "InternalConsistencyError",
    "Theorem",
    "TrailEntry",
    "Verdict",
    "bifurcation_index",
    "candidates",
    "check_local",
    "classify_global",
    "emanation_report",
    "global_sum_check",
]

DEFAULT_JMAX = 8
DIRECT_CROSSCHECK_MAX_N = 4


class InternalConsistencyError(RuntimeError):
    """Two independent computations of the same integer disagree."""

    def __init__(self, message: str, evidence=None):
        super().__init__(message)
        self.evidence = evidence


class GlobalHypothesisError(ValueError):
    def __init__(self, message: str, offending: list[int]):
        super().__init__(message)
        self.offending = offending


class IndexSource(Enum):
    COMPUTED = "computed"
    SHORTCUT = "shortcut"
    USER_ASSERTED = "user_asserted"


class Theorem(Enum):
    """Sufficient criteria for a nonzero bifurcation index."""

    DEFINITE_BLOCK = "definite_block"
    COMMUTING_Y_SETS = "commuting_y_sets"
    EIGENSPACE_INTERSECTION = "eigenspace_intersection"
    ODD_MULTIPLICITY = "odd_multiplicity"


# Evaluation order; the first criterion that passes names the certificate.
THEOREM_ORDER = (
    Theorem.DEFINITE_BLOCK,
    Theorem.COMMUTING_Y_SETS,
    Theorem.EIGENSPACE_INTERSECTION,
    Theorem.ODD_MULTIPLICITY,
)


@dataclass(frozen=True)
class CriticalPoint:
    x0: np.ndarray
    hessian: BlockHessian
    index: int
    index_source: IndexSource = IndexSource.USER_ASSERTED
    label: str = ""

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).ravel()
        if x0.size != 2 * self.hessian.n:
            raise ValueError(f"point has dimension {x0.size}, Hessian blocks need {2 * self.hessian.n}")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "index", int(self.index))

    @property
    def isolated_by_scan(self) -> bool:
        return self.index_source is IndexSource.COMPUTED


@dataclass(frozen=True)
class BifurcationIndex:
    point: CriticalPoint
    candidate: CandidateParam
    jmax: int
    etas: dict[int, int]
    evidence: dict[int, tuple[MorseJump, ...]]

    @property
    def nonzero(self) -> dict[int, int]:
        return {j: e for j, e in self.etas.items() if e != 0}


@dataclass(frozen=True)
class TrailEntry:
    hypothesis: str
    passed: bool
    evidence: str


@dataclass(frozen=True)
class EmanationReport:
    # (j, period) for every nonzero eta_j: 2 pi lambda0 / j
    predicted_periods: tuple[tuple[int, float], ...]
    target_period: float | None
    minimal_period_certified: bool
    trail: tuple[TrailEntry, ...]


@dataclass(frozen=True)
class Verdict:
    candidate: CandidateParam
    certified_by: Theorem | None
    trail: tuple[TrailEntry, ...]
    index: BifurcationIndex | None = None
    emanation: EmanationReport | None = None

    @property
    def certified(self) -> bool:
        return self.certified_by is not None


def _choose_jumps(L: BlockHessian, lambda0: float, j: int, eps: float) -> tuple[MorseJump, ...]:
    """Jump by the preferred closed form, plus every other route used as a check."""
    jumps = []
    if _definite_block(L) is not None:
        jumps.append(morse_jump_definite(L, lambda0, j, eps))
    if L.commutes():
        jumps.append(morse_jump_commuting(L, lambda0, j, eps))
    if not jumps or L.n <= DIRECT_CROSSCHECK_MAX_N:
        jumps.append(morse_jump_direct(L, lambda0, j, eps))
    return tuple(jumps)


def bifurcation_index(cp: CriticalPoint, cand: CandidateParam, jmax: int = DEFAULT_JMAX) -> BifurcationIndex:
    """``eta_j`` for ``j = 1..jmax``.

    The Definite route is preferred, then Commuting, then Direct; every
    applicable route is computed and they must agree exactly.  For a
    parameter outside the candidate set all entries are zero, and that is
    verified rather than assumed.
    """
    if jmax < 1:
        raise ValueError("jmax must be at least 1")
    L = cp.hessian
    lam = cand.lambda0
    eps = isolation_epsilon(L, lam, require_member=False)
    etas: dict[int, int] = {}
    evidence: dict[int, tuple[MorseJump, ...]] = {}
    for j in range(1, jmax + 1):
        jumps = _choose_jumps(L, lam, j, eps)
        values = {m.jump for m in jumps}
        if len(values) != 1:
            raise InternalConsistencyError(
                f"Morse-jump routes disagree at j={j}, lambda0={lam!r}: "
                + ", ".join(f"{m.route.value}={m.jump}" for m in jumps),
                jumps,
            )
        jump = jumps[0].jump
        if jump % 2:
            raise InternalConsistencyError(f"odd Morse jump {jump} at j={j}", jumps)
        if jump and not match_nu(L, lam, j):
            raise InternalConsistencyError(
                f"nonzero Morse jump {jump} at j={j} although lambda0={lam!r} is not in Lambda_j", jumps)
        etas[j] = cp.index * jump // 2
        evidence[j] = jumps
    return BifurcationIndex(cp, cand, jmax, etas, evidence)


def _relevant_js(L: BlockHessian, lam: float) -> list[int]:
    js = set()
    for nu, _ in _positive(L):
        j = round(lam * math.sqrt(nu))
        if j >= 1 and abs(lam * math.sqrt(nu) - j) <= MATCH_TOL * j:
            js.add(j)
    return sorted(js)


def _criterion(theorem: Theorem, L: BlockHessian, cand: CandidateParam, certs: list[Certificate]):
    """Return ``(passed, evidence)`` for one sufficient criterion."""
    if theorem is Theorem.DEFINITE_BLOCK:
        d = _definite_block(L)
        if d is None:
            return False, "neither A nor B is strictly definite"
        s, name = d
        return True, f"{name} is strictly {'positive' if s > 0 else 'negative'} definite"
    if theorem is Theorem.COMMUTING_Y_SETS:
        joint = joint_diagonalize(L)
        if joint is None:
            return False, "AB != BA"
        counts = []
        for j in _relevant_js(L, cand.lambda0):
            _, yp, ym = y_sets(L, cand.lambda0, j, joint)
            counts.append(f"j={j}: #Y+={len(yp)}, #Y-={len(ym)}")
            if len(yp) != len(ym):
                return True, "; ".join(counts)
        return False, "; ".join(counts) or "all Y-sets empty"
    kind = Route.EIGENSPACE_INTERSECT if theorem is Theorem.EIGENSPACE_INTERSECTION else Route.ODD_MULT
    hits = [c for c in certs if c.kind is kind]
    if hits:
        return True, hits[0].detail
    if kind is Route.ODD_MULT:
        return False, f"mu(nu0) = {cand.nu_multiplicity} is even"
    return False, "no pair of eigenspaces of A and B meets in more than mu/2 dimensions"


def check_local(cp: CriticalPoint, cand: CandidateParam, jmax: int = DEFAULT_JMAX) -> Verdict:
    """Evaluate every local branching criterion at ``(x0, lambda0)``.

    Certification requires a nonzero index and a valid candidate, plus one
    passing criterion; that criterion is then cross-checked against the
    computed bifurcation index so a certificate can never outrun the index.
    """
    L = cp.hessian
    trail: list[TrailEntry] = []

    isolation = ("degree scan found no second zero" if cp.isolated_by_scan
                 else f"isolation asserted ({cp.index_source.value})")
    a1 = cp.index != 0
    trail.append(TrailEntry("A1: nonzero index, isolated zero", a1, f"index={cp.index}; {isolation}"))

    spec = product_spectrum(L)
    matches = [(nu, m) for nu, m in spec.positive if abs(nu - cand.nu) <= MATCH_TOL * max(1.0, nu)]
    a2 = bool(matches)
    trail.append(TrailEntry(
        "A2: block-diagonal Hessian, nu0 in positive spectrum of AB", a2,
        f"nu0={cand.nu:.15g}; positive spectrum {[round(nu, 12) for nu, _ in spec.positive]}"))

    a3 = bool(match_nu(L, cand.lambda0, cand.j, spec)) and a2
    trail.append(TrailEntry(
        "A3: lambda0 = j0 / sqrt(nu0)", a3,
        f"lambda0={cand.lambda0:.15g}, j0={cand.j}, j0/sqrt(nu0)={cand.j / math.sqrt(cand.nu):.15g}"))

    if a2:
        mu = matches[0][1]
        cand = CandidateParam(cand.j, matches[0][0], cand.lambda0, mu)
    certs = jump_nonzero_certificates(L, cand.lambda0, cand.j) if a3 else []

    winner = None
    for theorem in THEOREM_ORDER:
        passed, evidence = _criterion(theorem, L, cand, certs) if a3 else (False, "candidate invalid")
        trail.append(TrailEntry(f"criterion {theorem.value}", passed, evidence))
        if passed and winner is None:
            winner = theorem

    certified_by = winner if (a1 and a2 and a3) else None
    index = bifurcation_index(cp, cand, max(jmax, cand.j))
    if certified_by is not None:
        if not index.nonzero:
            raise InternalConsistencyError(
                f"certified by {certified_by.value} but every eta_j vanishes for j <= {index.jmax}", index)
        for j in index.nonzero:
            direct = morse_jump_direct(L, cand.lambda0, j)
            if direct.jump == 0:
                raise InternalConsistencyError(f"eta_{j} != 0 but the direct Morse jump is 0", direct)
    verdict = Verdict(cand, certified_by, tuple(trail), index)
    if verdict.certified:
        verdict = Verdict(cand, certified_by, tuple(trail), index, emanation_report(cp, cand, verdict))
    return verdict


def _is_natural(r: float) -> int | None:
    k = round(r)
    if k >= 1 and abs(r - k) <= MATCH_TOL * k:
        return k
    return None


def emanation_report(cp: CriticalPoint, cand: CandidateParam, verdict: Verdict) -> EmanationReport:
    """Periods of the emanating trajectories and the minimal-period test."""
    if not verdict.certified:
        raise ValueError("emanation report needs a certified verdict")
    index = verdict.index if verdict.index is not None else bifurcation_index(cp, cand, max(DEFAULT_JMAX, cand.j))
    lam = cand.lambda0
    periods = tuple((j, 2.0 * math.pi * lam / j) for j in sorted(index.nonzero))

    trail = []
    if cand.j != 1:
        trail.append(TrailEntry("j0 = 1", False, f"j0={cand.j}"))
        return EmanationReport(periods, None, False, tuple(trail))
    trail.append(TrailEntry("j0 = 1", True, ""))
    target = 2.0 * math.pi / math.sqrt(cand.nu)
    ok = True
    for nu, _ in _positive(cp.hessian):
        if abs(nu - cand.nu) <= MATCH_TOL * max(1.0, nu):
            continue
        r = math.sqrt(nu / cand.nu)
        k = _is_natural(r)
        trail.append(TrailEntry(f"sqrt({nu:.12g}/{cand.nu:.12g}) not natural", k is None, f"ratio {r:.12g}"))
        ok &= k is None
    return EmanationReport(periods, target, ok, tuple(trail))


@dataclass(frozen=True)
class GlobalSum:
    sums: dict[int, int]
    per_point: tuple[dict[int, int], ...]
    hypothetical: bool = True

    @property
    def bounded_branch_inconsistent(self) -> bool:
        """True when some sum is nonzero: such a set cannot be the trivial
        part of one bounded branch, so a branch through it is unbounded."""
        return any(v != 0 for v in self.sums.values())


def global_sum_check(points: Sequence[tuple[CriticalPoint, CandidateParam]], jmax: int = DEFAULT_JMAX) -> GlobalSum:
    """Sum the bifurcation indices of a user-supplied set of trivial solutions.

    The set is hypothetical: which pairs lie on a common branch cannot be
    computed, so the result only says whether the set could be the whole
    trivial part of a bounded branch.
    """
    per = tuple(bifurcation_index(cp, cand, jmax).etas for cp, cand in points)
    sums = {j: sum(e[j] for e in per) for j in range(1, jmax + 1)}
    return GlobalSum(sums, per)


@dataclass(frozen=True)
class GlobalClassification:
    s: tuple[int, ...]
    s_plus: tuple[int, ...]
    s_minus: tuple[int, ...]
    # (point position, omega, mu(omega))
    p: tuple[tuple[int, float, int], ...]
    n: tuple[tuple[int, float, int], ...]
    E: int
    findings: tuple[str, ...]
    unbounded_every_j: bool
    all_unbounded: bool
    at_least_unbounded: int | None
    total_degree: int


def _points_of(problem) -> list[CriticalPoint]:
    if hasattr(problem, "critical_points"):
        return list(problem.critical_points)
    return list(problem)


def classify_global(problem) -> GlobalClassification:
    """Split the critical points by the sign of ``ind * s`` and evaluate the
    global corollaries.

    ``problem`` is anything with a ``critical_points`` list, or the list
    itself; the list is taken to be the complete zero set of the gradient.
    Every point needs a strictly definite block.
    """
    points = _points_of(problem)
    signs = []
    offending = []
    for i, cp in enumerate(points):
        d = _definite_block(cp.hessian)
        if d is None:
            offending.append(i)
        else:
            signs.append(d[0])
    if offending:
        raise GlobalHypothesisError(
            f"no strictly definite block at critical point(s) {offending}", offending)

    s_plus, s_minus, p, n = [], [], [], []
    positive = []
    for i, (cp, s) in enumerate(zip(points, signs)):
        pos = _positive(cp.hessian)
        positive.append(pos)
        v = cp.index * s
        if v > 0:
            s_plus.append(i)
            p.extend((i, nu, m) for nu, m in pos)
        elif v < 0:
            s_minus.append(i)
            n.extend((i, nu, m) for nu, m in pos)
    E = sum(points[i].index * signs[i] * m for i, _, m in p + n)
    total_degree = sum(cp.index for cp in points)

    findings = []
    unbounded_every_j = False
    all_unbounded = False
    at_least = None
    if E != 0:
        unbounded_every_j = True
        findings.append(f"E(H)={E} != 0: for every j some branch C(xi, j/sqrt(omega)) over p(H) u n(H) is unbounded")
        if not p or not n:
            all_unbounded = True
            findings.append("one of p(H), n(H) is empty: every branch C(xi, j/sqrt(omega)) is unbounded, for all j")
        sizes = {abs(points[i].index * m) for i, _, m in p + n}
        if len(sizes) == 1:
            at_least = abs(len(p) - len(n))
            findings.append(f"|ind * mu| = {sizes.pop()} is constant: for every j at least "
                            f"|#p - #n| = {at_least} of the branches are unbounded")
    if p or n:
        nonzero = [i for i, cp in enumerate(points) if cp.index != 0]
        b = {len(positive[i]) for i in nonzero}
        s_set = {signs[i] for i, _, _ in p + n}
        mu_set = {m for _, _, m in p + n}
        if total_degree != 0 and len(b) == 1 and len(s_set) == 1 and len(mu_set) == 1:
            unbounded_every_j = True
            findings.append(f"total degree {total_degree} != 0 with #positive spectrum, s and mu constant: "
                            "for every j some branch is unbounded")
    if len(points) == 1 and points[0].index != 0 and positive[0]:
        unbounded_every_j = True
        all_unbounded = True
        findings.append("single critical point with nonzero index: every branch C(x0, j0/sqrt(nu0)) is unbounded")

    return GlobalClassification(
        tuple(signs), tuple(s_plus), tuple(s_minus), tuple(p), tuple(n), E,
        tuple(findings), unbounded_every_j, all_unbounded, at_least, total_degree,
    )


def candidates(cp: CriticalPoint, jmax: int = DEFAULT_JMAX) -> list[CandidateParam]:
    """All candidates ``j0 / sqrt(nu)`` with ``j0 <= jmax``, sorted by parameter."""
    out = [CandidateParam.from_nu(j, nu, m) for nu, m in _positive(cp.hessian) for j in range(1, jmax + 1)]
    return sorted(out, key=lambda c: (c.lambda0, c.nu))
