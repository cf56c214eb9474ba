import math

import numpy as np
import pytest

from generators import commuting_block, definite_block, random_block
from hambif.bifalgebra import BlockHessian, CandidateParam, lambda_j, morse_jump_direct
from hambif.bifindex import (
    CriticalPoint,
    GlobalHypothesisError,
    IndexSource,
    InternalConsistencyError,
    Theorem,
    bifurcation_index,
    candidates,
    check_local,
    classify_global,
    emanation_report,
    global_sum_check,
)

EX1 = BlockHessian(np.diag([2.0, 4.0, -2.0]), np.array([[0, 0, 0], [0, 2, -1], [0, -1, 2]], float))
EXMIN = BlockHessian(np.diag([2.0, 4.0]), np.diag([2.0, 0.0]))
NU0 = 2 + 2 * math.sqrt(7)


def point(L, index, x0=None):
    x0 = np.zeros(2 * L.n) if x0 is None else x0
    return CriticalPoint(x0, L, index, IndexSource.USER_ASSERTED)


def test_critical_point_checks_dimension():
    with pytest.raises(ValueError):
        CriticalPoint(np.zeros(3), EXMIN, 1)


def test_exmin_index_window():
    bi = bifurcation_index(point(EXMIN, 1), CandidateParam.from_nu(1, 4.0), 3)
    assert bi.etas == {1: 1, 2: 0, 3: 0}
    assert bi.nonzero == {1: 1}


def test_ex1_index_nonzero():
    bi = bifurcation_index(point(EX1, -1), CandidateParam.from_nu(1, NU0), 4)
    assert bi.etas[1] == -1


def test_zero_index_gives_zero_etas():
    bi = bifurcation_index(point(EXMIN, 0), CandidateParam.from_nu(1, 4.0), 5)
    assert set(bi.etas.values()) == {0}


@pytest.mark.parametrize("j0", [1, 2, 3, 5])
def test_exmin_certified_definite(j0):
    v = check_local(point(EXMIN, 1), CandidateParam.from_nu(j0, 4.0))
    assert v.certified_by is Theorem.DEFINITE_BLOCK
    assert v.index.etas[j0] == 1
    assert all(t.passed for t in v.trail if t.hypothesis.startswith("A"))


@pytest.mark.parametrize("j0", [1, 2, 3, 4])
def test_ex1_certified_odd(j0):
    v = check_local(point(EX1, -1), CandidateParam.from_nu(j0, NU0))
    assert v.certified_by is Theorem.ODD_MULTIPLICITY
    assert v.index.etas[j0] == -1


def test_trail_records_every_criterion():
    v = check_local(point(EXMIN, 1), CandidateParam.from_nu(1, 4.0))
    names = [t.hypothesis for t in v.trail]
    assert len(names) == 7
    # all four fire for exmin: A > 0, commuting, V_A(2) & V_B(2) = span(e1), mu = 1
    assert [t.passed for t in v.trail[3:]] == [True, True, True, True]


def test_index_zero_not_certified():
    v = check_local(point(EXMIN, 0), CandidateParam.from_nu(1, 4.0))
    assert not v.certified
    assert not v.trail[0].passed and v.trail[0].hypothesis.startswith("A1")


def test_off_grid_not_certified(rng):
    cp = point(EXMIN, 1)
    for lam in (0.37, 0.61, 1.23, 0.499):
        v = check_local(cp, CandidateParam(1, 4.0, lam))
        assert not v.certified
        assert set(v.index.etas.values()) == {0}
    for _ in range(50):
        L = definite_block(rng, 3)
        grid = [c.lambda0 for j in (1, 2, 3) for c in lambda_j(L, j)]
        lam = float(rng.uniform(0.05, 3))
        if any(abs(lam - g) < 1e-6 for g in grid):
            continue
        bi = bifurcation_index(point(L, 1), CandidateParam(1, 1.0, lam), 6)
        assert set(bi.etas.values()) == {0}


def test_emanation_examples():
    cp = point(EXMIN, 1)
    cand = CandidateParam.from_nu(1, 4.0)
    e = check_local(cp, cand).emanation
    assert e.target_period == pytest.approx(math.pi, rel=1e-15)
    assert e.minimal_period_certified
    assert e.predicted_periods == ((1, pytest.approx(math.pi)),)
    e1 = check_local(point(EX1, -1), CandidateParam.from_nu(1, NU0)).emanation
    assert e1.target_period == pytest.approx(2 * math.pi / math.sqrt(NU0), rel=1e-12)
    assert e1.minimal_period_certified


def test_integer_ratio_blocks_minimal_period():
    L = BlockHessian(np.eye(2), np.diag([1.0, 4.0]))
    v = check_local(point(L, 1), CandidateParam.from_nu(1, 1.0))
    assert v.certified
    assert v.emanation.target_period == pytest.approx(2 * math.pi)
    assert not v.emanation.minimal_period_certified


def test_emanation_needs_certified_verdict():
    v = check_local(point(EXMIN, 0), CandidateParam.from_nu(1, 4.0))
    with pytest.raises(ValueError):
        emanation_report(point(EXMIN, 0), v.candidate, v)


def test_soundness_chain_random(rng):
    """Certified implies a nonzero eta implies a nonzero direct jump."""
    certified = 0
    makers = (lambda: random_block(rng, 3), lambda: definite_block(rng, 3), lambda: commuting_block(rng, 3)[0])
    while certified < 200:
        L = makers[certified % 3]()
        cp = point(L, int(rng.choice([-1, 1, 2])))
        for cand in candidates(cp, 3):
            v = check_local(cp, cand, 3)
            if not v.certified:
                continue
            certified += 1
            assert v.index.nonzero
            for j in v.index.nonzero:
                assert morse_jump_direct(L, cand.lambda0, j).jump != 0


def test_route_disagreement_raises(monkeypatch):
    import hambif.bifindex as bx

    real = bx.morse_jump_direct

    def broken(L, lam, j, eps=None):
        m = real(L, lam, j, eps)
        return type(m)(m.j, m.lambda0, m.epsilon, m.jump + 2, m.route)

    monkeypatch.setattr(bx, "morse_jump_direct", broken)
    with pytest.raises(InternalConsistencyError) as err:
        bx.bifurcation_index(point(EXMIN, 1), CandidateParam.from_nu(1, 4.0), 2)
    assert err.value.evidence


def test_scaling_covariance(rng):
    for _ in range(50):
        L = definite_block(rng, 3)
        c = float(rng.uniform(0.2, 5))
        cp, cps = point(L, 1), point(L.scaled(c), 1)
        a, b = candidates(cp, 3), candidates(cps, 3)
        assert np.allclose([x.lambda0 / c for x in a], [x.lambda0 for x in b], rtol=1e-9)
        for x, y in zip(a, b):
            assert bifurcation_index(cp, x, 4).etas == bifurcation_index(cps, y, 4).etas


def test_global_sum_examples():
    cand = CandidateParam.from_nu(1, 4.0)
    single = global_sum_check([(point(EXMIN, 1), cand)], 3)
    assert single.sums == {1: 1, 2: 0, 3: 0} and single.bounded_branch_inconsistent
    pair = global_sum_check([(point(EXMIN, 1), cand), (point(EXMIN, -1), cand)], 3)
    assert set(pair.sums.values()) == {0} and not pair.bounded_branch_inconsistent
    assert pair.hypothetical


def test_classify_exmin():
    g = classify_global([point(EXMIN, 1)])
    assert g.s_plus == (0,) and g.s_minus == ()
    assert len(g.p) == 1 and g.n == ()
    assert g.p[0][0] == 0 and g.p[0][1] == pytest.approx(4.0) and g.p[0][2] == 1
    assert g.E == 1 and g.unbounded_every_j and g.all_unbounded


def test_classify_needs_definite_block():
    with pytest.raises(GlobalHypothesisError) as err:
        classify_global([point(EXMIN, 1), point(EX1, -1)])
    assert err.value.offending == [1]


def test_classify_empty_p_and_n():
    L = BlockHessian(np.eye(1), -np.eye(1))
    g = classify_global([point(L, -1)])
    assert g.p == () and g.n == () and g.E == 0
    assert not g.findings
