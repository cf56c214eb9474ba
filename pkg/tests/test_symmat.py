import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hambif.symmat import (
    Definiteness,
    abs_sqrt_sgn,
    cluster_tol,
    definiteness,
    kernel_dim,
    morse_index,
    spectrum,
    symmetrize,
)


def _pairs(d):
    return [(round(p.value, 12), p.multiplicity) for p in d.eigenpairs]


def test_diagonal_spectrum():
    assert _pairs(spectrum(np.diag([2.0, 4.0, -2.0]))) == [(-2.0, 1), (2.0, 1), (4.0, 1)]


def test_tridiagonal_block_spectrum():
    B = [[0, 0, 0], [0, 2, -1], [0, -1, 2]]
    assert _pairs(spectrum(B)) == [(0.0, 1), (1.0, 1), (3.0, 1)]


def test_identity_is_one_cluster():
    d = spectrum(np.eye(3))
    assert _pairs(d) == [(1.0, 3)]
    assert d.eigenpairs[0].basis.shape == (3, 3)


def test_clustering_merges_close_values():
    d = spectrum(np.diag([1.0, 1.0 + 1e-12, 2.0]))
    assert d.multiplicities == [2, 1]
    d = spectrum(np.diag([1.0, 1.0 + 1e-3, 2.0]), tol=1e-2)
    assert d.multiplicities == [2, 1]


def test_symmetrize_averages_and_rejects_nonsquare():
    S = symmetrize([[1.0, 2.0], [0.0, 1.0]])
    assert np.array_equal(S, S.T) and S[0, 1] == 1.0
    with pytest.raises(ValueError):
        symmetrize(np.ones((2, 3)))


def test_negative_tolerance_rejected():
    with pytest.raises(ValueError):
        spectrum(np.eye(2), tol=-1.0)


@pytest.mark.parametrize("S, m", [(np.diag([2, 4, -2]), 1), (np.zeros((3, 3)), 0), (np.diag([-1, -1, 5]), 2)])
def test_morse_index_examples(S, m):
    assert morse_index(S) == m


@pytest.mark.parametrize("S, kind", [
    (np.diag([2.0, 4.0]), Definiteness.STRICTLY_POSITIVE),
    (np.diag([2.0, 0.0]), Definiteness.NONNEGATIVE_SINGULAR),
    (np.diag([2.0, -2.0]), Definiteness.INDEFINITE),
    (np.diag([-1.0, -3.0]), Definiteness.STRICTLY_NEGATIVE),
    (np.diag([-1.0, 0.0]), Definiteness.NONPOSITIVE_SINGULAR),
    (np.zeros((2, 2)), Definiteness.ZERO),
])
def test_definiteness_examples(S, kind):
    assert definiteness(S) is kind


def test_abs_sqrt_sgn_examples():
    a, r, s = abs_sqrt_sgn(np.diag([4.0, -9.0]))
    assert np.allclose(a, np.diag([4.0, 9.0])) and np.allclose(r, np.diag([2.0, 3.0]))
    assert s is None
    assert abs_sqrt_sgn(np.diag([2.0, 4.0]))[2] == 1
    assert abs_sqrt_sgn(np.zeros((2, 2)))[2] == 0


def test_reconstruction_random(rng):
    for _ in range(500):
        n = int(rng.integers(1, 9))
        M = rng.normal(size=(n, n))
        S = (M + M.T) / 2
        err = np.linalg.norm(spectrum(S).reconstruct() - S)
        assert err <= 1e-10 * (1 + np.linalg.norm(S))


sym_matrices = st.integers(1, 6).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_nan=False, width=32))
).map(lambda M: (M + M.T) / 2)


@given(sym_matrices)
def test_inertia_adds_up(S):
    assert morse_index(S) + morse_index(-S) + kernel_dim(S) == S.shape[0]


@given(sym_matrices)
def test_abs_and_sqrt_consistent(S):
    a, r, s = abs_sqrt_sgn(S)
    tol = 1e-10 * (1 + np.linalg.norm(S))
    assert np.linalg.norm(r @ r - a) <= 10 * tol
    if s is not None:
        assert np.linalg.norm(s * a - S) <= 10 * tol + 10 * cluster_tol(S) * S.shape[0]


@given(sym_matrices, st.integers(0, 2**31 - 1))
def test_spectrum_invariant_under_orthogonal_conjugation(S, seed):
    Q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=S.shape))
    d1, d2 = spectrum(S), spectrum(Q.T @ S @ Q)
    assert d1.multiplicities == d2.multiplicities
    assert np.allclose(d1.values, d2.values, atol=1e-9 * (1 + np.abs(S).sum()))


@given(sym_matrices)
def test_clusters_separated(S):
    d = spectrum(S)
    assert sum(d.multiplicities) == S.shape[0]
    assert np.all(np.diff(d.values) > d.cluster_tol)
