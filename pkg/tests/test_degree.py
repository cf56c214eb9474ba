import time

import numpy as np
import pytest

from hambif.degree import (
    Box,
    DepthExceeded,
    IndexKind,
    SecondZeroSuspected,
    VectorField,
    ZeroOnBoundary,
    brouwer_degree,
    index_shortcut,
    topological_index,
)
from hambif.problem import registry_problem


def linear(M, lip=False):
    return VectorField.linear(np.asarray(M, float), with_lipschitz=lip)


def random_gradient_matrix(rng, d):
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return Q @ np.diag(rng.uniform(0.2, 3.0, d) * rng.choice([-1, 1], d)) @ Q.T


def test_identity_and_reflection():
    assert brouwer_degree(linear(np.eye(2)), Box.cube(np.zeros(2), 1))[0] == 1
    assert brouwer_degree(linear(np.diag([1.0, -1.0])), Box.cube(np.zeros(2), 1))[0] == -1


@pytest.mark.parametrize("d", [2, 4, 6])
def test_identity_in_even_dims(d):
    assert brouwer_degree(linear(np.eye(d)), Box.cube(np.zeros(d), 1))[0] == 1


@pytest.mark.parametrize("d, k", [(3, 1), (3, 2), (4, 3), (5, 5)])
def test_reflections(d, k):
    M = np.diag([-1.0] * k + [1.0] * (d - k))
    assert brouwer_degree(linear(M), Box.cube(np.zeros(d), 1))[0] == (-1) ** k


def test_minus_identity_dim4():
    assert topological_index(linear(-np.eye(4)), np.zeros(4))[0] == 1


def test_zero_outside_box_gives_zero():
    assert brouwer_degree(linear(np.eye(3)), Box.cube(np.full(3, 5.0), 1))[0] == 0


def test_lipschitz_grade(rng):
    for d in (2, 3):
        M = random_gradient_matrix(rng, d)
        deg, cert = brouwer_degree(linear(M, lip=True), Box.cube(np.zeros(d), 1))
        assert deg == np.sign(np.linalg.det(M))
        assert cert.grade == "lipschitz"


def test_sampled_grade_is_flagged():
    _, cert = brouwer_degree(linear(np.eye(2)), Box.cube(np.zeros(2), 1))
    assert cert.grade == "sampled, not certified"
    assert cert.as_dict()["grade"] == cert.grade


def test_zero_on_boundary():
    with pytest.raises(ZeroOnBoundary):
        brouwer_degree(linear(np.eye(2)), Box(np.array([1.0, 0.0]), np.array([1.0, 1.0])))


def _two_zero_field():
    def f(X):
        X = np.atleast_2d(X)
        u = X[:, 0] - 1 + 1e-6
        return np.stack([u + X[:, 1] ** 2, X[:, 1] + 3 * u - X[:, 1] ** 2], axis=1)
    return VectorField(2, f)


def test_depth_exceeded_is_loud():
    with pytest.raises(DepthExceeded):
        brouwer_degree(_two_zero_field(), Box.cube(np.zeros(2), 1), max_depth=2)


def test_opposite_zeros_cancel():
    # zeros at (1 - 1e-6, 0) with det 1 and near (0.94, 0.25) with det -1
    assert brouwer_degree(_two_zero_field(), Box.cube(np.zeros(2), 1))[0] == 0


def test_second_zero_detected():
    F = VectorField(2, lambda X: np.stack([X[:, 0] * X[:, 1], X[:, 0]], axis=1))
    with pytest.raises(SecondZeroSuspected):
        topological_index(F, np.zeros(2))


def test_shrinks_away_from_a_neighbour():
    F = VectorField(1, lambda X: X * (X - 0.3))
    deg, cert = topological_index(F, np.zeros(1))
    assert deg == -1
    assert "1 shrink" in cert.notes[-1]


def test_shortcuts():
    assert index_shortcut(IndexKind.STRICT_EXTREMUM) == 1
    assert index_shortcut(IndexKind.NONDEGENERATE, -1) == -1
    assert index_shortcut(IndexKind.NONDEGENERATE, 1) == 1
    with pytest.raises(ValueError):
        index_shortcut(IndexKind.NONDEGENERATE, 0)


def test_homotopy_robustness(rng):
    for _ in range(30):
        d = int(rng.integers(2, 5))
        M = random_gradient_matrix(rng, d)
        margin = np.min(np.abs(np.linalg.eigvalsh(M))) / np.sqrt(d)
        delta = rng.uniform(-1, 1, d) * 0.49 * margin
        F = VectorField(d, lambda X, M=M, delta=delta: np.atleast_2d(X) @ M.T + delta)
        assert brouwer_degree(F, Box.cube(np.zeros(d), 1))[0] == np.sign(np.linalg.det(M))


def test_multiplicativity(rng):
    for _ in range(25):
        d1, d2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        M1, M2 = random_gradient_matrix(rng, d1), random_gradient_matrix(rng, d2)
        M = np.zeros((d1 + d2, d1 + d2))
        M[:d1, :d1], M[d1:, d1:] = M1, M2
        c1, c2 = rng.uniform(-0.5, 0.5, d1), rng.uniform(-0.5, 0.5, d2)
        g1 = brouwer_degree(linear(M1), Box.cube(c1, 1))[0]
        g2 = brouwer_degree(linear(M2), Box.cube(c2, 1))[0]
        g = brouwer_degree(linear(M), Box.cube(np.concatenate([c1, c2]), 1))[0]
        assert g == g1 * g2


def test_deterministic():
    F = _two_zero_field()
    a = brouwer_degree(F, Box.cube(np.zeros(2), 1))
    b = brouwer_degree(F, Box.cube(np.zeros(2), 1))
    assert a[0] == b[0] and a[1].as_dict() == b[1].as_dict()


def test_exmin_both_routes():
    spec = registry_problem("paper-example-exmin")
    F = VectorField(4, spec.gradient)
    assert topological_index(F, spec.critical_points[0].point)[0] == 1
    assert index_shortcut(IndexKind.STRICT_EXTREMUM) == 1


def test_example_one_index():
    spec = registry_problem("paper-example-1")
    F = VectorField(6, spec.gradient)
    t0 = time.perf_counter()
    deg, cert = brouwer_degree(F, Box.cube(spec.critical_points[0].point, 0.5))
    assert deg == -1
    assert time.perf_counter() - t0 < 10
