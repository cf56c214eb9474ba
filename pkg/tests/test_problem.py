import textwrap
from fractions import Fraction

import numpy as np
import pytest

from hambif.problem import (
    HessianMismatchWarning,
    ProblemError,
    finite_difference_hessian,
    load_problem,
    load_problem_text,
    registry_problem,
)

EX1_A = ((2, 0, 0), (0, 4, 0), (0, 0, -2))
EX1_B = ((0, 0, 0), (0, 2, -1), (0, -1, 2))


def doc(s):
    return textwrap.dedent(s)


def test_registry_exmin():
    spec = registry_problem("paper-example-exmin")
    assert spec.n == 2
    cp = spec.critical_points[0]
    assert np.array_equal(cp.point, [0, 0, 0, 1])
    assert cp.A == ((Fraction(2), Fraction(0)), (Fraction(0), Fraction(4)))
    assert cp.B == ((Fraction(2), Fraction(0)), (Fraction(0), Fraction(0)))
    assert cp.strict_extremum


def test_registry_example_one():
    spec = registry_problem("paper-example-1")
    cp = spec.critical_points[0]
    assert spec.n == 3
    assert np.allclose(cp.point, [0, 1, 0, -4, 2 / 3, 4 / 3])
    assert cp.A == tuple(tuple(Fraction(v) for v in row) for row in EX1_A)
    assert cp.B == tuple(tuple(Fraction(v) for v in row) for row in EX1_B)
    assert all(isinstance(v, Fraction) for row in cp.A + cp.B for v in row)


@pytest.mark.parametrize("name", ["paper-example-1", "paper-example-exmin"])
def test_registry_gradient_vanishes_and_fd_matches(name):
    spec = registry_problem(name)
    cp = spec.critical_points[0]
    assert np.max(np.abs(spec.gradient(cp.point[None, :]))) < 1e-12
    H = finite_difference_hessian(spec.gradient, cp.point, 1e-5)
    assert np.max(np.abs(H - cp.declared.L)) <= 1e-5
    assert np.max(np.abs(spec.hessian(cp.point) - cp.declared.L)) <= 1e-12


def test_unknown_registry_name():
    with pytest.raises(ProblemError, match="unknown registry"):
        registry_problem("nope")


def test_newton_harmonic_oscillator():
    spec = load_problem_text(doc("""
        [problem]
        n = 2
        [problem.newton]
        mass = [[1, 0], [0, 1]]
        potential_gradient = ["z1", "z2"]
        potential = "(z1^2 + z2^2)/2"
        [[critical_points]]
        point = [0, 0, 0, 0]
    """))
    X = np.random.default_rng(0).normal(size=(5, 4))
    assert np.allclose(spec.gradient(X), X)
    L, notes = spec.block_hessian(spec.critical_points[0])
    assert np.allclose(L.A, np.eye(2)) and np.allclose(L.B, np.eye(2), atol=1e-8)
    assert spec.energy(np.array([1.0, 0, 0, 1.0])) == pytest.approx(1.0)


def test_newton_mass_inverse_in_kinetic_part():
    spec = load_problem_text(doc("""
        [problem]
        n = 1
        [problem.newton]
        mass = [[4]]
        potential_gradient = ["z1"]
        [[critical_points]]
        point = [0, 0]
    """))
    assert np.allclose(spec.gradient(np.array([[2.0, 3.0]])), [[0.5, 3.0]])


def test_registry_reference_in_config(tmp_path):
    p = tmp_path / "ex.toml"
    p.write_text(doc("""
        [problem]
        registry = "paper-example-exmin"
        [analysis]
        jmax = 3
    """))
    spec = load_problem(p)
    assert spec.name == "paper-example-exmin" and spec.analysis.jmax == 3
    assert spec.source == str(p)


def test_fractions_in_points():
    spec = load_problem_text(doc("""
        [problem]
        n = 1
        gradient = ["x1 - 1/3", "x2"]
        [[critical_points]]
        point = ["1/3", 0]
    """))
    assert spec.critical_points[0].point[0] == pytest.approx(1 / 3)


def test_declared_blocks_used_and_mismatch_warned():
    raw = doc("""
        [problem]
        n = 1
        gradient = ["2*x1", "3*x2"]
        [[critical_points]]
        point = [0, 0]
        A = [[2]]
        B = [[3.1]]
    """)
    spec = load_problem_text(raw)
    with pytest.warns(HessianMismatchWarning):
        L, notes = spec.block_hessian(spec.critical_points[0])
    assert L.B[0, 0] == pytest.approx(3.1) and notes
    fd = spec.with_analysis(hessian="finite_difference")
    with pytest.warns(HessianMismatchWarning):
        L, _ = fd.block_hessian(fd.critical_points[0])
    assert L.B[0, 0] == pytest.approx(3.0)


def test_coupled_hessian_is_hard_error():
    spec = load_problem_text(doc("""
        [problem]
        n = 1
        gradient = ["x1 + x2", "x1 + x2"]
        [[critical_points]]
        point = [0, 0]
    """))
    with pytest.raises(ProblemError, match="block-diagonal"):
        spec.block_hessian(spec.critical_points[0])


@pytest.mark.parametrize("body, match", [
    ("[problem]\nn = 1\ngradient = ['x1']\n[[critical_points]]\npoint = [0, 0]\n", "expression"),
    ("[problem]\nn = 1\ngradient = ['x1', 'x2']\n[[critical_points]]\npoint = [0]\n", "coordinates"),
    ("[problem]\nn = 1\ngradient = ['x1 - 1', 'x2']\n[[critical_points]]\npoint = [0, 0]\n", "not zero"),
    ("[problem]\nn = 1\ngradient = ['x1', 'x2']\n", "no \\[\\[critical_points"),
    ("[problem]\nn = 1\ngradient = ['x1', 'x2']\ncolor = 1\n[[critical_points]]\npoint=[0,0]\n", "unknown key"),
    ("[problem]\nn = 1\ngradient = ['x1', 'x2']\n[[critical_points]]\npoint=[0,0]\n[analysis]\njmax = 0\n", "jmax"),
    ("[problem]\nn = 1\ngradient = ['x1', 'x2']\n[[critical_points]]\npoint=[0,0]\n[analysis]\n"
     "lambda_window = [2, 1]\n", "lambda_window"),
    ("[problem]\nn = 1\ngradient = ['x1', 'x2']\n[[critical_points]]\npoint=[0,0]\nA = [[1]]\n", "both A and B"),
    ("[problem\n", "<string>"),
    ("[other]\n", "unknown section"),
    ("[problem]\nregistry = 'what'\n", "unknown registry"),
])
def test_input_errors(body, match):
    with pytest.raises(ProblemError, match=match):
        load_problem_text(body)


def test_expression_error_reports_line_and_column():
    raw = '[problem]\nn = 1\ngradient = ["x1", "x2 +* 3"]\n[[critical_points]]\npoint = [0, 0]\n'
    with pytest.raises(ProblemError, match="line 3, column 24"):
        load_problem_text(raw)


def test_missing_file(tmp_path):
    with pytest.raises(ProblemError, match="cannot read"):
        load_problem(tmp_path / "missing.toml")
