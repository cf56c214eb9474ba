"""Bifurcation of periodic orbits from degenerate equilibria of Hamiltonian systems.

Symmetric-matrix utilities, the block-Hessian algebra behind Morse-index
jumps, Brouwer degree by subdivision, local and global bifurcation
criteria, and a shooting validator for the orbits themselves.
"""

__version__ = "0.1.0"

from .bifalgebra import BlockHessian, CandidateParam, Route, lambda_window, product_spectrum
from .bifindex import (
    CriticalPoint,
    GlobalHypothesisError,
    IndexSource,
    InternalConsistencyError,
    Theorem,
    bifurcation_index,
    check_local,
    classify_global,
    emanation_report,
)
from .degree import Box, VectorField, brouwer_degree, topological_index
from .orbits import HamiltonianField, shoot_periodic
from .problem import ProblemError, ProblemSpec, load_problem, registry_problem
from .analysis import AnalysisReport, analyze

__all__ = [
    "AnalysisReport",
    "BlockHessian",
    "Box",
    "CandidateParam",
    "CriticalPoint",
    "GlobalHypothesisError",
    "HamiltonianField",
    "IndexSource",
    "InternalConsistencyError",
    "ProblemError",
    "ProblemSpec",
    "Route",
    "Theorem",
    "VectorField",
    "analyze",
    "bifurcation_index",
    "brouwer_degree",
    "check_local",
    "classify_global",
    "emanation_report",
    "lambda_window",
    "load_problem",
    "product_spectrum",
    "registry_problem",
    "shoot_periodic",
    "topological_index",
]
