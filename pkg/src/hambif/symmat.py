"""Spectral algebra for real symmetric matrices.

Every "are these two eigenvalues equal" decision downstream goes through
:func:`cluster_tol`, so multiplicities and Morse indices stay consistent
across modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Definiteness",
    "Eigenpair",
    "SpectralDecomposition",
    "SpectrumError",
    "abs_sqrt_sgn",
    "cluster_tol",
    "definiteness",
    "kernel_dim",
    "morse_index",
    "spectrum",
    "symmetrize",
]


class SpectrumError(np.linalg.LinAlgError):
    """Raised when the symmetric eigen-solver fails; carries the matrix."""

    def __init__(self, message: str, matrix: np.ndarray):
        super().__init__(message)
        self.matrix = matrix


class Definiteness(Enum):
    STRICTLY_POSITIVE = "strictly_positive"
    STRICTLY_NEGATIVE = "strictly_negative"
    NONNEGATIVE_SINGULAR = "nonnegative_singular"
    NONPOSITIVE_SINGULAR = "nonpositive_singular"
    INDEFINITE = "indefinite"
    ZERO = "zero"

    @property
    def strict(self) -> bool:
        return self in (Definiteness.STRICTLY_POSITIVE, Definiteness.STRICTLY_NEGATIVE)


@dataclass(frozen=True)
class Eigenpair:
    value: float
    multiplicity: int
    basis: np.ndarray  # (dim, multiplicity), orthonormal columns


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenpairs: tuple[Eigenpair, ...]
    cluster_tol: float

    @property
    def dim(self) -> int:
        return sum(p.multiplicity for p in self.eigenpairs)

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.eigenpairs])

    @property
    def multiplicities(self) -> list[int]:
        return [p.multiplicity for p in self.eigenpairs]

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for p in self.eigenpairs:
            out += p.value * (p.basis @ p.basis.T)
        return out

    def apply(self, func) -> np.ndarray:
        """Spectral calculus: sum of func(value) times the eigenprojector."""
        out = np.zeros((self.dim, self.dim))
        for p in self.eigenpairs:
            out += func(p.value) * (p.basis @ p.basis.T)
        return symmetrize(out)

    def eigenspace(self, value: float) -> np.ndarray:
        """Orthonormal basis of the eigenspace of ``value`` (empty if absent)."""
        for p in self.eigenpairs:
            if abs(p.value - value) <= self.cluster_tol:
                return p.basis
        return np.zeros((self.dim, 0))


def symmetrize(s) -> np.ndarray:
    """Return (S + S^T)/2 as a float array; rejects non-square input."""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {s.shape}")
    out = 0.5 * (s + s.T)
    assert np.array_equal(out, out.T)
    return out


def cluster_tol(s: np.ndarray) -> float:
    """Default eigenvalue-merging tolerance: 1e-9 * max(1, ||S||_inf)."""
    return 1e-9 * max(1.0, float(np.abs(s).sum(axis=1).max()))


def spectrum(s, tol: float | None = None) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix with eigenvalue clustering.

    Eigenvalues are sorted ascending; consecutive eigenvalues whose gap is at
    most ``tol`` are merged into one eigenpair whose value is the cluster
    mean and whose basis spans the union of the eigenvectors.
    """
    s = symmetrize(s)
    if tol is None:
        tol = cluster_tol(s)
    if tol < 0:
        raise ValueError("cluster tolerance must be nonnegative")
    try:
        w, v = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"symmetric eigensolver failed: {exc}", s) from exc
    if not np.all(np.isfinite(w)):
        raise SpectrumError("symmetric eigensolver returned non-finite values", s)

    pairs = []
    start = 0
    for k in range(1, len(w) + 1):
        if k == len(w) or w[k] - w[k - 1] > tol:
            block = slice(start, k)
            pairs.append(Eigenpair(float(w[block].mean()), k - start, v[:, block]))
            start = k
    return SpectralDecomposition(tuple(pairs), float(tol))


def _resolve(s, decomposition):
    return decomposition if decomposition is not None else spectrum(s)


def morse_index(s, decomposition: SpectralDecomposition | None = None) -> int:
    """Total multiplicity of the strictly negative eigenvalues.

    Eigenvalues within the cluster tolerance of zero count as zero.
    """
    d = _resolve(s, decomposition)
    return sum(p.multiplicity for p in d.eigenpairs if p.value < -d.cluster_tol)


def kernel_dim(s, decomposition: SpectralDecomposition | None = None) -> int:
    d = _resolve(s, decomposition)
    return sum(p.multiplicity for p in d.eigenpairs if abs(p.value) <= d.cluster_tol)


def definiteness(s, decomposition: SpectralDecomposition | None = None) -> Definiteness:
    d = _resolve(s, decomposition)
    tol = d.cluster_tol
    neg = any(p.value < -tol for p in d.eigenpairs)
    pos = any(p.value > tol for p in d.eigenpairs)
    zero = any(abs(p.value) <= tol for p in d.eigenpairs)
    if pos and neg:
        return Definiteness.INDEFINITE
    if pos:
        return Definiteness.NONNEGATIVE_SINGULAR if zero else Definiteness.STRICTLY_POSITIVE
    if neg:
        return Definiteness.NONPOSITIVE_SINGULAR if zero else Definiteness.STRICTLY_NEGATIVE
    return Definiteness.ZERO


def abs_sqrt_sgn(s) -> tuple[np.ndarray, np.ndarray, int | None]:
    """Return ``(|S|, sqrt(|S|), sgn(S))``.

    ``sgn`` is ``None`` when S is indefinite; otherwise ``sgn * |S| == S``.
    """
    d = spectrum(s)
    tol = d.cluster_tol
    absolute = d.apply(lambda a: 0.0 if abs(a) <= tol else abs(a))
    root = d.apply(lambda a: 0.0 if abs(a) <= tol else np.sqrt(abs(a)))
    kind = definiteness(s, d)
    sgn = {
        Definiteness.STRICTLY_POSITIVE: 1,
        Definiteness.NONNEGATIVE_SINGULAR: 1,
        Definiteness.STRICTLY_NEGATIVE: -1,
        Definiteness.NONPOSITIVE_SINGULAR: -1,
        Definiteness.ZERO: 0,
    }.get(kind)
    return absolute, root, sgn
