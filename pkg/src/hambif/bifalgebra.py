"""Candidate parameters and Morse-index jumps for block-diagonal Hessians.

For ``L = blockdiag(A, B)`` the parameters at which ``Q_j(lambda L)`` is
singular are ``j / sqrt(nu)`` for the positive eigenvalues ``nu`` of the
(generally non-symmetric) product ``AB``.  The change of the Morse index of
``Q_j`` across such a parameter can be computed

* directly, by counting negative eigenvalues on both sides (``DIRECT``),
* from a joint eigenbasis when ``AB == BA`` (``COMMUTING``),
* from the product spectrum when ``A`` or ``B`` is strictly definite
  (``DEFINITE``),

and certified nonzero by odd multiplicity or by a large eigenspace
intersection.  The routes are independent and are cross-checked in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .symmat import Definiteness, cluster_tol, definiteness, kernel_dim, morse_index, spectrum, symmetrize

__all__ = [
    "MATCH_TOL",
    "COMMUTE_TOL",
    "BlockHessian",
    "CandidateParam",
    "Certificate",
    "JointDiagonalization",
    "MorseJump",
    "NotCommutingError",
    "ProductSpectrum",
    "Route",
    "WindowPoint",
    "build_Gj",
    "build_Qj",
    "conjugation_check",
    "gamma_pm",
    "isolation_epsilon",
    "joint_diagonalize",
    "jump_nonzero_certificates",
    "lambda_j",
    "lambda_window",
    "match_nu",
    "morse_jump_commuting",
    "morse_jump_definite",
    "morse_jump_direct",
    "product_spectrum",
    "symplectic_J",
    "y_sets",
]

MATCH_TOL = 1e-9
COMMUTE_TOL = 1e-10
IMAG_TOL = 1e-9


class NotCommutingError(ValueError):
    """The blocks do not commute; the joint-eigenbasis route is unavailable."""


class Route(Enum):
    DIRECT = "direct"
    COMMUTING = "commuting"
    DEFINITE = "definite"
    ODD_MULT = "odd_multiplicity"
    EIGENSPACE_INTERSECT = "eigenspace_intersection"


@dataclass(frozen=True)
class BlockHessian:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a, b = symmetrize(self.A), symmetrize(self.B)
        if a.shape != b.shape:
            raise ValueError(f"block shapes differ: {a.shape} vs {b.shape}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @classmethod
    def from_matrix(cls, L, tol: float | None = None) -> "BlockHessian":
        """Split a 2n x 2n Hessian; the off-diagonal blocks must vanish."""
        L = symmetrize(L)
        m = L.shape[0]
        if m % 2:
            raise ValueError(f"Hessian dimension must be even, got {m}")
        n = m // 2
        off = np.linalg.norm(L[:n, n:])
        limit = 1e-6 * (1.0 + np.linalg.norm(L)) if tol is None else tol
        if off > limit:
            raise ValueError(
                f"Hessian is not block-diagonal: off-diagonal block norm {off:.3e} > {limit:.3e}"
            )
        return cls(L[:n, :n], L[n:, n:])

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def L(self) -> np.ndarray:
        n = self.n
        out = np.zeros((2 * n, 2 * n))
        out[:n, :n] = self.A
        out[n:, n:] = self.B
        return out

    def scaled(self, c: float) -> "BlockHessian":
        return BlockHessian(c * self.A, c * self.B)

    @property
    def product(self) -> np.ndarray:
        return self.A @ self.B

    def commutes(self) -> bool:
        a, b = self.A, self.B
        scale = 1.0 + np.linalg.norm(a) * np.linalg.norm(b)
        return bool(np.linalg.norm(a @ b - b @ a) <= COMMUTE_TOL * scale)


@dataclass(frozen=True)
class CandidateParam:
    j: int
    nu: float
    lambda0: float
    nu_multiplicity: int = 1

    @classmethod
    def from_nu(cls, j: int, nu: float, multiplicity: int = 1) -> "CandidateParam":
        if j < 1 or nu <= 0:
            raise ValueError("candidate needs j >= 1 and nu > 0")
        return cls(int(j), float(nu), j / math.sqrt(nu), int(multiplicity))


@dataclass(frozen=True)
class WindowPoint:
    lam: float
    contributors: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class ProductSpectrum:
    real: tuple[tuple[float, int], ...]
    complex: tuple[complex, ...] = ()
    # geometric multiplicity (dim ker G_1 at 1/sqrt(nu)) for each positive nu
    kernel_dims: dict = field(default_factory=dict)
    method: str = "general"

    @property
    def positive(self) -> list[tuple[float, int]]:
        return [(nu, m) for nu, m in self.real if nu > 0]

    @property
    def defective(self) -> list[float]:
        return [nu for nu, m in self.positive if self.kernel_dims.get(nu, m) != m]


@dataclass(frozen=True)
class JointDiagonalization:
    E: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray


@dataclass(frozen=True)
class MorseJump:
    j: int
    lambda0: float
    epsilon: float
    jump: int
    route: Route


@dataclass(frozen=True)
class Certificate:
    kind: Route
    nu: float
    multiplicity: int
    detail: str = ""


def symplectic_J(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def build_Qj(K, j: int) -> np.ndarray:
    """The 4n x 4n matrix ``[[-K, j J^T], [j J, -K]]``."""
    K = symmetrize(K)
    if K.shape[0] % 2:
        raise ValueError(f"K must have even dimension, got {K.shape[0]}")
    J = symplectic_J(K.shape[0] // 2)
    return np.block([[-K, j * J.T], [j * J, -K]])


def build_Gj(L: BlockHessian, j: int, scale: float = 1.0) -> np.ndarray:
    """``G_j(scale * L) = [[-scale A, j I], [j I, -scale B]]``."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    eye = np.eye(L.n)
    return np.block([[-scale * L.A, j * eye], [j * eye, -scale * L.B]])


def _conjugator(n: int) -> np.ndarray:
    eye = np.eye(n)
    z = np.zeros((n, n))
    return np.block([
        [eye, z, z, z],
        [z, z, z, -eye],
        [z, z, eye, z],
        [z, eye, z, z],
    ])


def conjugation_check(K, j: int, atol: float = 1e-12) -> bool:
    """Check ``X^t Q_j(K) X == blockdiag(G_j(K), G_j(K))`` entrywise."""
    K = symmetrize(K)
    n = K.shape[0] // 2
    L = BlockHessian.from_matrix(K, tol=atol)
    X = _conjugator(n)
    G = build_Gj(L, j)
    lhs = X.T @ build_Qj(K, j) @ X
    rhs = np.zeros_like(lhs)
    rhs[: 2 * n, : 2 * n] = G
    rhs[2 * n:, 2 * n:] = G
    return bool(np.max(np.abs(lhs - rhs)) <= atol)


def _definite_block(L: BlockHessian):
    """Return (sign, block name) of a strictly definite block, or None."""
    for name, block in (("A", L.A), ("B", L.B)):
        kind = definiteness(block)
        if kind.strict:
            return (1 if kind is Definiteness.STRICTLY_POSITIVE else -1), name
    return None


def _cluster_real(values: np.ndarray, tol: float) -> list[tuple[float, int]]:
    values = np.sort(values)
    out = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > tol:
            mean = float(values[start:k].mean())
            out.append((0.0 if abs(mean) <= tol else mean, k - start))
            start = k
    return out


def product_spectrum(L: BlockHessian) -> ProductSpectrum:
    """Real eigenvalues of ``AB`` with algebraic multiplicities.

    When a block is strictly definite, ``AB`` is similar to the symmetric
    matrix ``sgn(A) sqrt|A| B sqrt|A|`` (or the analogue for B) and that
    matrix is diagonalized instead.  Otherwise a general eigensolver is used
    and eigenvalues with ``|imag| > 1e-9 (1 + |value|)`` are set aside.
    """
    AB = L.product
    tol = cluster_tol(AB)
    definite = _definite_block(L)
    complex_part: list[complex] = []
    if definite is not None:
        sign, name = definite
        P, Q = (L.A, L.B) if name == "A" else (L.B, L.A)
        d = spectrum(P)
        root = d.apply(lambda a: math.sqrt(abs(a)))
        vals = sign * np.linalg.eigvalsh(symmetrize(root @ Q @ root))
        method = f"symmetric-reduction({name})"
    else:
        try:
            w = np.linalg.eigvals(AB)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"eigensolver failed on AB={AB!r}: {exc}") from exc
        is_real = np.abs(w.imag) <= IMAG_TOL * (1.0 + np.abs(w))
        vals = w.real[is_real]
        complex_part = [complex(z) for z in w[~is_real]]
        method = "general"

    real = _cluster_real(np.asarray(vals, dtype=float), tol)
    kernels = {}
    for nu, _ in real:
        if nu > tol:
            kernels[nu] = kernel_dim(build_Gj(L, 1, 1.0 / math.sqrt(nu)))
    return ProductSpectrum(tuple(real), tuple(complex_part), kernels, method)


def _positive(L: BlockHessian, spec: ProductSpectrum | None = None):
    spec = spec if spec is not None else product_spectrum(L)
    tol = cluster_tol(L.product)
    return [(nu, m) for nu, m in spec.real if nu > tol]


def lambda_j(L: BlockHessian, j: int) -> list[CandidateParam]:
    """Candidates ``j / sqrt(nu)``, nu in the positive spectrum of AB, ascending."""
    if j < 1:
        raise ValueError("j must be a positive integer")
    cands = [CandidateParam.from_nu(j, nu, m) for nu, m in _positive(L)]
    return sorted(cands, key=lambda c: c.lambda0)


def lambda_window(L: BlockHessian, a: float, b: float) -> list[WindowPoint]:
    """All elements of the candidate set in ``[a, b]``, merged across (j, nu)."""
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    raw = []
    for nu, _ in _positive(L):
        r = math.sqrt(nu)
        jlo = max(1, math.ceil(a * r * (1 - MATCH_TOL)))
        jhi = math.floor(b * r * (1 + MATCH_TOL))
        for j in range(jlo, jhi + 1):
            raw.append((j / r, j, nu))
    raw.sort()
    out: list[WindowPoint] = []
    for lam, j, nu in raw:
        if out and abs(lam - out[-1].lam) <= MATCH_TOL * lam:
            prev = out[-1]
            out[-1] = WindowPoint(prev.lam, prev.contributors + ((j, nu),))
        else:
            out.append(WindowPoint(lam, ((j, nu),)))
    return out


def match_nu(L: BlockHessian, lambda0: float, j: int, spec: ProductSpectrum | None = None):
    """Positive eigenvalues nu of AB with ``lambda0 * sqrt(nu) == j`` (matchTol)."""
    return [
        (nu, m) for nu, m in _positive(L, spec)
        if abs(lambda0 * math.sqrt(nu) - j) <= MATCH_TOL * j
    ]


def gamma_pm(alpha: float, beta: float, j: int, lam: float) -> tuple[float, float]:
    """Eigenvalue curves of ``[[-lam alpha, j], [j, -lam beta]]``.

    The root that does not suffer cancellation is computed from the
    quadratic formula and the other from the product ``lam^2 alpha beta - j^2``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    p = -lam * (alpha + beta)
    disc = math.sqrt(lam * lam * (alpha - beta) ** 2 + 4.0 * j * j)
    c = lam * lam * alpha * beta - j * j
    if p >= 0:
        plus = 0.5 * (p + disc)
        minus = c / plus
    else:
        minus = 0.5 * (p - disc)
        plus = c / minus
    return plus, minus


def joint_diagonalize(L: BlockHessian) -> JointDiagonalization | None:
    """Common orthonormal eigenbasis of commuting blocks, else ``None``.

    A is diagonalized first; B is then diagonalized inside each eigenspace of
    A, so ties within a degenerate A-eigenvalue come out with ascending beta.
    """
    if not L.commutes():
        return None
    n = L.n
    E = np.zeros((n, n))
    alphas = np.zeros(n)
    betas = np.zeros(n)
    col = 0
    for pair in spectrum(L.A).eigenpairs:
        V = pair.basis
        w, W = np.linalg.eigh(symmetrize(V.T @ L.B @ V))
        m = pair.multiplicity
        E[:, col:col + m] = V @ W
        alphas[col:col + m] = pair.value
        betas[col:col + m] = w
        col += m
    return JointDiagonalization(E, alphas, betas)


def y_sets(L: BlockHessian, lambda0: float, j: int, joint: JointDiagonalization | None = None):
    """Index sets ``(Y, Y+, Y-)`` (0-based, in the joint-eigenbasis order)."""
    joint = joint if joint is not None else joint_diagonalize(L)
    if joint is None:
        raise NotCommutingError("AB != BA: Y-sets need commuting blocks; use the direct or definite route")
    Y, Yp, Ym = set(), set(), set()
    for k, (a, b) in enumerate(zip(joint.alphas, joint.betas)):
        prod = a * b
        if prod > 0 and abs(lambda0 * math.sqrt(prod) - j) <= MATCH_TOL * j:
            Y.add(k)
            (Yp if a > 0 else Ym).add(k)
    return frozenset(Y), frozenset(Yp), frozenset(Ym)


def _neighbours(L: BlockHessian, lambda0: float) -> list[float]:
    return [p.lam for p in lambda_window(L, lambda0 / 2, 2 * lambda0)
            if abs(p.lam - lambda0) > MATCH_TOL * lambda0]


def in_lambda_set(L: BlockHessian, lambda0: float) -> bool:
    if lambda0 <= 0:
        return False
    for nu, _ in _positive(L):
        j = round(lambda0 * math.sqrt(nu))
        if j >= 1 and abs(lambda0 * math.sqrt(nu) - j) <= MATCH_TOL * j:
            return True
    return False


def isolation_epsilon(L: BlockHessian, lambda0: float, *, require_member: bool = True) -> float:
    """Half-gap to the nearest other candidate, floored at ``lambda0 / 2``.

    With ``require_member=False`` this also isolates an arbitrary positive
    ``lambda0`` from the candidate set, which is how off-grid parameters are
    probed.
    """
    if lambda0 <= 0:
        raise ValueError("lambda0 must be positive")
    if require_member and not in_lambda_set(L, lambda0):
        raise ValueError(f"lambda0={lambda0!r} is not a candidate parameter of this Hessian")
    gaps = [abs(lam - lambda0) for lam in _neighbours(L, lambda0)]
    return min([lambda0 / 2] + [g / 2 for g in gaps])


def _eps(L, lambda0, epsilon):
    if epsilon is not None:
        return epsilon
    return isolation_epsilon(L, lambda0, require_member=False)


def morse_jump_direct(L: BlockHessian, lambda0: float, j: int, epsilon: float | None = None) -> MorseJump:
    """Morse index of ``Q_j`` just above minus just below ``lambda0``."""
    eps = _eps(L, lambda0, epsilon)
    K = L.L
    above = morse_index(build_Qj((lambda0 + eps) * K, j))
    below = morse_index(build_Qj((lambda0 - eps) * K, j))
    return MorseJump(j, lambda0, eps, above - below, Route.DIRECT)


def morse_jump_commuting(L: BlockHessian, lambda0: float, j: int, epsilon: float | None = None) -> MorseJump:
    """``2 (#Y+ - #Y-)`` from the joint eigenbasis."""
    _, yp, ym = y_sets(L, lambda0, j)
    return MorseJump(j, lambda0, _eps(L, lambda0, epsilon), 2 * (len(yp) - len(ym)), Route.COMMUTING)


def morse_jump_definite(L: BlockHessian, lambda0: float, j: int, epsilon: float | None = None) -> MorseJump:
    """``2 s mu(nu)`` when ``lambda0 == j / sqrt(nu)``, else 0; needs a strictly definite block."""
    definite = _definite_block(L)
    if definite is None:
        raise ValueError("neither block is strictly definite")
    s, _ = definite
    jump = sum(2 * s * m for _, m in match_nu(L, lambda0, j))
    return MorseJump(j, lambda0, _eps(L, lambda0, epsilon), jump, Route.DEFINITE)


def _intersection_dim(V: np.ndarray, W: np.ndarray, tol: float = 1e-9) -> int:
    if V.shape[1] == 0 or W.shape[1] == 0:
        return 0
    sv = np.linalg.svd(np.hstack([V, W]), compute_uv=False)
    rank = int(np.sum(sv > tol))
    return V.shape[1] + W.shape[1] - rank


def jump_nonzero_certificates(L: BlockHessian, lambda0: float, j0: int) -> list[Certificate]:
    """Sufficient conditions for a nonzero Morse jump at ``(lambda0, j0)``.

    An empty list means "no certificate", not "jump is zero".
    """
    matches = match_nu(L, lambda0, j0)
    certs: list[Certificate] = []
    for nu0, mu in matches:
        if mu % 2 == 1:
            certs.append(Certificate(Route.ODD_MULT, nu0, mu, f"mu({nu0:.12g}) = {mu} is odd"))
        best = 0
        witness = None
        for pa in spectrum(L.A).eigenpairs:
            for pb in spectrum(L.B).eigenpairs:
                prod = pa.value * pb.value
                if prod <= 0 or abs(prod - nu0) > MATCH_TOL * nu0:
                    continue
                q = _intersection_dim(pa.basis, pb.basis)
                if q > best:
                    best, witness = q, (pa.value, pb.value)
        if witness is not None and 2 * best > mu:
            a, b = witness
            certs.append(Certificate(
                Route.EIGENSPACE_INTERSECT, nu0, mu,
                f"dim V_A({a:.12g}) & V_B({b:.12g}) = {best} > mu/2 = {mu / 2:g}",
            ))
    return certs
