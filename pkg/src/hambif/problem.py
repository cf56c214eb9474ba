"""Problem specifications: loading, the built-in registry and Hessians.

A problem is a gradient field on R^{2n} (state ``x = (y, z)``), a list of
declared critical points and analysis settings.  It is read from a TOML
document::

    [problem]
    n = 2
    gradient = ["2*x1", "4*x2", "...", "..."]   # or registry = "..."
    hamiltonian = "..."                          # optional, energy only

    [problem.newton]            # alternative to gradient: H = <M^-1 y, y>/2 + V(z)
    mass = [[1, 0], [0, 1]]
    potential_gradient = ["z1", "z2"]
    potential = "(z1^2 + z2^2)/2"                # optional

    [[critical_points]]
    point = [0, 0, 0, 1]        # numbers or "p/q" strings
    index = 1                   # optional, asserted
    strict_extremum = true      # optional, index 1 by shortcut
    A = [[2, 0], [0, 4]]        # optional declared blocks
    B = [[2, 0], [0, 0]]

    [analysis]
    jmax = 8
    lambda_window = [0.05, 20.0]
    hessian = "declared"        # or "finite_difference"
    fd_step = 1e-5
    validate_orbits = false
    orbit_amplitude = 1e-2
    degree_half_width = 0.5
    seed = 0
"""

from __future__ import annotations

import re
import sys
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .bifalgebra import BlockHessian
from .expr import ExpressionError, compile_expression
from .orbits import HamiltonianField

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "AnalysisSettings",
    "CriticalPointSpec",
    "FD_STEP",
    "FD_WARN_TOL",
    "HessianMismatchWarning",
    "ProblemError",
    "ProblemSpec",
    "REGISTRY",
    "finite_difference_hessian",
    "load_problem",
    "load_problem_text",
    "point_label",
    "registry_problem",
]

FD_STEP = 1e-5
FD_WARN_TOL = 1e-4
GRADIENT_ZERO_TOL = 1e-8


class ProblemError(ValueError):
    """Invalid problem input; the CLI maps it to exit code 1."""


class HessianMismatchWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CriticalPointSpec:
    point: np.ndarray
    index: int | None = None
    strict_extremum: bool = False
    A: tuple | None = None  # exact entries (Fractions) when declared
    B: tuple | None = None
    label: str = ""

    @property
    def declared(self) -> BlockHessian | None:
        if self.A is None:
            return None
        return BlockHessian(_as_float(self.A), _as_float(self.B))


@dataclass(frozen=True)
class AnalysisSettings:
    jmax: int = 8
    lambda_window: tuple[float, float] = (0.05, 20.0)
    hessian: str = "declared"
    fd_step: float = FD_STEP
    validate_orbits: bool = False
    orbit_amplitude: float = 1e-2
    degree_half_width: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    gradient: Callable  # (m, 2n) -> (m, 2n)
    critical_points: tuple[CriticalPointSpec, ...]
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    hessian: Callable | None = None  # exact, point -> (2n, 2n)
    energy: Callable | None = None
    newton_mass: np.ndarray | None = None
    source: str = ""

    @property
    def field(self) -> HamiltonianField:
        return HamiltonianField(self.n, self.gradient, self.hessian, self.energy)

    def with_analysis(self, **changes) -> "ProblemSpec":
        return replace(self, analysis=replace(self.analysis, **changes))

    def block_hessian(self, cp: CriticalPointSpec) -> tuple[BlockHessian, list[str]]:
        """Hessian at a critical point plus any cross-check warnings.

        Declared blocks win unless finite differences are requested; both are
        compared when both exist.  A Hessian that is not block-diagonal is a
        hard error.
        """
        notes = []
        numeric = None
        if self.hessian is not None:
            numeric = np.asarray(self.hessian(cp.point), dtype=float)
        fd = finite_difference_hessian(self.gradient, cp.point, self.analysis.fd_step)
        declared = cp.declared
        if declared is not None:
            gap = float(np.max(np.abs(declared.L - fd)))
            if gap > FD_WARN_TOL:
                msg = f"declared Hessian differs from finite differences by {gap:.3e} at {cp.point.tolist()}"
                warnings.warn(msg, HessianMismatchWarning, stacklevel=2)
                notes.append(msg)
        if self.analysis.hessian == "finite_difference" or declared is None:
            use_fd = numeric is None or self.analysis.hessian == "finite_difference"
            L = fd if use_fd else numeric
            try:
                return BlockHessian.from_matrix(L), notes
            except ValueError as exc:
                raise ProblemError(
                    f"{exc} at {cp.point.tolist()}; the analysis needs grad^2 H(x0) = blockdiag(A, B)") from None
        return declared, notes


def finite_difference_hessian(gradient: Callable, x, step: float = FD_STEP) -> np.ndarray:
    """Central differences of the gradient, symmetrized."""
    x = np.asarray(x, dtype=float)
    m = x.size
    E = step * np.eye(m)
    g = np.asarray(gradient(np.vstack([x + E, x - E])), dtype=float)
    H = (g[:m] - g[m:]) / (2.0 * step)
    return 0.5 * (H + H.T)


def _fraction(v) -> Fraction:
    if isinstance(v, bool):
        raise ProblemError(f"expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except ValueError:
            raise ProblemError(f"cannot read number {v!r}") from None
    raise ProblemError(f"expected a number, got {v!r}")


def _as_float(rows) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in rows], dtype=float)


def _matrix(value, n: int, what: str) -> tuple:
    if not isinstance(value, list) or len(value) != n or any(not isinstance(r, list) or len(r) != n for r in value):
        raise ProblemError(f"{what} must be an {n}x{n} matrix")
    return tuple(tuple(_fraction(v) for v in row) for row in value)


# Built-in examples, with exact Hessian blocks.

def _ex1_gradient(X):
    X = np.atleast_2d(X)
    x1, x2, x3, x4, x5, x6 = X.T
    u = x4 + (x3 - 2.0) ** 2
    return np.stack([
        2.0 * x1,
        4.0 * (x2 - 1.0),
        -2.0 * x3 + 12.0 * u ** 5 * (x3 - 2.0),
        6.0 * u ** 5,
        2.0 * x5 - x6,
        2.0 * (x6 - 1.0) - x5,
    ], axis=1)


def _ex1_hessian(x):
    x1, x2, x3, x4, x5, x6 = x
    u = x4 + (x3 - 2.0) ** 2
    H = np.zeros((6, 6))
    H[0, 0] = 2.0
    H[1, 1] = 4.0
    H[2, 2] = -2.0 + 120.0 * u ** 4 * (x3 - 2.0) ** 2 + 12.0 * u ** 5
    H[2, 3] = H[3, 2] = 60.0 * u ** 4 * (x3 - 2.0)
    H[3, 3] = 30.0 * u ** 4
    H[4, 4] = H[5, 5] = 2.0
    H[4, 5] = H[5, 4] = -1.0
    return H


def _ex1_energy(x):
    x1, x2, x3, x4, x5, x6 = x
    return (x1 ** 2 + 2 * (x2 - 1) ** 2 - x3 ** 2 + (x4 + (x3 - 2) ** 2) ** 6
            + x5 ** 2 + (x6 - 1) ** 2 - x5 * x6)


def _exmin_gradient(X):
    X = np.atleast_2d(X)
    x1, x2, x3, x4 = X.T
    w = x4 + (x3 - 1.0) ** 3
    return np.stack([2.0 * x1, 4.0 * x2, 2.0 * x3 + 12.0 * w ** 3 * (x3 - 1.0) ** 2, 4.0 * w ** 3], axis=1)


def _exmin_hessian(x):
    x1, x2, x3, x4 = x
    w = x4 + (x3 - 1.0) ** 3
    H = np.diag([2.0, 4.0, 0.0, 0.0])
    H[2, 2] = 2.0 + 108.0 * w ** 2 * (x3 - 1.0) ** 4 + 24.0 * w ** 3 * (x3 - 1.0)
    H[2, 3] = H[3, 2] = 36.0 * w ** 2 * (x3 - 1.0) ** 2
    H[3, 3] = 12.0 * w ** 2
    return H


def _exmin_energy(x):
    x1, x2, x3, x4 = x
    return x1 ** 2 + 2 * x2 ** 2 + x3 ** 2 + (x4 + (x3 - 1) ** 3) ** 4


def _F(*rows):
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def _registry_ex1() -> ProblemSpec:
    point = np.array([0.0, 1.0, 0.0, -4.0, 2.0 / 3.0, 4.0 / 3.0])
    cp = CriticalPointSpec(
        point,
        A=_F((2, 0, 0), (0, 4, 0), (0, 0, -2)),
        B=_F((0, 0, 0), (0, 2, -1), (0, -1, 2)),
        label="(0, 1, 0, -4, 2/3, 4/3)",
    )
    return ProblemSpec("paper-example-1", 3, _ex1_gradient, (cp,), hessian=_ex1_hessian, energy=_ex1_energy,
                       source="registry:paper-example-1")


def _registry_exmin() -> ProblemSpec:
    cp = CriticalPointSpec(
        np.array([0.0, 0.0, 0.0, 1.0]),
        strict_extremum=True,
        A=_F((2, 0), (0, 4)),
        B=_F((2, 0), (0, 0)),
        label="(0, 0, 0, 1)",
    )
    return ProblemSpec("paper-example-exmin", 2, _exmin_gradient, (cp,), hessian=_exmin_hessian,
                       energy=_exmin_energy, source="registry:paper-example-exmin")


REGISTRY: dict[str, Callable[[], ProblemSpec]] = {
    "paper-example-1": _registry_ex1,
    "paper-example-exmin": _registry_exmin,
}


def registry_problem(name: str) -> ProblemSpec:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise ProblemError(f"unknown registry name {name!r}; known: {sorted(REGISTRY)}") from None


def _locate(raw: str, text: str) -> tuple[int | None, int]:
    """Line (1-based) and column offset of a string literal in the document."""
    for quote in ('"', "'"):
        needle = quote + text + quote
        pos = raw.find(needle)
        if pos >= 0:
            line = raw.count("\n", 0, pos) + 1
            col = pos - (raw.rfind("\n", 0, pos) + 1) + 1
            return line, col
    return None, 0


def _compile_all(exprs, names, raw, what, count=None):
    count = len(names) if count is None else count
    if not isinstance(exprs, list) or len(exprs) != count:
        raise ProblemError(f"{what} needs {count} expression(s), got "
                           f"{len(exprs) if isinstance(exprs, list) else type(exprs).__name__}")
    out = []
    for text in exprs:
        try:
            out.append(compile_expression(text, names))
        except ExpressionError as exc:
            line, col = _locate(raw, str(text))
            if line is not None:
                exc = exc.at_line(line, col)
            raise ProblemError(f"{what}: {exc}") from None
    return out


def _stack(exprs):
    def gradient(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([e(X) for e in exprs], axis=1)
    return gradient


def _newton(section: dict, n: int, raw: str):
    mass = _as_float(_matrix(section.get("mass"), n, "newton.mass"))
    if not np.allclose(mass, mass.T):
        raise ProblemError("newton.mass must be symmetric")
    try:
        inv = np.linalg.inv(mass)
    except np.linalg.LinAlgError:
        raise ProblemError("newton.mass must be nonsingular") from None
    z = [f"z{i + 1}" for i in range(n)]
    dV = _stack(_compile_all(section.get("potential_gradient"), z, raw, "newton.potential_gradient"))

    def gradient(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.hstack([X[:, :n] @ inv.T, dV(X[:, n:])])

    energy = None
    if "potential" in section:
        V = _compile_all([section["potential"]], z, raw, "newton.potential", 1)[0]

        def energy(x):
            x = np.asarray(x, dtype=float)
            return 0.5 * float(x[:n] @ inv @ x[:n]) + float(V(x[None, n:])[0])

    return gradient, energy, mass


_ALLOWED = {
    "problem": {"name", "n", "registry", "gradient", "hamiltonian", "newton"},
    "critical_points": {"point", "index", "strict_extremum", "A", "B", "label"},
    "analysis": {"jmax", "lambda_window", "hessian", "fd_step", "validate_orbits", "orbit_amplitude",
                 "degree_half_width", "seed"},
}


def _check_keys(table: dict, section: str):
    extra = set(table) - _ALLOWED[section]
    if extra:
        raise ProblemError(f"unknown key(s) in [{section}]: {sorted(extra)}")


def _settings(section: dict) -> AnalysisSettings:
    _check_keys(section, "analysis")
    s = AnalysisSettings()
    kw = {}
    if "jmax" in section:
        kw["jmax"] = int(section["jmax"])
        if kw["jmax"] < 1:
            raise ProblemError("analysis.jmax must be >= 1")
    if "lambda_window" in section:
        a, b = (float(v) for v in section["lambda_window"])
        if not 0 < a < b:
            raise ProblemError("analysis.lambda_window needs 0 < a < b")
        kw["lambda_window"] = (a, b)
    if "hessian" in section:
        if section["hessian"] not in ("declared", "finite_difference"):
            raise ProblemError("analysis.hessian must be 'declared' or 'finite_difference'")
        kw["hessian"] = section["hessian"]
    for key in ("fd_step", "orbit_amplitude", "degree_half_width"):
        if key in section:
            kw[key] = float(section[key])
            if kw[key] <= 0:
                raise ProblemError(f"analysis.{key} must be positive")
    if "validate_orbits" in section:
        kw["validate_orbits"] = bool(section["validate_orbits"])
    if "seed" in section:
        kw["seed"] = int(section["seed"])
    return replace(s, **kw)


def load_problem_text(raw: str, source: str = "<string>") -> ProblemSpec:
    try:
        doc = tomllib.loads(raw)
    except tomllib.TOMLDecodeError as exc:
        raise ProblemError(f"{source}: {exc}") from None
    extra = set(doc) - set(_ALLOWED)
    if extra:
        raise ProblemError(f"unknown section(s): {sorted(extra)}")
    prob = doc.get("problem")
    if not isinstance(prob, dict):
        raise ProblemError("missing [problem] section")
    _check_keys(prob, "problem")
    settings = _settings(doc.get("analysis", {}))

    if "registry" in prob:
        base = registry_problem(prob["registry"])
        if "critical_points" in doc or "gradient" in prob or "newton" in prob:
            raise ProblemError("a registry problem cannot redefine its gradient or critical points")
        return replace(base, analysis=settings, source=source)

    if "n" not in prob:
        raise ProblemError("[problem] needs n (half the state dimension)")
    n = int(prob["n"])
    if n < 1:
        raise ProblemError("n must be positive")
    names = [f"x{i + 1}" for i in range(2 * n)]
    energy = None
    mass = None
    if ("gradient" in prob) == ("newton" in prob):
        raise ProblemError("give exactly one of problem.gradient, problem.newton or problem.registry")
    if "gradient" in prob:
        gradient = _stack(_compile_all(prob["gradient"], names, raw, "gradient"))
        if "hamiltonian" in prob:
            H = _compile_all([prob["hamiltonian"]], names, raw, "hamiltonian", 1)[0]
            energy = lambda x: float(H(np.asarray(x, dtype=float)[None, :])[0])  # noqa: E731
    else:
        gradient, energy, mass = _newton(prob["newton"], n, raw)

    cps = []
    for k, entry in enumerate(doc.get("critical_points", [])):
        _check_keys(entry, "critical_points")
        point = np.array([float(_fraction(v)) for v in entry.get("point", [])])
        if point.size != 2 * n:
            raise ProblemError(f"critical point {k}: expected {2 * n} coordinates, got {point.size}")
        if ("A" in entry) != ("B" in entry):
            raise ProblemError(f"critical point {k}: declare both A and B or neither")
        A = _matrix(entry["A"], n, f"critical point {k} A") if "A" in entry else None
        B = _matrix(entry["B"], n, f"critical point {k} B") if "B" in entry else None
        index = entry.get("index")
        cps.append(CriticalPointSpec(
            point, None if index is None else int(index), bool(entry.get("strict_extremum", False)), A, B,
            str(entry.get("label", "")),
        ))
    if not cps:
        raise ProblemError("no [[critical_points]] declared")

    for k, cp in enumerate(cps):
        g = np.asarray(gradient(cp.point[None, :]), dtype=float)[0]
        if np.max(np.abs(g)) > GRADIENT_ZERO_TOL * (1.0 + np.max(np.abs(cp.point))):
            raise ProblemError(f"critical point {k}: |grad H| = {np.max(np.abs(g)):.3e} is not zero")

    name = str(prob.get("name", Path(source).stem if source != "<string>" else "problem"))
    return ProblemSpec(name, n, gradient, tuple(cps), settings, None, energy, mass, source)


def load_problem(path) -> ProblemSpec:
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc}") from None
    return load_problem_text(raw, str(path))


def point_label(point: np.ndarray) -> str:
    return "(" + ", ".join(re.sub(r"\.0$", "", f"{v:.12g}") for v in point) + ")"
