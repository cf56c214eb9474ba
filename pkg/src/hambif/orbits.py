"""Numerical validation of emanating periodic orbits.

Two independent checks live here.  :func:`linear_monodromy_kernel` detects
the parameters at which the linearized flow has periodic solutions, which is
an oracle for the candidate set.  :func:`shoot_periodic` looks for an actual
small periodic orbit of the nonlinear system near a certified point.

The shooting problem is posed on the fixed interval ``[0, 2 pi]`` for

    x' = (lam J + mu I) grad H(x)

with unknowns ``(xi, lam, mu)``, ``x(0) = x0 + xi``.  The unfolding
parameter ``mu`` makes the system square; on a periodic orbit it vanishes
because ``H`` is then a Lyapunov function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, linalg

from .bifalgebra import BlockHessian, build_Gj, symplectic_J
from .symmat import cluster_tol

__all__ = [
    "MAX_RETRIES",
    "SHOOT_TOL",
    "STEP_TOL",
    "DivergenceError",
    "FlowResult",
    "HamiltonianField",
    "OrbitRecord",
    "ShootingFailure",
    "continue_in_amplitude",
    "dump_orbit",
    "flow",
    "linear_monodromy_kernel",
    "shoot_periodic",
    "trajectory_metrics",
]

SHOOT_TOL = 1e-9
STEP_TOL = 1e-11
MAX_RETRIES = 6
MAX_NEWTON = 25
STEP_RCOND = 1e-6
STALL_RATIO = 0.5
PARAM_DRIFT = 0.05  # converged lam must stay within 5% of the requested one
SAMPLES = 841  # 840 = lcm(1..8) intervals, so every T/k is a sample time
SUBHARMONIC_MAX = 8
CENTER_TOL = 1e-6


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class HamiltonianField:
    """``x' = J grad H(x)`` on R^{2n}.

    ``gradient`` maps an ``(m, 2n)`` array to ``(m, 2n)``.  ``hessian`` maps
    one point to a ``(2n, 2n)`` matrix; without it central differences of
    the gradient are used.  ``energy`` is optional and only used for drift
    reporting.
    """

    n: int
    gradient: Callable
    hessian: Callable | None = None
    energy: Callable | None = None
    fd_step: float = 1e-6

    @classmethod
    def quadratic(cls, L: BlockHessian) -> "HamiltonianField":
        K = L.L
        return cls(L.n, lambda X: np.atleast_2d(X) @ K.T, lambda x: K, lambda x: 0.5 * float(x @ K @ x))

    @property
    def J(self) -> np.ndarray:
        return symplectic_J(self.n)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.gradient(np.asarray(x, dtype=float)[None, :]), dtype=float)[0]

    def hess(self, x: np.ndarray) -> np.ndarray:
        if self.hessian is not None:
            return np.asarray(self.hessian(np.asarray(x, dtype=float)), dtype=float)
        h = self.fd_step * np.maximum(1.0, np.abs(x))
        m = 2 * self.n
        pts = np.vstack([x + np.diag(h), x - np.diag(h)])
        g = np.asarray(self.gradient(pts), dtype=float)
        cols = (g[:m] - g[m:]) / (2.0 * h[:, None])
        return 0.5 * (cols + cols.T)

    def field(self, x: np.ndarray) -> np.ndarray:
        return self.J @ self.grad(x)


def linear_monodromy_kernel(L: BlockHessian, lam: float) -> int:
    """``dim ker(exp(2 pi lam J L) - I)``.

    Only eigenvalues of ``JL`` on the imaginary axis can contribute, so the
    exponential is taken of the centre block of an ordered real Schur form.
    That keeps hyperbolic directions from overflowing at large ``lam``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    M = symplectic_J(L.n) @ L.L
    scale = max(1.0, float(np.abs(M).sum(axis=1).max()))
    T, Z, k = linalg.schur(M, output="real", sort=lambda re, im: abs(re) <= CENTER_TOL * scale)
    if k == 0:
        return 0
    E = linalg.expm(2.0 * math.pi * lam * T[:k, :k]) - np.eye(k)
    sv = np.linalg.svd(E, compute_uv=False)
    return int(np.sum(sv <= cluster_tol(E)))


@dataclass(frozen=True)
class FlowResult:
    state: np.ndarray
    energy_drift: float | None = None


def _solve(rhs, y0, T, tol, t_eval=None):
    sol = integrate.solve_ivp(rhs, (0.0, T), y0, method="DOP853", rtol=tol, atol=tol, t_eval=t_eval)
    if not sol.success:
        raise DivergenceError(f"integration failed: {sol.message}")
    if not np.all(np.isfinite(sol.y)):
        raise DivergenceError("integration produced non-finite values")
    return sol


def flow(fld: HamiltonianField, x, T: float, step_tol: float = STEP_TOL, lam: float = 1.0) -> FlowResult:
    """Integrate ``x' = lam J grad H(x)`` for time ``T`` (negative runs backwards)."""
    x = np.asarray(x, dtype=float)
    if T == 0:
        return FlowResult(x.copy(), 0.0 if fld.energy is not None else None)
    J = fld.J
    sol = _solve(lambda t, y: lam * (J @ fld.grad(y)), x, T, step_tol)
    end = sol.y[:, -1]
    drift = None
    if fld.energy is not None:
        drift = abs(fld.energy(end) - fld.energy(x))
    return FlowResult(end, drift)


@dataclass(frozen=True)
class OrbitRecord:
    times: np.ndarray  # physical time, [0, 2 pi lam]
    states: np.ndarray
    period: float  # estimated minimal period
    residual: float
    amplitude: float
    lam: float
    mu: float
    requested_amplitude: float
    iterations: int
    energy_drift: float | None = None

    @property
    def samples(self):
        return list(zip(self.times, self.states))


@dataclass(frozen=True)
class ShootingFailure:
    reason: str
    retries: int
    best_residual: float
    attempts: tuple = field(default=())


def _initial_direction(L: BlockHessian, lam0: float, j0: int) -> np.ndarray:
    """Kernel vector of ``G_j0(lam0 L)`` mapped to a state ``(u, 0)``.

    Away from the candidate set there is no kernel; the eigenvector of the
    smallest eigenvalue in modulus is used instead.
    """
    G = build_Gj(L, j0, lam0)
    w, V = np.linalg.eigh(G)
    u = V[: L.n, int(np.argmin(np.abs(w)))]
    if np.linalg.norm(u) < 1e-8:
        raise ValueError("kernel direction has no y-component")
    xi = np.zeros(2 * L.n)
    xi[: L.n] = u / np.linalg.norm(u)
    return xi


class _Shooter:
    def __init__(self, fld: HamiltonianField, x0: np.ndarray, step_tol: float):
        self.fld = fld
        self.x0 = x0
        self.J = fld.J
        self.m = 2 * fld.n
        self.tol = step_tol

    def _rhs(self, lam, mu):
        m, J = self.m, self.J
        P = lam * J + mu * np.eye(m)

        def rhs(t, y):
            x = y[:m]
            g = self.fld.grad(x)
            Hs = self.fld.hess(x)
            A = P @ Hs
            Phi = y[m:m + m * m].reshape(m, m)
            s_lam = y[m + m * m:m + m * m + m]
            s_mu = y[m + m * m + m:]
            return np.concatenate([P @ g, (A @ Phi).ravel(), A @ s_lam + J @ g, A @ s_mu + g])

        return rhs

    def residual_and_jacobian(self, xi, lam, mu, a):
        m = self.m
        start = self.x0 + xi
        y0 = np.concatenate([start, np.eye(m).ravel(), np.zeros(2 * m)])
        sol = _solve(self._rhs(lam, mu), y0, 2.0 * math.pi, self.tol)
        y = sol.y[:, -1]
        end = y[:m]
        Phi = y[m:m + m * m].reshape(m, m)
        s_lam = y[m + m * m:m + m * m + m]
        s_mu = y[m + m * m + m:]

        f = self.J @ self.fld.grad(start)
        Hs = self.fld.hess(start)
        r = np.concatenate([end - start, [xi @ xi / a - a, xi @ f]])
        Jac = np.zeros((m + 2, m + 2))
        Jac[:m, :m] = Phi - np.eye(m)
        Jac[:m, m] = s_lam
        Jac[:m, m + 1] = s_mu
        Jac[m, :m] = 2.0 * xi / a
        Jac[m + 1, :m] = f + (self.J @ Hs).T @ xi
        return r, Jac

    def newton(self, xi, lam, mu, a):
        """Damped Gauss-Newton with a truncated-SVD step.

        The truncation keeps near-degenerate directions (zero modes of the
        Hessian) from producing huge steps; stagnation ends the attempt so
        the caller can retry at a smaller amplitude.
        """
        best = (math.inf, xi, lam, mu)
        r, Jac = self.residual_and_jacobian(xi, lam, mu, a)
        stalled = 0
        for it in range(MAX_NEWTON):
            norm = float(np.linalg.norm(r))
            if norm < best[0]:
                stalled = stalled + 1 if norm > STALL_RATIO * best[0] else 0
                best = (norm, xi, lam, mu)
            else:
                stalled += 1
            if norm <= SHOOT_TOL:
                return True, xi, lam, mu, norm, it
            if stalled >= 2 or lam <= 0:
                break
            step = np.linalg.lstsq(Jac, -r, rcond=STEP_RCOND)[0]
            t = 1.0
            while True:
                cand = (xi + t * step[:self.m], lam + t * step[self.m], mu + t * step[self.m + 1])
                try:
                    r2, J2 = self.residual_and_jacobian(*cand, a)
                    if np.linalg.norm(r2) < norm or t < 1e-3:
                        break
                except DivergenceError:
                    if t < 1e-3:
                        return False, *best[1:], best[0], it
                t *= 0.5
            xi, lam, mu = cand
            r, Jac = r2, J2
        return False, best[1], best[2], best[3], best[0], it


def shoot_periodic(
    fld: HamiltonianField,
    x0,
    lambda0: float,
    amplitude: float,
    *,
    hessian: BlockHessian,
    j0: int = 1,
    step_tol: float = STEP_TOL,
    max_retries: int = MAX_RETRIES,
) -> OrbitRecord | ShootingFailure:
    """Search for a periodic orbit of amplitude ``amplitude`` near ``x0``.

    On failure the amplitude is halved, at most ``max_retries`` times.  An
    orbit whose parameter drifted more than 5% from ``lambda0`` belongs to a
    different candidate and counts as a failure.
    """
    if amplitude <= 0 or lambda0 <= 0:
        raise ValueError("amplitude and lambda0 must be positive")
    x0 = np.asarray(x0, dtype=float)
    shooter = _Shooter(fld, x0, step_tol)
    direction = _initial_direction(hessian, lambda0, j0)
    a = float(amplitude)
    attempts = []
    best = math.inf
    for attempt in range(max_retries + 1):
        ok, xi, lam, mu, res, its = shooter.newton(a * direction, lambda0, 0.0, a)
        best = min(best, res)
        drift = abs(lam / lambda0 - 1.0)
        attempts.append((a, res, lam))
        if ok and drift <= PARAM_DRIFT:
            return _record(fld, x0, xi, lam, mu, res, a, its, step_tol)
        if ok:
            return ShootingFailure(
                f"converged at lambda={lam:.6g}, {100 * drift:.1f}% away from the requested {lambda0:.6g}",
                attempt, best, tuple(attempts))
        a /= 2.0
    return ShootingFailure("Newton did not converge within the retry budget", max_retries, best, tuple(attempts))


def continue_in_amplitude(
    fld: HamiltonianField,
    x0,
    lambda0: float,
    amplitudes,
    *,
    hessian: BlockHessian,
    j0: int = 1,
    step_tol: float = STEP_TOL,
) -> list[OrbitRecord | ShootingFailure]:
    """Follow one family through increasing amplitudes.

    The first amplitude is shot from scratch (with the usual retries);
    later ones start from a secant prediction of ``(xi, lam)`` built from
    the previous one or two solutions.  Stops at the first failure.
    """
    amplitudes = [float(a) for a in amplitudes]
    if not amplitudes or any(a <= 0 for a in amplitudes):
        raise ValueError("amplitudes must be a nonempty list of positive numbers")
    x0 = np.asarray(x0, dtype=float)
    first = shoot_periodic(fld, x0, lambda0, amplitudes[0], hessian=hessian, j0=j0, step_tol=step_tol)
    out: list[OrbitRecord | ShootingFailure] = [first]
    if isinstance(first, ShootingFailure) or first.requested_amplitude != amplitudes[0]:
        return out
    shooter = _Shooter(fld, x0, step_tol)
    history = [(amplitudes[0], first.states[0] - x0, first.lam, first.mu)]
    for a in amplitudes[1:]:
        a_prev, xi_prev, lam_prev, mu_prev = history[-1]
        xi_guess = xi_prev * (a / a_prev)
        lam_guess = lam_prev
        if len(history) > 1:
            a_pp, _, lam_pp, _ = history[-2]
            lam_guess = lam_prev + (lam_prev - lam_pp) * (a - a_prev) / (a_prev - a_pp)
        ok, xi, lam, mu, res, its = shooter.newton(xi_guess, lam_guess, mu_prev, a)
        if not ok:
            out.append(ShootingFailure(f"continuation lost the family at amplitude {a:.3g}", 0, res,
                                       ((a, res, lam),)))
            break
        out.append(_record(fld, x0, xi, lam, mu, res, a, its, step_tol))
        history.append((a, xi, lam, mu))
    return out


def _record(fld, x0, xi, lam, mu, res, a, its, step_tol) -> OrbitRecord:
    T = 2.0 * math.pi * lam
    times = np.linspace(0.0, T, SAMPLES)
    J = fld.J
    sol = _solve(lambda t, y: J @ fld.grad(y), x0 + xi, T, step_tol, t_eval=times)
    states = sol.y.T
    drift = None
    if fld.energy is not None:
        e = np.array([fld.energy(s) for s in states])
        drift = float(np.max(np.abs(e - e[0])))
    amp = float(np.max(np.linalg.norm(states - x0, axis=1)))
    rec = OrbitRecord(times, states, T, res, amp, lam, mu, a, its, drift)
    _, period = trajectory_metrics(rec, x0)
    return OrbitRecord(times, states, period, res, amp, lam, mu, a, its, drift)


def trajectory_metrics(rec: OrbitRecord, x0, tol: float = 10 * SHOOT_TOL) -> tuple[float, float]:
    """``(Hausdorff distance of the trajectory to x0, minimal period)``.

    The distance from a set to a point is the largest distance of its
    elements.  The minimal period is the smallest ``T/k``, ``k <= 8``, at
    which the sampled orbit returns to its start.
    """
    x0 = np.asarray(x0, dtype=float)
    hausdorff = float(np.max(np.linalg.norm(rec.states - x0, axis=1)))
    T = rec.times[-1] - rec.times[0]
    intervals = len(rec.times) - 1
    period = T
    for k in range(SUBHARMONIC_MAX, 1, -1):
        if intervals % k:
            continue
        if np.linalg.norm(rec.states[intervals // k] - rec.states[0]) <= tol:
            period = T / k
            break
    return hausdorff, float(period)


def dump_orbit(rec: OrbitRecord, energy: Callable | None = None) -> str:
    """Plain-text table: t, state components and, if given, H."""
    m = rec.states.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(m)] + (["H"] if energy is not None else [])
    lines = ["# " + " ".join(header)]
    for t, s in zip(rec.times, rec.states):
        row = [t, *s] + ([energy(s)] if energy is not None else [])
        lines.append(" ".join(f"{v:.15e}" for v in row))
    return "\n".join(lines) + "\n"
