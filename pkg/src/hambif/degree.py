"""Brouwer degree of vector fields on boxes and the index of isolated zeros.

The degree is computed by recursive boundary reduction.  For a map
``G = (g_1, ..., g_k)`` on a k-dimensional box ``D`` with ``G != 0`` on the
boundary, and a pivot component ``g_i`` with sign ``s``,

    deg(G, D) = s (-1)^i  sum_{facets F}  o(F) deg(G without g_i, F & {s g_i > 0})

where ``o(F)`` is the orientation of the facet in its ascending free
coordinates.  The region ``F & {s g_i > 0}`` is never formed explicitly:
each facet is split into cells until some component has a certified sign
on every cell.  Cells where ``s g_i < 0`` or where another component is
nonzero contain no preimages and contribute nothing; cells where
``s g_i > 0`` recurse one dimension down.  The 1-dimensional base case is
``(sign g(hi) - sign g(lo)) / 2``.

Sign certification samples a 3^d grid on the cell.  With a Lipschitz hint the
minimum sampled magnitude must exceed the Lipschitz bound over the covering
radius.  Without one it must exceed ten times the largest second difference
along any grid line (the deviation of the samples from linear interpolation);
that is a heuristic and is reported as such.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

__all__ = [
    "Box",
    "DegreeCertificate",
    "DegreeError",
    "DepthExceeded",
    "IndexKind",
    "SecondZeroSuspected",
    "VectorField",
    "ZeroOnBoundary",
    "brouwer_degree",
    "index_shortcut",
    "topological_index",
]

SAMPLED_FACTOR = 10.0
SPLIT_FRACTION = 0.4876543  # off-centre so symmetric zeros avoid split planes


class DegreeError(RuntimeError):
    pass


class ZeroOnBoundary(DegreeError):
    def __init__(self, point, value):
        super().__init__(f"field vanishes on the box boundary near {np.round(point, 12).tolist()} (|F|={value:.3e})")
        self.point = np.asarray(point)


class DepthExceeded(DegreeError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class SecondZeroSuspected(DegreeError):
    def __init__(self, point):
        super().__init__(f"another zero suspected near {np.round(point, 10).tolist()}")
        self.point = np.asarray(point)


@dataclass(frozen=True)
class VectorField:
    """A map R^dim -> R^dim.

    ``func`` takes an ``(m, dim)`` array and returns ``(m, dim)`` when
    ``vectorized`` is true, otherwise a single point and a single vector.
    """

    dim: int
    func: Callable
    lipschitz: float | None = None
    vectorized: bool = True

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.vectorized:
            out = np.asarray(self.func(pts), dtype=float)
        else:
            out = np.array([np.asarray(self.func(p), dtype=float) for p in pts])
        return out.reshape(pts.shape[0], self.dim)

    @classmethod
    def linear(cls, M, with_lipschitz: bool = False) -> "VectorField":
        M = np.asarray(M, dtype=float)
        lip = float(np.linalg.norm(M, 2)) if with_lipschitz else None
        return cls(M.shape[0], lambda x: x @ M.T, lipschitz=lip)


@dataclass(frozen=True)
class Box:
    center: np.ndarray
    half_widths: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).ravel()
        h = np.broadcast_to(np.asarray(self.half_widths, dtype=float), c.shape).copy()
        if np.any(h <= 0):
            raise ValueError("half widths must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", h)

    @classmethod
    def cube(cls, center, half_width: float) -> "Box":
        c = np.asarray(center, dtype=float).ravel()
        return cls(c, np.full(c.shape, float(half_width)))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def lo(self):
        return self.center - self.half_widths

    @property
    def hi(self):
        return self.center + self.half_widths


@dataclass
class DegreeCertificate:
    grade: str
    cells: int = 0
    evaluations: int = 0
    deepest_split: int = 0
    min_boundary_norm: float = math.inf
    pivot_retries: int = 0
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "grade": self.grade,
            "cells": self.cells,
            "evaluations": self.evaluations,
            "deepest_split": self.deepest_split,
            "min_boundary_norm": self.min_boundary_norm,
            "pivot_retries": self.pivot_retries,
        }


class _Engine:
    """Level-by-level evaluation of the recursive boundary formula.

    Inner levels always pivot on their first remaining component, so every
    cell of a given dimension carries the same component list and the whole
    computation is a signed sum.  That lets each generation of cells of one
    dimension be evaluated in a single call to the field.
    """

    def __init__(self, F: VectorField, box: Box, max_depth: int, zero_tol: float, cert: DegreeCertificate):
        self.F = F
        self.box = box
        self.scale = box.half_widths
        self.max_depth = max_depth
        self.zero_tol = zero_tol
        self.cert = cert
        self._unit: dict[int, np.ndarray] = {}

    def _unit_grid(self, k: int) -> np.ndarray:
        if k not in self._unit:
            self._unit[k] = np.array(list(itertools.product((0.0, 0.5, 1.0), repeat=k)))
        return self._unit[k]

    def _check(self, pts: np.ndarray, vals: np.ndarray) -> None:
        norms = np.max(np.abs(vals), axis=1)
        worst = int(np.argmin(norms))
        if norms[worst] <= self.zero_tol:
            raise ZeroOnBoundary(pts[worst], norms[worst])
        self.cert.min_boundary_norm = min(self.cert.min_boundary_norm, float(norms[worst]))

    def _evaluate(self, lo, hi, free) -> np.ndarray:
        """Field values on the 3^k grid of each cell, shape (cells, 3^k, dim)."""
        m, k = free.shape
        unit = self._unit_grid(k)
        p = unit.shape[0]
        rows = np.arange(m)
        pts = np.repeat(lo[:, None, :], p, axis=1)
        width = hi[rows[:, None], free] - lo[rows[:, None], free]
        for j in range(k):
            pts[rows[:, None], np.arange(p)[None, :], free[:, j][:, None]] += unit[None, :, j] * width[:, j][:, None]
        flat = pts.reshape(m * p, -1)
        vals = self.F(flat)
        self.cert.evaluations += m * p
        self.cert.cells += m
        self._check(flat, vals)
        return vals.reshape(m, p, -1)

    def _signs(self, lo, hi, free, vals) -> np.ndarray:
        """Certified sign (+1, -1, or 0 when undecided) per cell and component."""
        m, _, dim = vals.shape
        k = free.shape[1]
        if self.F.lipschitz is not None:
            rows = np.arange(m)[:, None]
            radius = np.sqrt(np.sum(((hi[rows, free] - lo[rows, free]) / 4.0) ** 2, axis=1))
            margin = np.repeat((self.F.lipschitz * radius)[:, None], dim, axis=1)
        else:
            grid = vals.reshape((m,) + (3,) * k + (dim,))
            curvature = np.zeros((m, dim))
            for ax in range(1, k + 1):
                second = grid.take(0, ax) - 2.0 * grid.take(1, ax) + grid.take(2, ax)
                curvature = np.maximum(curvature, np.abs(second).reshape(m, -1, dim).max(axis=1))
            margin = SAMPLED_FACTOR * curvature
        margin = np.maximum(margin, self.zero_tol)[:, None, :]
        out = np.zeros((m, dim), dtype=int)
        out[np.all(vals > margin, axis=1)] = 1
        out[np.all(vals < -margin, axis=1)] = -1
        return out

    def _split(self, lo, hi, free, depth, weight):
        rows = np.arange(lo.shape[0])
        widths = (hi[rows[:, None], free] - lo[rows[:, None], free]) / self.scale[free]
        axis = free[rows, np.argmax(widths, axis=1)]
        cut = lo[rows, axis] + SPLIT_FRACTION * (hi[rows, axis] - lo[rows, axis])
        left_hi = hi.copy()
        left_hi[rows, axis] = cut
        right_lo = lo.copy()
        right_lo[rows, axis] = cut
        return (np.concatenate([lo, right_lo]), np.concatenate([left_hi, hi]),
                np.concatenate([free, free]), np.concatenate([depth, depth]) + 1,
                np.concatenate([weight, weight]))

    @staticmethod
    def _facets(lo, hi, free, weight):
        """Boundary facets of each cell with orientation folded into the weight."""
        rows = np.arange(lo.shape[0])
        parts = []
        for pos in range(free.shape[1]):
            axis = free[:, pos]
            rest = np.delete(free, pos, axis=1)
            for ends, sigma in ((lo, -1), (hi, 1)):
                flo = lo.copy()
                fhi = hi.copy()
                side = ends[rows, axis]
                flo[rows, axis] = side
                fhi[rows, axis] = side
                parts.append((flo, fhi, rest, weight * sigma * (-1) ** pos))
        return tuple(np.concatenate(x) for x in zip(*parts))

    def _endpoint_degree(self, lo, hi, comp: int, weight) -> int:
        pts = np.concatenate([lo, hi])
        vals = self.F(pts)
        self.cert.evaluations += len(pts)
        g = vals[:, comp]
        if np.min(np.abs(g)) <= self.zero_tol:
            i = int(np.argmin(np.abs(g)))
            raise ZeroOnBoundary(pts[i], float(abs(g[i])))
        m = lo.shape[0]
        return int(np.sum(weight * (np.sign(g[m:]) - np.sign(g[:m])).astype(int)) // 2)

    def degree(self, comps: tuple[int, ...], pos: int, s: int) -> int:
        """Degree over the whole box with top-level pivot ``comps[pos]`` of sign ``s``."""
        n = self.box.dim
        lo = self.box.lo[None, :]
        hi = self.box.hi[None, :]
        free = np.arange(n)[None, :]
        if n == 1:
            return self._endpoint_degree(lo, hi, comps[0], np.ones(1, dtype=int))
        pivot, sign = comps[pos], s
        rest = comps[:pos] + comps[pos + 1:]
        lo, hi, free, weight = self._facets(lo, hi, free, np.array([s * (-1) ** pos]))
        while True:
            k = len(rest)
            limit = self.max_depth * k
            depth = np.zeros(len(lo), dtype=int)
            found = []
            while len(lo):
                self.cert.deepest_split = max(self.cert.deepest_split, int(depth.max()))
                signs = self._signs(lo, hi, free, self._evaluate(lo, hi, free))
                sp = signs[:, pivot]
                live = (sp != -sign) & ~np.any(signs[:, list(rest)] != 0, axis=1)
                hit = live & (sp == sign)
                found.append((lo[hit], hi[hit], free[hit], weight[hit]))
                undecided = live & (sp == 0)
                if np.any(depth[undecided] >= limit):
                    i = int(np.flatnonzero(undecided & (depth >= limit))[0])
                    raise DepthExceeded(
                        f"could not certify a sign on cell lo={lo[i].tolist()} hi={hi[i].tolist()}")
                lo, hi, free, depth, weight = self._split(
                    lo[undecided], hi[undecided], free[undecided], depth[undecided], weight[undecided])
            lo, hi, free, weight = (np.concatenate(x) for x in zip(*found))
            if k == 1:
                return self._endpoint_degree(lo, hi, rest[0], weight)
            if len(lo) == 0:
                return 0
            # Inner levels pivot on their first component with positive sign.
            pivot, sign, rest = rest[0], 1, rest[1:]
            lo, hi, free, weight = self._facets(lo, hi, free, weight)


def _boundary_scale(F: VectorField, box: Box) -> float:
    pts = box.center + box.half_widths * np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=box.dim)))
    on_boundary = np.any(np.abs(np.abs(pts - box.center) - box.half_widths) == 0, axis=1)
    return float(np.max(np.abs(F(pts[on_boundary]))))


def brouwer_degree(F: VectorField, box: Box, max_depth: int = 12) -> tuple[int, DegreeCertificate]:
    """Degree of ``F`` on ``box`` at 0, with the evidence that produced it.

    Raises :class:`ZeroOnBoundary` when a boundary evaluation is below the
    zero tolerance and :class:`DepthExceeded` when no sign can be certified
    within ``max_depth`` splits per axis.
    """
    if F.dim != box.dim:
        raise ValueError(f"field dimension {F.dim} != box dimension {box.dim}")
    zero_tol = 1e-12 * (1.0 + _boundary_scale(F, box))
    grade = "lipschitz" if F.lipschitz is not None else "sampled, not certified"
    cert = DegreeCertificate(grade)
    engine = _Engine(F, box, max_depth, zero_tol, cert)
    comps = tuple(range(box.dim))
    errors = []
    for pos, s in itertools.product(range(box.dim), (1, -1)):
        try:
            deg = engine.degree(comps, pos, s)
            break
        except DepthExceeded as exc:
            cert.pivot_retries += 1
            errors.append(str(exc))
    else:
        raise DepthExceeded(f"all {len(errors)} pivots failed; last: {errors[-1]}")
    return deg, cert


class IndexKind(Enum):
    STRICT_EXTREMUM = "strict_extremum"
    NONDEGENERATE = "nondegenerate"


def index_shortcut(kind: IndexKind, det_sign: int | None = None) -> int:
    """Index of a zero from a structural fact rather than a computation."""
    if kind is IndexKind.STRICT_EXTREMUM:
        return 1
    if det_sign is None or det_sign == 0:
        raise ValueError("nondegenerate shortcut needs the nonzero sign of the determinant")
    return 1 if det_sign > 0 else -1


def _scan_for_other_zero(F: VectorField, box: Box, x0: np.ndarray, points_per_axis: int = 5):
    d = box.dim
    ticks = np.linspace(-1.0, 1.0, points_per_axis)
    grid = np.array(list(itertools.product(ticks, repeat=d)))
    pts = box.center + grid * box.half_widths
    norms = np.linalg.norm(F(pts), axis=1).reshape((points_per_axis,) * d)
    # x0 itself must not mask a neighbouring basin
    masked = norms.copy()
    at_x0 = np.linalg.norm(pts - x0, axis=1) <= 1e-12
    masked.reshape(-1)[at_x0] = np.inf
    is_min = np.ones_like(norms, dtype=bool)
    for ax in range(d):
        for shift in (1, -1):
            rolled = np.roll(masked, shift, axis=ax)
            edge = [slice(None)] * d
            edge[ax] = 0 if shift == 1 else -1
            rolled[tuple(edge)] = np.inf
            is_min &= norms <= rolled
    scale = 1.0 + float(np.max(norms))
    far = 0.05 * float(np.min(box.half_widths))
    for idx in np.argwhere(is_min):
        start = pts[np.ravel_multi_index(tuple(idx), norms.shape)]
        if np.linalg.norm(start - x0) <= 1e-12:
            continue
        sol = optimize.root(lambda x: F(x)[0], start, method="hybr")
        root = sol.x
        inside = np.all(np.abs(root - box.center) <= box.half_widths)
        if inside and np.max(np.abs(F(root)[0])) <= 1e-9 * scale and np.linalg.norm(root - x0) > far:
            return root
    return None


def topological_index(F: VectorField, x0, initial_half_width: float = 0.5,
                      max_depth: int = 12, max_shrinks: int = 6) -> tuple[int, DegreeCertificate]:
    """Degree of ``F`` on a box around ``x0`` that holds no other zero.

    A coarse grid scan followed by local root-finding looks for a second
    zero; the box is halved (at most ``max_shrinks`` times) until none is
    found.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    hw = float(initial_half_width)
    for attempt in range(max_shrinks + 1):
        box = Box.cube(x0, hw)
        other = _scan_for_other_zero(F, box, x0)
        if other is None:
            deg, cert = brouwer_degree(F, box, max_depth)
            cert.notes.append(f"box half-width {hw:g} after {attempt} shrink(s)")
            return deg, cert
        if attempt == max_shrinks:
            raise SecondZeroSuspected(other)
        hw /= 2.0
    raise AssertionError("unreachable")
