"""End-to-end analysis of a problem and its report.

Every number in the report is produced by one of the library operations;
this module only orchestrates and formats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bifalgebra import BlockHessian, lambda_window, product_spectrum
from .bifindex import (
    CriticalPoint,
    GlobalClassification,
    GlobalHypothesisError,
    IndexSource,
    Verdict,
    candidates,
    check_local,
    classify_global,
)
from .degree import DegreeError, IndexKind, VectorField, index_shortcut, topological_index
from .orbits import OrbitRecord, ShootingFailure, shoot_periodic, trajectory_metrics
from .problem import CriticalPointSpec, ProblemSpec, point_label
from .symmat import kernel_dim

__all__ = ["AnalysisReport", "OrbitValidation", "PointReport", "analyze", "resolve_index"]

PERIOD_TOL = 0.05


@dataclass
class PointReport:
    label: str
    point: CriticalPoint | None
    hessian: BlockHessian
    index: int | None
    index_source: str
    index_detail: str
    spectrum: list
    window: list
    verdicts: list[Verdict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


@dataclass
class OrbitValidation:
    point: int
    lambda0: float
    target_period: float
    result: OrbitRecord | ShootingFailure
    minimal_period: float | None = None
    hausdorff: float | None = None

    @property
    def converged(self) -> bool:
        return isinstance(self.result, OrbitRecord)

    @property
    def period_ok(self) -> bool:
        if self.minimal_period is None:
            return False
        return abs(self.minimal_period / self.target_period - 1.0) <= PERIOD_TOL


@dataclass
class AnalysisReport:
    problem: str
    source: str
    settings: dict
    points: list[PointReport]
    global_result: GlobalClassification | None
    global_note: str
    orbits: list[OrbitValidation]

    def to_dict(self) -> dict:
        return {
            "tool": {"name": "hambif", "version": __version__},
            "problem": self.problem,
            "source": self.source,
            "settings": self.settings,
            "critical_points": [_point_dict(p) for p in self.points],
            "global": _global_dict(self.global_result, self.global_note),
            "orbit_validation": [_orbit_dict(o) for o in self.orbits],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        return _render_text(self)


def resolve_index(spec: ProblemSpec, cp: CriticalPointSpec, L: BlockHessian):
    """``(index, source, detail)``; index is None when the degree computation fails."""
    if cp.index is not None:
        return cp.index, IndexSource.USER_ASSERTED, "asserted in the problem"
    if cp.strict_extremum:
        return index_shortcut(IndexKind.STRICT_EXTREMUM), IndexSource.SHORTCUT, "strict local extremum"
    if kernel_dim(L.L) == 0:
        sign = int(np.sign(np.linalg.det(L.L)))
        return index_shortcut(IndexKind.NONDEGENERATE, sign), IndexSource.SHORTCUT, "nondegenerate Hessian"
    F = VectorField(2 * spec.n, spec.gradient)
    try:
        deg, cert = topological_index(F, cp.point, spec.analysis.degree_half_width)
    except DegreeError as exc:
        return None, IndexSource.COMPUTED, f"degree computation failed: {exc}"
    detail = f"boundary subdivision ({cert.grade}); {cert.cells} cells; " + "; ".join(cert.notes)
    return deg, IndexSource.COMPUTED, detail


def analyze(spec: ProblemSpec, *, jmax: int | None = None, lambda_window_: tuple[float, float] | None = None,
            validate_orbits: bool | None = None) -> AnalysisReport:
    changes = {}
    if jmax is not None:
        changes["jmax"] = int(jmax)
    if lambda_window_ is not None:
        changes["lambda_window"] = tuple(float(v) for v in lambda_window_)
    if validate_orbits is not None:
        changes["validate_orbits"] = bool(validate_orbits)
    if changes:
        spec = spec.with_analysis(**changes)
    settings = spec.analysis
    a, b = settings.lambda_window

    reports: list[PointReport] = []
    for k, cps in enumerate(spec.critical_points):
        L, notes = spec.block_hessian(cps)
        index, source, detail = resolve_index(spec, cps, L)
        ps = product_spectrum(L)
        label = cps.label or point_label(cps.point)
        window = [(w.lam, list(w.contributors)) for w in lambda_window(L, a, b)]
        rep = PointReport(label, None, L, index, source.value, detail, list(ps.real), window, notes=list(notes))
        if ps.complex:
            rep.notes.append(f"non-real eigenvalues of AB set aside: {len(ps.complex)}")
        if index is not None:
            cp = CriticalPoint(cps.point, L, index, source, label)
            rep.point = cp
            for cand in candidates(cp, settings.jmax):
                if a <= cand.lambda0 <= b:
                    rep.verdicts.append(check_local(cp, cand, settings.jmax))
        reports.append(rep)

    global_result = None
    global_note = ""
    if all(r.point is not None for r in reports):
        try:
            global_result = classify_global([r.point for r in reports])
        except GlobalHypothesisError as exc:
            global_note = f"not applicable: {exc}"
    else:
        global_note = "not applicable: some index could not be determined"

    orbits = []
    if settings.validate_orbits:
        fld = spec.field
        for k, rep in enumerate(reports):
            for v in rep.verdicts:
                if not (v.certified and v.candidate.j == 1 and v.emanation and v.emanation.target_period):
                    continue
                res = shoot_periodic(fld, rep.point.x0, v.candidate.lambda0, settings.orbit_amplitude,
                                     hessian=rep.hessian, j0=1)
                ov = OrbitValidation(k, v.candidate.lambda0, v.emanation.target_period, res)
                if isinstance(res, OrbitRecord):
                    ov.hausdorff, ov.minimal_period = trajectory_metrics(res, rep.point.x0)
                orbits.append(ov)

    settings_echo = {
        "jmax": settings.jmax,
        "lambda_window": list(settings.lambda_window),
        "hessian": settings.hessian,
        "fd_step": settings.fd_step,
        "validate_orbits": settings.validate_orbits,
        "orbit_amplitude": settings.orbit_amplitude,
        "degree_half_width": settings.degree_half_width,
        "seed": settings.seed,
    }
    return AnalysisReport(spec.name, spec.source, settings_echo, reports, global_result, global_note, orbits)


def _num(x):
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    return x


def _verdict_dict(v: Verdict) -> dict:
    c = v.candidate
    out = {
        "j0": c.j,
        "nu0": c.nu,
        "mu": c.nu_multiplicity,
        "lambda0": c.lambda0,
        "certified": v.certified,
        "certified_by": v.certified_by.value if v.certified_by else None,
        "trail": [{"hypothesis": t.hypothesis, "passed": t.passed, "evidence": t.evidence} for t in v.trail],
    }
    if v.index is not None:
        out["eta"] = {str(j): e for j, e in v.index.etas.items()}
        out["morse_jumps"] = {
            str(j): {m.route.value: m.jump for m in jumps} for j, jumps in v.index.evidence.items()
        }
        out["epsilon"] = next(iter(v.index.evidence.values()))[0].epsilon
    if v.emanation is not None:
        e = v.emanation
        out["emanation"] = {
            "predicted_periods": [{"j": j, "period": p} for j, p in e.predicted_periods],
            "target_period": e.target_period,
            "minimal_period_certified": e.minimal_period_certified,
            "trail": [{"hypothesis": t.hypothesis, "passed": t.passed, "evidence": t.evidence} for t in e.trail],
        }
    return out


def _point_dict(p: PointReport) -> dict:
    return {
        "label": p.label,
        "A": p.hessian.A.tolist(),
        "B": p.hessian.B.tolist(),
        "index": p.index,
        "index_source": p.index_source,
        "index_detail": p.index_detail,
        "spectrum_AB": [{"nu": _num(nu), "multiplicity": m} for nu, m in p.spectrum],
        "lambda_window": [{"lambda": lam, "contributors": [{"j": j, "nu": nu} for j, nu in con]}
                          for lam, con in p.window],
        "candidates": [_verdict_dict(v) for v in p.verdicts],
        "notes": p.notes,
    }


def _global_dict(g: GlobalClassification | None, note: str) -> dict:
    if g is None:
        return {"applicable": False, "note": note}
    return {
        "applicable": True,
        "s": list(g.s),
        "S_plus": list(g.s_plus),
        "S_minus": list(g.s_minus),
        "p": [{"point": i, "omega": w, "mu": m} for i, w, m in g.p],
        "n": [{"point": i, "omega": w, "mu": m} for i, w, m in g.n],
        "E": g.E,
        "total_degree": g.total_degree,
        "unbounded_every_j": g.unbounded_every_j,
        "all_unbounded": g.all_unbounded,
        "at_least_unbounded": g.at_least_unbounded,
        "findings": list(g.findings),
    }


def _orbit_dict(o: OrbitValidation) -> dict:
    out = {"point": o.point, "lambda0": o.lambda0, "target_period": o.target_period, "converged": o.converged}
    r = o.result
    if isinstance(r, OrbitRecord):
        out.update({
            "lambda": float(r.lam),
            "residual": r.residual,
            "amplitude": r.amplitude,
            "requested_amplitude": r.requested_amplitude,
            "minimal_period": o.minimal_period,
            "period_within_5_percent": o.period_ok,
            "hausdorff_to_point": o.hausdorff,
            "energy_drift": r.energy_drift,
        })
    else:
        out.update({"failure": r.reason, "best_residual": r.best_residual, "retries": r.retries})
    return out


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _render_text(rep: AnalysisReport) -> str:
    lines = [f"hambif {__version__}: analysis of {rep.problem} ({rep.source})"]
    s = rep.settings
    lines.append(f"settings: jmax={s['jmax']} lambda_window={s['lambda_window']} hessian={s['hessian']} "
                 f"validate_orbits={s['validate_orbits']}")
    for k, p in enumerate(rep.points):
        lines.append("")
        lines.append(f"critical point {k}: {p.label}")
        lines.append(f"  A = {p.hessian.A.tolist()}")
        lines.append(f"  B = {p.hessian.B.tolist()}")
        idx = "unknown" if p.index is None else str(p.index)
        lines.append(f"  index = {idx} [{p.index_source}] {p.index_detail}")
        lines.append("  spectrum of AB: " + ", ".join(f"{_fmt(nu)} (x{m})" for nu, m in p.spectrum))
        for note in p.notes:
            lines.append(f"  note: {note}")
        for v in p.verdicts:
            c = v.candidate
            head = f"  lambda0 = {_fmt(c.lambda0)} (j0={c.j}, nu0={_fmt(c.nu)}, mu={c.nu_multiplicity}): "
            head += f"CERTIFIED by {v.certified_by.value}" if v.certified else "not certified"
            lines.append(head)
            failed = [t for t in v.trail if not t.passed and t.hypothesis.startswith("A")]
            for t in failed:
                lines.append(f"    {t.hypothesis}: fail ({t.evidence})")
            if v.index is not None and v.index.nonzero:
                lines.append("    eta: " + ", ".join(f"eta_{j}={e}" for j, e in v.index.nonzero.items()))
            if v.emanation is not None:
                e = v.emanation
                periods = ", ".join(f"{_fmt(pp)} (j={j})" for j, pp in e.predicted_periods)
                lines.append(f"    periods: {periods}")
                if e.target_period is not None:
                    tag = "certified" if e.minimal_period_certified else "not certified"
                    lines.append(f"    minimal period -> {_fmt(e.target_period)} ({tag})")
    lines.append("")
    g = rep.global_result
    if g is None:
        lines.append(f"global: {rep.global_note}")
    else:
        lines.append(f"global: S+={list(g.s_plus)} S-={list(g.s_minus)} #p={len(g.p)} #n={len(g.n)} "
                     f"E(H)={g.E} total degree={g.total_degree}")
        for f in g.findings:
            lines.append(f"  finding: {f}")
    for o in rep.orbits:
        r = o.result
        if isinstance(r, OrbitRecord):
            lines.append(f"orbit near point {o.point} at lambda0={_fmt(o.lambda0)}: converged, "
                         f"minimal period {_fmt(o.minimal_period)} vs {_fmt(o.target_period)} "
                         f"({'within' if o.period_ok else 'outside'} 5%), residual {r.residual:.2e}, "
                         f"amplitude {r.amplitude:.3e}")
        else:
            lines.append(f"orbit near point {o.point} at lambda0={_fmt(o.lambda0)}: FAILED ({r.reason})")
    return "\n".join(lines) + "\n"
