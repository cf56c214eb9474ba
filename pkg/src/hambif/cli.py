"""Command line entry point: ``hambif analyze <config>``.

Exit status is 0 for a completed analysis, 1 for bad input and 2 when the
library detects an internal inconsistency (routes disagreeing, or a
certificate whose Morse jump turns out to be zero).
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .analysis import analyze
from .bifindex import InternalConsistencyError
from .expr import ExpressionError
from .orbits import OrbitRecord, dump_orbit
from .problem import REGISTRY, ProblemError, load_problem, registry_problem

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hambif", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hambif {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="analyze a problem file or a built-in example")
    a.add_argument("config", help=f"TOML problem file, or one of: {', '.join(sorted(REGISTRY))}")
    a.add_argument("--jmax", type=int, help="largest harmonic j considered")
    a.add_argument("--lambda-window", type=float, nargs=2, metavar=("A", "B"), help="candidate window for lambda")
    a.add_argument("--validate-orbits", action="store_true", default=None,
                   help="shoot for the predicted orbits near certified candidates")
    a.add_argument("--report", choices=("text", "json"), default="text")
    a.add_argument("--out", type=Path, help="write the report here instead of stdout")
    a.add_argument("--orbit-dir", type=Path, help="directory for orbit dumps (with --validate-orbits)")
    return p


def _load(config: str):
    if not Path(config).exists() and config in REGISTRY:
        return registry_problem(config)
    return load_problem(config)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.jmax is not None and args.jmax < 1:
            raise ProblemError("--jmax must be at least 1")
        if args.lambda_window is not None and not 0 < args.lambda_window[0] < args.lambda_window[1]:
            raise ProblemError("--lambda-window needs 0 < A < B")
        spec = _load(args.config)
        seed = os.environ.get("HAMBIF_SEED")
        if seed is not None:
            try:
                spec = spec.with_analysis(seed=int(seed))
            except ValueError:
                raise ProblemError(f"HAMBIF_SEED must be an integer, got {seed!r}") from None
        with warnings.catch_warnings():
            # mismatches are recorded as report notes
            warnings.simplefilter("ignore")
            report = analyze(spec, jmax=args.jmax, lambda_window_=args.lambda_window,
                             validate_orbits=args.validate_orbits)
    except (ProblemError, ExpressionError) as exc:
        print(f"hambif: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalConsistencyError as exc:
        print(f"hambif: internal consistency error: {exc}", file=sys.stderr)
        if exc.evidence is not None:
            print(f"  evidence: {exc.evidence}", file=sys.stderr)
        return EXIT_INTERNAL

    text = report.to_json() if args.report == "json" else report.to_text()
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)

    if args.orbit_dir is not None:
        args.orbit_dir.mkdir(parents=True, exist_ok=True)
        for k, o in enumerate(report.orbits):
            if isinstance(o.result, OrbitRecord):
                path = args.orbit_dir / f"orbit_{k}_point{o.point}_lambda{o.lambda0:.6g}.txt"
                path.write_text(dump_orbit(o.result, spec.energy))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
