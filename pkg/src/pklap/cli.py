"""Command-line front end.

Subcommands:

    solve      find all critical points of one problem file
    sweep      re-solve over a (gamma, lambda) grid, write CSV/JSON
    verify     run the structural hypothesis checks on the nonlinearities
    constants  print the guarantee constants for a problem file
    oracle     exhaustive grid cross-check (small problems only)
    report     summarize a previously written JSON sweep report

Exit codes: 0 success, 1 invalid problem file or failed hypothesis
check, 2 solver found nothing to certify, 3 file I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import replace

from .constants import (
    DegeneratePerturbationError,
    HypothesisViolationError,
    compute_constants,
)
from .nonlinearity import NonlinearityConfigError, verify_assumptions
from .report import (
    SpecFileError,
    SpecValidationError,
    load_problem_file,
    load_report,
    render_csv,
    render_json,
    run_sweep,
    write_report,
)
from .solver import brute_force_oracle, deflated_multistart

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NO_SOLUTION = 2
EXIT_IO = 3


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _print_points(points) -> None:
    print(f"{len(points)} certified critical point(s)")
    for i, cp in enumerate(points):
        vals = " ".join("%.12g" % v for v in cp.point.interior)
        tag = "trivial" if cp.is_trivial else "nontrivial"
        print(
            f"[{i}] energy={cp.energy_value:.12g} residual={cp.residual_inf_norm:.3e} "
            f"{cp.morse} {tag} x=({vals})"
        )


def _points_json(points) -> list[dict]:
    return [
        {
            "interior": [float(v) for v in cp.point.interior],
            "energy": cp.energy_value,
            "residual_inf_norm": cp.residual_inf_norm,
            "morse": cp.morse,
            "is_trivial": cp.is_trivial,
        }
        for cp in points
    ]


def _parse_range(text: str, flag: str) -> list[float]:
    """Parse a grid given as "a:b:n": n evenly spaced values from a to b."""
    parts = text.split(":")
    if len(parts) != 3:
        raise SpecValidationError(f"{flag} must look like a:b:n, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise SpecValidationError(f"{flag}: {exc}") from exc
    if n < 1:
        raise SpecValidationError(f"{flag}: the point count must be at least 1")
    if n == 1:
        return [a]
    return [a + (b - a) * i / (n - 1) for i in range(n)]


def _cmd_solve(args) -> int:
    spec, cfg, _ = load_problem_file(args.problem)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    result = deflated_multistart(spec, cfg)
    if args.json:
        print(
            json.dumps(
                {
                    "points": _points_json(result.points),
                    "n_starts": result.n_starts,
                    "n_failed_starts": result.n_failed_starts,
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        _print_points(result.points)
        print(f"starts: {result.n_starts}, failed: {result.n_failed_starts}")
    if len(result) == 0:
        _err("no critical point certified")
        return EXIT_NO_SOLUTION
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec, cfg, raw = load_problem_file(args.problem)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    gammas = _parse_range(args.gamma, "--gamma")
    lambdas = _parse_range(args.lam, "--lambda")
    report = run_sweep(spec, gammas, lambdas, cfg, problem_echo=raw)
    write_report(report, args.csv, args.json)
    n_flagged = sum(1 for c in report.cells if c.theorem_consistent)
    print(
        f"swept {len(report.gammas)}x{len(report.lambdas)} grid: "
        f"{n_flagged}/{len(report.cells)} cells show the multiplicity pattern "
        f"({report.wall_time_seconds:.1f} s)"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    spec, _, _ = load_problem_file(args.problem)
    rep = verify_assumptions(
        spec.force, spec.perturbation, spec.exponents.p_minus
    )
    for label in sorted(rep.checks):
        chk = rep.checks[label]
        print(f"{label}: {chk.verdict}")
        if chk.note:
            print(f"    {chk.note}")
        for k, t, v in chk.witnesses[:5]:
            print(f"    witness: site {k}, t = {t:.6g}, value = {v:.6g}")
    if not rep.all_hold():
        _err("at least one hypothesis check failed")
        return EXIT_INVALID
    return EXIT_OK


def _cmd_constants(args) -> int:
    spec, _, _ = load_problem_file(args.problem)
    consts = compute_constants(spec, r_fraction=args.r_fraction)
    for f in dataclasses.fields(consts):
        print(f"{f.name} = {getattr(consts, f.name)!r}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    spec, cfg, _ = load_problem_file(args.problem)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    points = brute_force_oracle(spec, box_radius=args.box, grid_n=args.grid, cfg=cfg)
    _print_points(points)
    if len(points) == 0:
        _err("no critical point certified")
        return EXIT_NO_SOLUTION
    return EXIT_OK


def _cmd_report(args) -> int:
    rep = load_report(args.report_json)
    text = render_csv(rep) if args.format == "csv" else render_json(rep)
    if args.out is None:
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise SpecFileError(f"cannot write {args.out}: {exc}") from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pklap", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add_problem(p):
        p.add_argument("problem", help="path to a JSON problem file")
        p.add_argument("--seed", type=int, default=None, help="override the solver seed")

    p = sub.add_parser("solve", help="find all critical points of one problem")
    add_problem(p)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("sweep", help="re-solve over a (gamma, lambda) grid")
    add_problem(p)
    p.add_argument("--gamma", required=True, help="gamma grid as a:b:n")
    p.add_argument("--lambda", dest="lam", required=True, help="lambda grid as a:b:n")
    p.add_argument("--csv", default=None, help="CSV output path")
    p.add_argument("--json", default=None, help="JSON output path")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("verify", help="check the structural hypotheses")
    p.add_argument("problem", help="path to a JSON problem file")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("constants", help="print the guarantee constants")
    p.add_argument("problem", help="path to a JSON problem file")
    p.add_argument("--r-fraction", type=float, default=0.5)
    p.set_defaults(fn=_cmd_constants)

    p = sub.add_parser("oracle", help="exhaustive grid cross-check (T <= 3)")
    add_problem(p)
    p.add_argument("--box", type=float, required=True, help="half-width of the search box")
    p.add_argument("--grid", type=int, required=True, help="grid points per axis")
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("report", help="re-emit a JSON sweep report as CSV or JSON")
    p.add_argument("report_json", help="path to a report written by sweep")
    p.add_argument("--format", choices=("csv", "json"), required=True)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.set_defaults(fn=_cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SpecFileError as exc:
        _err(str(exc))
        return EXIT_IO
    except (
        SpecValidationError,
        NonlinearityConfigError,
        HypothesisViolationError,
        DegeneratePerturbationError,
    ) as exc:
        _err(str(exc))
        return EXIT_INVALID
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
