"""Problem files, parameter sweeps, and report serialization.

A problem file is a small JSON object:

    {
      "T": 5,                       required, interior site count
      "p": "const:2",               "const:P" | "linear:A:B" | [T+2 values]
      "nonlinearity": "example1-corrected",
                                    "example1-corrected" | "example1-paper" | "zero"
      "alpha": 1.0,                 scalar or length-T list, force weights
      "beta": 1.0,                  scalar or length-T list, perturbation weights
      "gamma": 0.05,                required, perturbation parameter
      "lambda": 1.0,                required, force parameter
      "solver": {"n_starts": 64}    optional SolverConfig overrides
    }

``run_sweep`` re-solves the problem over a (gamma, lambda) grid with the
deflated multistart solver, one reproducible seed stream per cell, and
tags each cell with whether the multiplicity pattern predicted for small
gamma showed up (at least three certified points, at least two of them
nontrivial).  Reports serialize to CSV (fixed column set, shortest
17-significant-digit floats) and JSON; reruns with the same seed are
byte-identical except for the wall-time field in the JSON.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, replace

import numpy as np

from .constants import (
    DegeneratePerturbationError,
    HypothesisViolationError,
    TheoremConstants,
    compute_constants,
)
from .energy import ExponentProfile, ProblemSpec
from .nonlinearity import NonlinearityConfigError, make_example1, make_zero
from .solver import SolverConfig, deflated_multistart

CSV_HEADER = (
    "gamma,lambda,n_critical,n_nontrivial,min_energy,max_energy,"
    "theorem_consistent,n_failed_starts"
)

_NONLINEARITY_NAMES = {
    "example1-corrected": "corrected-odd-g",
    "example1-paper": "paper-g",
    "zero": None,
}

_ALLOWED_KEYS = {"T", "p", "nonlinearity", "alpha", "beta", "gamma", "lambda", "solver"}

_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverConfig)}


class SpecFileError(RuntimeError):
    """Problem file could not be read or written."""


class SpecValidationError(ValueError):
    """Problem file content is malformed; message names the field."""


def _require_number(data: dict, key: str, *, optional: bool = False, default=None):
    if key not in data:
        if optional:
            return default
        raise SpecValidationError(f"missing required field {key!r}")
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecValidationError(f"field {key!r} must be a number, got {type(v).__name__}")
    if not np.isfinite(v):
        raise SpecValidationError(f"field {key!r} must be finite")
    return float(v)


def _parse_exponents(raw, n_sites: int) -> ExponentProfile:
    if isinstance(raw, str):
        parts = raw.split(":")
        try:
            if parts[0] == "const" and len(parts) == 2:
                return ExponentProfile.constant(n_sites, float(parts[1]))
            if parts[0] == "linear" and len(parts) == 3:
                return ExponentProfile.linear(n_sites, float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise SpecValidationError(f"field 'p': {exc}") from exc
        raise SpecValidationError(
            f"field 'p': expected 'const:P', 'linear:A:B', or a list, got {raw!r}"
        )
    if isinstance(raw, list):
        try:
            return ExponentProfile(np.asarray(raw, dtype=float))
        except (TypeError, ValueError) as exc:
            raise SpecValidationError(f"field 'p': {exc}") from exc
    raise SpecValidationError(f"field 'p' must be a string or list, got {type(raw).__name__}")


def _parse_weights(data: dict, key: str, n_sites: int):
    raw = data.get(key, 1.0)
    if isinstance(raw, list):
        if len(raw) != n_sites:
            raise SpecValidationError(f"field {key!r} must have length T={n_sites}")
        return [float(v) for v in raw]
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise SpecValidationError(f"field {key!r} must be a number or list")
    return float(raw)


def build_problem(data: dict) -> tuple[ProblemSpec, SolverConfig]:
    """Validate a problem dict and build the spec plus solver settings."""
    if not isinstance(data, dict):
        raise SpecValidationError(f"problem file must hold a JSON object, got {type(data).__name__}")
    unknown = set(data) - _ALLOWED_KEYS
    if unknown:
        raise SpecValidationError(f"unknown field(s): {', '.join(sorted(unknown))}")

    t_raw = data.get("T")
    if not isinstance(t_raw, int) or isinstance(t_raw, bool):
        raise SpecValidationError("field 'T' must be an integer")
    if t_raw < 1:
        raise SpecValidationError("field 'T' must be at least 1")
    n_sites = t_raw

    exponents = _parse_exponents(data.get("p", "const:2"), n_sites)

    name = data.get("nonlinearity")
    if name not in _NONLINEARITY_NAMES:
        raise SpecValidationError(
            f"field 'nonlinearity' must be one of {sorted(_NONLINEARITY_NAMES)}, got {name!r}"
        )
    variant = _NONLINEARITY_NAMES[name]
    alpha = _parse_weights(data, "alpha", n_sites)
    beta = _parse_weights(data, "beta", n_sites)
    try:
        if variant is None:
            force, perturbation = make_zero(n_sites)
        else:
            force, perturbation = make_example1(variant, alpha, beta, n_sites)
    except (ValueError, NonlinearityConfigError) as exc:
        raise SpecValidationError(str(exc)) from exc

    gamma = _require_number(data, "gamma")
    lam = _require_number(data, "lambda")

    solver_raw = data.get("solver", {})
    if not isinstance(solver_raw, dict):
        raise SpecValidationError("field 'solver' must be an object")
    unknown = set(solver_raw) - _SOLVER_KEYS
    if unknown:
        raise SpecValidationError(f"unknown solver field(s): {', '.join(sorted(unknown))}")
    try:
        cfg = SolverConfig(**solver_raw)
    except (TypeError, ValueError) as exc:
        raise SpecValidationError(f"field 'solver': {exc}") from exc

    try:
        spec = ProblemSpec(
            n_sites=n_sites,
            exponents=exponents,
            force=force,
            perturbation=perturbation,
            gamma=gamma,
            lam=lam,
        )
    except ValueError as exc:
        raise SpecValidationError(str(exc)) from exc
    return spec, cfg


def load_problem_file(path: str) -> tuple[ProblemSpec, SolverConfig, dict]:
    """Read and validate a problem file; returns (spec, solver, raw dict)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecFileError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecValidationError(
            f"{path} is not valid JSON: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    spec, cfg = build_problem(data)
    return spec, cfg, data


@dataclass(frozen=True)
class CellResult:
    """Solver outcome for one (gamma, lambda) grid cell."""

    gamma: float
    lam: float
    n_critical: int
    n_nontrivial: int
    min_energy: float | None
    max_energy: float | None
    theorem_consistent: bool
    n_failed_starts: int


@dataclass(frozen=True)
class SweepReport:
    problem: dict
    seed: int
    gammas: tuple[float, ...]
    lambdas: tuple[float, ...]
    constants: TheoremConstants | None
    cells: tuple[CellResult, ...]
    wall_time_seconds: float


def _cell_seed(seed: int, i: int, j: int) -> int:
    return int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])


def run_sweep(
    spec: ProblemSpec,
    gammas,
    lambdas,
    cfg: SolverConfig = SolverConfig(),
    problem_echo: dict | None = None,
) -> SweepReport:
    """Solve the problem on every (gamma, lambda) pair of the grid.

    Cell (i, j) gets its own seed stream derived from (cfg.seed, i, j),
    so any cell can be reproduced in isolation and the whole sweep is
    order-independent.  The theorem constants are computed once from the
    nonlinearities (None when they do not apply, e.g. the zero control).
    """
    t0 = time.monotonic()
    gammas = tuple(float(g) for g in gammas)
    lambdas = tuple(float(l) for l in lambdas)
    if not gammas or not lambdas:
        raise ValueError("gamma and lambda grids must be nonempty")
    try:
        constants = compute_constants(spec)
    except (NonlinearityConfigError, DegeneratePerturbationError, HypothesisViolationError):
        constants = None

    cells = []
    for i, g in enumerate(gammas):
        for j, l in enumerate(lambdas):
            cell_spec = replace(spec, gamma=g, lam=l)
            cell_cfg = replace(cfg, seed=_cell_seed(cfg.seed, i, j))
            result = deflated_multistart(cell_spec, cell_cfg)
            n_nontrivial = sum(1 for cp in result if not cp.is_trivial)
            energies = [cp.energy_value for cp in result]
            cells.append(
                CellResult(
                    gamma=g,
                    lam=l,
                    n_critical=len(result),
                    n_nontrivial=n_nontrivial,
                    min_energy=min(energies) if energies else None,
                    max_energy=max(energies) if energies else None,
                    theorem_consistent=len(result) >= 3 and n_nontrivial >= 2,
                    n_failed_starts=result.n_failed_starts,
                )
            )
    return SweepReport(
        problem=dict(problem_echo) if problem_echo else {},
        seed=cfg.seed,
        gammas=gammas,
        lambdas=lambdas,
        constants=constants,
        cells=tuple(cells),
        wall_time_seconds=time.monotonic() - t0,
    )


def _fmt(x: float | None) -> str:
    if x is None:
        return "nan"
    return "%.17g" % x


def render_csv(report: SweepReport) -> str:
    lines = [CSV_HEADER]
    for c in report.cells:
        lines.append(
            ",".join(
                [
                    _fmt(c.gamma),
                    _fmt(c.lam),
                    str(c.n_critical),
                    str(c.n_nontrivial),
                    _fmt(c.min_energy),
                    _fmt(c.max_energy),
                    "1" if c.theorem_consistent else "0",
                    str(c.n_failed_starts),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def report_to_dict(report: SweepReport) -> dict:
    return {
        "problem": report.problem,
        "seed": report.seed,
        "gammas": list(report.gammas),
        "lambdas": list(report.lambdas),
        "constants": dataclasses.asdict(report.constants) if report.constants else None,
        "cells": [dataclasses.asdict(c) for c in report.cells],
        "wall_time_seconds": report.wall_time_seconds,
    }


def render_json(report: SweepReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def write_report(report: SweepReport, csv_path: str | None, json_path: str | None) -> None:
    try:
        if csv_path is not None:
            with open(csv_path, "w", encoding="utf-8") as fh:
                fh.write(render_csv(report))
        if json_path is not None:
            with open(json_path, "w", encoding="utf-8") as fh:
                fh.write(render_json(report))
    except OSError as exc:
        raise SpecFileError(f"cannot write report: {exc}") from exc


def load_report(json_path: str) -> SweepReport:
    """Round-trip a JSON report back into a SweepReport."""
    try:
        with open(json_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SpecFileError(f"cannot read {json_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecValidationError(f"{json_path} is not valid JSON: {exc.msg}") from exc
    try:
        constants = (
            TheoremConstants(**data["constants"]) if data["constants"] is not None else None
        )
        cells = tuple(CellResult(**c) for c in data["cells"])
        return SweepReport(
            problem=data["problem"],
            seed=data["seed"],
            gammas=tuple(data["gammas"]),
            lambdas=tuple(data["lambdas"]),
            constants=constants,
            cells=cells,
            wall_time_seconds=data["wall_time_seconds"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError(f"{json_path}: malformed report: {exc}") from exc
