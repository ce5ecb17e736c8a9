"""Command line entry point: ``nlcontact run CONFIG [overrides]``.

Writes ``report.json``, ``iterations.csv`` and ``solution.csv`` into the
output directory.  Exit codes: 0 success, 2 configuration error, 3 solver
failure, 4 non-contraction alarm.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import fourier
from .config import ConfigError, RunConfig, load_config
from .fd import Grid, GridAlignmentError, GridFunction, LinearSolveError
from .geometry import AdmissibilityError
from .iterate import (ContactProblem, IterationError, IterationOptions, NonContractionError, SolveReport, run)
from .verify import c_norm, cross_validate, operator_residual

log = logging.getLogger("nlcontact")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ALARM = 0, 2, 3, 4


class PhaseError(RuntimeError):
    def __init__(self, phase: str, exc: Exception):
        self.phase = phase
        self.cause = exc
        super().__init__(f"[{phase}] {exc}")


@dataclass
class RunArtifacts:
    report: dict
    iterations: list[tuple[int, float, float, float]] = field(default_factory=list)
    solution: GridFunction | None = None


def emit_solution(u: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "u"])
        for x1, x2, v in u.rows():
            w.writerow([f"{x1:.17g}", f"{x2:.17g}", f"{v:.17g}"])


def emit_iterations(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "trace_delta", "abs_error", "rel_error"])
        for k, d, a, r in rows:
            w.writerow([k, f"{d:.17g}", f"{a:.17g}", f"{r:.17g}"])


def _finite_or_none(v):
    return None if v is None or not math.isfinite(v) else float(v)


def poisson_problem(cfg: RunConfig) -> fourier.PoissonContactProblem:
    """The constant-coefficient two-point problem a config describes, if it is one."""
    g, s = cfg.geom, cfg.spec
    problems = []
    if (g.rect.a, g.rect.b) != (1.0, 1.0):
        problems.append("the series path needs the unit square")
    if len(g.xi_minus) != 1 or len(g.xi_plus) != 1:
        problems.append("the series path needs exactly one nonlocal line per side")
    for side in ("minus", "plus"):
        d = cfg.data.side(side)
        if not (d.K11.is_constant and d.K11(0, 0) == 1 and d.K22.is_constant and d.K22(0, 0) == 1):
            problems.append(f"{side}: K11 and K22 must be 1")
        if not (d.K12.is_zero and d.K21.is_zero and d.k.is_zero and d.boundary.is_zero):
            problems.append(f"{side}: K12, K21, k and boundary must be 0")
    if problems:
        raise ConfigError("; ".join(problems))
    return fourier.PoissonContactProblem(
        g.xi0, g.xi_minus[0], g.xi_plus[0], s.beta_minus[0], s.beta_plus[0],
        f_minus=f"-({cfg.data.minus.f.text})", f_plus=f"-({cfg.data.plus.f.text})", phi0=s.phi0,
    )


def _grid(cfg: RunConfig) -> Grid:
    n = cfg.numerics
    return Grid.for_geometry(cfg.geom, n.n1, n.n2, n.interpolate_traces)


def _options(cfg: RunConfig) -> IterationOptions:
    n = cfg.numerics
    return IterationOptions(max_iters=n.max_iters, trace_tol=n.trace_tol, solver_tol=n.solver_tol,
                            interpolate=n.interpolate_traces)


def _base_report(cfg: RunConfig) -> dict:
    return {
        "mode": cfg.mode,
        "config_echo": cfg.to_sections(),
        "iterations": 0,
        "q_hat": None,
        "q_bound": cfg.spec.weight_sum,
        "final_abs_error": None,
        "final_rel_error": None,
        "warnings": [],
        "timings": {},
    }


def _fill_iteration(report: dict, sr: SolveReport) -> None:
    report["iterations"] = sr.iterations_run
    report["q_hat"] = sr.q_hat
    report["termination"] = sr.reason
    report["warnings"].extend(sr.warnings)
    if sr.abs_errors:
        report["final_abs_error"] = _finite_or_none(sr.abs_errors[-1])
        report["final_rel_error"] = _finite_or_none(sr.rel_errors[-1])


def execute(cfg: RunConfig) -> RunArtifacts:
    """Run the configured mode without touching the filesystem."""
    report = _base_report(cfg)
    timings = report["timings"]
    t0 = time.perf_counter()
    try:
        grid = _grid(cfg)
    except (GridAlignmentError, ValueError) as exc:
        raise PhaseError("grid", exc) from exc

    if cfg.mode in ("fourier", "cross-validate"):
        try:
            p = poisson_problem(cfg)
        except ConfigError as exc:
            raise PhaseError("config", exc) from exc

    if cfg.mode == "fourier":
        sol = fourier.solve(p, cfg.numerics.modes, cfg.numerics.panels)
        u = GridFunction(grid, "full", sol.on_grid(grid.x1, grid.x2))
        report["tail_estimate"] = sol.tail_estimate
        report["modes"] = sol.K
        if cfg.exact is not None:
            report["final_abs_error"], report["final_rel_error"] = _errors(u, cfg, grid)
        timings["solve"] = time.perf_counter() - t0
        return RunArtifacts(report, [], u)

    if cfg.mode == "cross-validate":
        cv = cross_validate(p, cfg.numerics.modes, grid, _options(cfg), cfg.numerics.panels)
        _fill_iteration(report, cv.report)
        report["discrepancy"] = cv.discrepancy
        report["tail_estimate"] = cv.tail_estimate
        timings["solve"] = time.perf_counter() - t0
        return RunArtifacts(report, list(cv.report.rows()), cv.discrete)

    problem = ContactProblem(cfg.geom, cfg.spec, cfg.data)
    reference = cfg.exact.nodal(grid) if cfg.exact is not None else None
    if cfg.mode == "verify":
        report["operator_residual"] = operator_residual(cfg.exact, problem, grid)
    u, sr = run(problem, grid, _options(cfg), reference=reference)
    _fill_iteration(report, sr)
    timings["solve"] = time.perf_counter() - t0
    return RunArtifacts(report, list(sr.rows()), u)


def _errors(u: GridFunction, cfg: RunConfig, grid: Grid):
    return c_norm(u, cfg.exact.nodal(grid))


def write_artifacts(art: RunArtifacts, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_iterations(art.iterations, out / "iterations.csv")
    if art.solution is not None:
        emit_solution(art.solution, out / "solution.csv")
    (out / "report.json").write_text(json.dumps(art.report, indent=2, sort_keys=True, allow_nan=False) + "\n")


def run_command(cfg: RunConfig) -> RunArtifacts:
    art = execute(cfg)
    write_artifacts(art, cfg.output_dir)
    return art


def _fail(cfg: RunConfig | None, phase: str, exc: Exception, code: int, sr: SolveReport | None = None) -> int:
    print(f"error [{phase}]: {exc}", file=sys.stderr)
    if cfg is not None:
        report = _base_report(cfg)
        report["error"] = {"phase": phase, "message": str(exc), "exit_code": code}
        if sr is not None:
            _fill_iteration(report, sr)
        rows = list(sr.rows()) if sr is not None else []
        write_artifacts(RunArtifacts(report, rows, None), cfg.output_dir)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlcontact", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a configuration file")
    r.add_argument("config", type=Path)
    r.add_argument("--grid", type=int, help="nodes per direction including the boundary (sets n1 = n2 = GRID - 2)")
    r.add_argument("--tol", type=float, help="trace_tol")
    r.add_argument("--max-iters", type=int)
    r.add_argument("--modes", type=int, help="Fourier truncation order")
    r.add_argument("--out-dir")
    r.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = None
    try:
        cfg = load_config(args.config).with_overrides(args.grid, args.tol, args.max_iters, args.modes, args.out_dir)
        art = run_command(cfg)
    except (ConfigError, OSError) as exc:
        return _fail(None, "config", exc, EXIT_CONFIG)
    except PhaseError as exc:
        code = EXIT_CONFIG if exc.phase in ("config", "grid") else EXIT_SOLVER
        return _fail(cfg, exc.phase, exc.cause, code)
    except AdmissibilityError as exc:
        return _fail(cfg, "admissibility", exc, EXIT_CONFIG)
    except NonContractionError as exc:
        return _fail(cfg, "iterate", exc, EXIT_ALARM, exc.report)
    except (IterationError, LinearSolveError) as exc:
        return _fail(cfg, "solve", exc, EXIT_SOLVER, getattr(exc, "report", None))
    rep = art.report
    summary = f"{rep['mode']}: {rep['iterations']} sweeps"
    if rep["q_hat"] is not None:
        summary += f", Q_hat={rep['q_hat']:.4f} (bound {rep['q_bound']:.4f})"
    if rep["final_abs_error"] is not None:
        summary += f", C-norm error {rep['final_abs_error']:.3e}"
    if "discrepancy" in rep:
        summary += f", series vs grid {rep['discrepancy']:.3e}"
    print(summary)
    for w in rep["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
