"""Outer iteration for the nonlocal contact problem.

Each sweep sets the interface trace from the previous sweep's line traces,

    u(xi0, .) = sum_i bm_i u-(xi-_i, .) + sum_j bp_j u+(xi+_j, .) + phi0,

then solves two independent Dirichlet problems and reads off the new line
traces.  The sup-norm change of the interface trace drives the stopping test
and the contraction estimate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .fd import (
    Grid,
    GridFunction,
    LinearSolveError,
    TraceFunction,
    assemble_operator,
    extract_trace,
    solve_linear,
    stitch,
)
from .geometry import (
    AdmissibilityError,
    ContactSpec,
    CoordinationReport,
    ProblemData,
    SplitGeometry,
    check_coordination,
    validate,
)

__all__ = [
    "ContactProblem",
    "IterationOptions",
    "SolveReport",
    "IterationError",
    "NonContractionError",
    "contact_update",
    "estimate_ratio",
    "run",
]

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps
# consecutive growing deltas before the run is declared non-contracting
ALARM_STREAK = 3


@dataclass(frozen=True)
class ContactProblem:
    geom: SplitGeometry
    spec: ContactSpec
    data: ProblemData

    def violations(self):
        return validate(self.geom, self.spec)

    def coordination(self, tol: float = 1e-12) -> CoordinationReport:
        return check_coordination(self.geom, self.spec, self.data, tol)


@dataclass
class IterationOptions:
    """``initial_traces`` is ``None`` (zero), a constant, or a mapping from
    abscissa (interface and every nonlocal line) to nodal values."""

    max_iters: int = 100
    trace_tol: float = 1e-12
    initial_traces: float | Mapping[float, np.ndarray] | None = None
    solver_tol: float = 1e-11
    interpolate: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.trace_tol > 0:
            raise ValueError("trace_tol must be positive")


@dataclass
class SolveReport:
    q_bound: float
    deltas: list[float] = field(default_factory=list)
    abs_errors: list[float] = field(default_factory=list)
    rel_errors: list[float] = field(default_factory=list)
    reason: str = "running"
    q_hat: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def iterations_run(self) -> int:
        return len(self.deltas)

    @property
    def quotients(self) -> list[float]:
        d = self.deltas
        return [d[i + 1] / d[i] if d[i] > 0 else math.nan for i in range(len(d) - 1)]

    def rows(self):
        """(k, trace_delta, abs_error, rel_error); errors are nan without a reference."""
        for i, d in enumerate(self.deltas):
            ae = self.abs_errors[i] if i < len(self.abs_errors) else math.nan
            re = self.rel_errors[i] if i < len(self.rel_errors) else math.nan
            yield i + 1, d, ae, re


class IterationError(RuntimeError):
    def __init__(self, message: str, report: SolveReport, iteration: int):
        self.report = report
        self.iteration = iteration
        super().__init__(f"sweep {iteration}: {message}")


class NonContractionError(IterationError):
    pass


def contact_update(prev_traces: Sequence[TraceFunction], spec: ContactSpec, x2: np.ndarray, xi0: float) -> TraceFunction:
    """Interface trace from the line traces, ordered as ``xi_minus + xi_plus``."""
    weights = spec.beta_minus + spec.beta_plus
    if len(prev_traces) != len(weights):
        raise ValueError(f"{len(prev_traces)} traces for {len(weights)} weights")
    x2 = np.asarray(x2, float)
    out = spec.phi0(np.full_like(x2, xi0), x2)
    for w, t in zip(weights, prev_traces):
        if np.shape(t.values) != x2.shape:
            raise ValueError(f"trace at x1={t.xi} has {np.size(t.values)} nodes, expected {x2.size}")
        out = out + w * t.values
    return TraceFunction(xi0, out)


def estimate_ratio(deltas: Sequence[float], window: int = 5) -> float:
    """Geometric mean of the last ``window`` usable quotients ``d[k+1]/d[k]``.

    Quotients whose denominator is below ``100 eps`` are dropped.
    """
    d = np.asarray(deltas, float)
    q = [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] >= 100 * EPS]
    if len(q) < 2:
        raise ValueError("need at least two usable quotients to estimate a ratio")
    tail = np.asarray(q[-min(window, len(d) - 1):])
    if np.any(tail <= 0):
        return 0.0
    return float(np.exp(np.mean(np.log(tail))))


def _initial(opts: IterationOptions, xi: float, n: int, grid: Grid) -> np.ndarray:
    init = opts.initial_traces
    if init is None:
        return np.zeros(n)
    if isinstance(init, (int, float)):
        return np.full(n, float(init))
    for key, vals in init.items():
        if abs(key - xi) <= 1e-12 * grid.h1:
            return np.asarray(vals, float).copy()
    raise KeyError(f"no initial trace for x1={xi}")


def run(
    problem: ContactProblem,
    grid: Grid,
    opts: IterationOptions | None = None,
    reference: np.ndarray | None = None,
    callback: Callable[[int, GridFunction, TraceFunction], None] | None = None,
) -> tuple[GridFunction, SolveReport]:
    """Iterate to a fixed point of the interface trace.

    ``reference`` (full-grid nodal values) enables per-sweep C-norm errors over
    interior nodes.  ``callback(k, field, trace)`` sees every sweep.
    """
    opts = opts or IterationOptions()
    viol = problem.violations()
    if viol:
        raise AdmissibilityError(viol)
    geom, spec = problem.geom, problem.spec
    report = SolveReport(q_bound=spec.weight_sum)
    coord = problem.coordination()
    if not coord.satisfied:
        msg = (f"coordination conditions violated (A0 defect {coord.residual_A0:.3e}, "
               f"B0 defect {coord.residual_B0:.3e}); corners stay Dirichlet-owned")
        log.warning(msg)
        report.warnings.append(msg)

    ops = {s: assemble_operator(s, problem.data, grid) for s in ("minus", "plus")}
    x2 = grid.x2
    n = x2.size
    corner = ops["minus"].boundary[-1, [0, -1]]

    lines = [TraceFunction(xi, _initial(opts, xi, n, grid)) for xi in geom.lines]
    trace_prev = _initial(opts, geom.xi0, n, grid)
    ref_norm = None
    if reference is not None:
        ref_norm = float(np.max(np.abs(reference[1:-1, 1:-1])))

    streak = 0
    u = None
    for k in range(1, opts.max_iters + 1):
        trace = contact_update(lines, spec, x2, geom.xi0)
        trace.values[[0, -1]] = corner
        try:
            sides = {s: solve_linear(ops[s].system(trace), opts.solver_tol) for s in ops}
        except LinearSolveError as exc:
            report.reason = "solver-failure"
            raise IterationError(str(exc), report, k) from exc
        u = stitch(sides["minus"], sides["plus"])
        prev_lines = lines
        lines = [extract_trace(sides["minus"], xi, opts.interpolate) for xi in geom.xi_minus]
        lines += [extract_trace(sides["plus"], xi, opts.interpolate) for xi in geom.xi_plus]

        d = float(np.max(np.abs(trace.values[1:-1] - trace_prev[1:-1])))
        report.deltas.append(d)
        if reference is not None:
            err = float(np.max(np.abs(u.values[1:-1, 1:-1] - reference[1:-1, 1:-1])))
            report.abs_errors.append(err)
            report.rel_errors.append(err / ref_norm if ref_norm > 0 else math.nan)
        if callback is not None:
            callback(k, u, trace)
        log.debug("sweep %d: trace delta %.3e", k, d)

        floor = 100 * EPS * max(1.0, float(np.max(np.abs(trace.values))))
        if k > 1 and d > report.deltas[-2] and d > floor:
            streak += 1
        else:
            streak = 0
        trace_prev = trace.values

        # the first delta compares against an arbitrary guess, so it only
        # certifies a fixed point if the line traces did not move either
        settled = k > 1 or max(
            float(np.max(np.abs(a.values[1:-1] - b.values[1:-1]))) for a, b in zip(lines, prev_lines)
        ) <= opts.trace_tol
        if d <= opts.trace_tol and settled:
            report.reason = "converged"
            break
        if streak >= ALARM_STREAK:
            report.reason = "non-contraction"
            _finish(report)
            raise NonContractionError(
                f"trace deltas grew {ALARM_STREAK} sweeps in a row (last {d:.3e})", report, k
            )
    else:
        report.reason = "max-iters"
    _finish(report)
    return u, report


def _finish(report: SolveReport) -> None:
    try:
        report.q_hat = estimate_ratio(report.deltas)
    except ValueError:
        report.q_hat = None
