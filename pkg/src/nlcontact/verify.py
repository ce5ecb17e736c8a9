"""Manufactured-solution checks and the built-in unit-square test problem."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import fourier
from .expr import Field
from .fd import Grid, GridFunction, assemble_operator
from .geometry import ContactSpec, ProblemData, Rect, SideData, SplitGeometry
from .iterate import ContactProblem, IterationOptions, SolveReport, run

__all__ = [
    "ExactSolution",
    "ErrorTable",
    "ZeroReferenceError",
    "builtin_example",
    "c_norm",
    "operator_residual",
    "observed_orders",
    "poisson_as_contact",
    "cross_validate",
    "IterationStudy",
    "iteration_study",
]

# sources as they satisfy div(K grad u) = f for the manufactured solution
BUILTIN_F_MINUS = ("-(1/4)*x1*x2*(-16+pi^2*(1+x2^2))*cos(pi*x2/2)"
                " - pi*x1*(1+2*x2^2)*sin(pi*x2/2)")
BUILTIN_F_PLUS = ("-4*x1*x2*cos(pi*x2/2) + (1/4)*(x1-1)*(x2*(-16+pi^2*(1+2*x2^2))*cos(pi*x2/2)"
               " + 4*pi*(1+4*x2^2)*sin(pi*x2/2))")
BUILTIN_PHI0 = "(21/64)*x2*cos(pi*x2/2)"
BUILTIN_U_MINUS = "x1*x2*cos(pi*x2/2)"
BUILTIN_U_PLUS = "(1-x1)*x2*cos(pi*x2/2)"

BUILTIN_XI_MINUS = (Fraction(3, 8), Fraction(1, 4), Fraction(1, 8))
BUILTIN_XI_PLUS = (Fraction(5, 8), Fraction(3, 4))
BUILTIN_WEIGHT = Fraction(1, 8)


class ZeroReferenceError(ZeroDivisionError):
    def __init__(self, abs_error: float):
        self.abs_error = abs_error
        super().__init__(f"reference has zero C-norm (absolute error {abs_error:.6g})")


@dataclass(frozen=True)
class ExactSolution:
    u_minus: Field
    u_plus: Field
    xi0: float

    def u_gamma0(self, x2):
        return self.u_minus(np.full_like(np.asarray(x2, float), self.xi0), x2)

    def nodal(self, grid: Grid) -> np.ndarray:
        X, Y = np.meshgrid(grid.x1, grid.x2, indexing="ij")
        i0 = grid.column(self.xi0)
        vals = np.where(X < self.xi0, self.u_minus(X, Y), self.u_plus(X, Y))
        vals[i0] = self.u_gamma0(grid.x2)
        return vals


def builtin_example() -> tuple[ContactProblem, ExactSolution]:
    w = float(BUILTIN_WEIGHT)
    geom = SplitGeometry(Rect(1.0, 1.0), 0.5, tuple(map(float, BUILTIN_XI_MINUS)), tuple(map(float, BUILTIN_XI_PLUS)))
    spec = ContactSpec((w,) * 3, (w,) * 2, Field.of(BUILTIN_PHI0))
    data = ProblemData(
        minus=SideData(K11="1+x1^2", K22="1+x2^2", f=f"-({BUILTIN_F_MINUS})"),
        plus=SideData(K11="1+2*x1^2", K22="1+2*x2^2", f=f"-({BUILTIN_F_PLUS})"),
    )
    exact = ExactSolution(Field.of(BUILTIN_U_MINUS), Field.of(BUILTIN_U_PLUS), 0.5)
    return ContactProblem(geom, spec, data), exact


def c_norm(u, reference) -> tuple[float, float]:
    """Max-norm error over interior nodes, absolute and relative to the reference."""
    u = u.values if isinstance(u, GridFunction) else np.asarray(u, float)
    ref = reference.values if isinstance(reference, GridFunction) else np.asarray(reference, float)
    if u.shape != ref.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {ref.shape}")
    abs_err = float(np.max(np.abs(u[1:-1, 1:-1] - ref[1:-1, 1:-1])))
    scale = float(np.max(np.abs(ref[1:-1, 1:-1])))
    if scale == 0.0:
        raise ZeroReferenceError(abs_err)
    return abs_err, abs_err / scale


def operator_residual(exact: ExactSolution, problem: ContactProblem, grid: Grid) -> dict[str, float]:
    """``max |A u* - b|`` per side with the exact solution's nodal values."""
    nodal = exact.nodal(grid)
    out = {}
    for side in ("minus", "plus"):
        op = assemble_operator(side, problem.data, grid)
        lo, hi = grid.span(side)
        out[side] = float(np.max(np.abs(op.residual(nodal[lo:hi + 1]))))
    return out


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> list[float]:
    return [math.log(errors[i] / errors[i + 1]) / math.log(ratio) for i in range(len(errors) - 1)]


def poisson_as_contact(p: fourier.PoissonContactProblem) -> ContactProblem:
    """The same problem for the finite-difference path (``-Lap u = -f``)."""
    geom = SplitGeometry(Rect(1.0, 1.0), p.xi0, (p.xi_m,), (p.xi_p,))
    spec = ContactSpec((p.gamma_m,), (p.gamma_p,), p.phi0)
    data = ProblemData(
        minus=SideData(f=Field.of(f"-({p.f_minus.text})")),
        plus=SideData(f=Field.of(f"-({p.f_plus.text})")),
    )
    return ContactProblem(geom, spec, data)


@dataclass
class CrossValidation:
    discrepancy: float
    series: np.ndarray
    discrete: GridFunction
    report: SolveReport
    tail_estimate: float


def cross_validate(p: fourier.PoissonContactProblem, K: int, grid: Grid,
                   opts: IterationOptions | None = None, panels: int = fourier.DEFAULT_PANELS) -> CrossValidation:
    opts = opts or IterationOptions(max_iters=200, trace_tol=1e-13)
    sol = fourier.solve(p, K, panels)
    series = sol.on_grid(grid.x1, grid.x2)
    u, report = run(poisson_as_contact(p), grid, opts)
    return CrossValidation(float(np.max(np.abs(series - u.values))), series, u, report, sol.tail_estimate)


@dataclass
class ErrorTable:
    rows: list[tuple[int, float, float, float]]
    grid: str

    @classmethod
    def from_report(cls, report: SolveReport, grid: Grid) -> "ErrorTable":
        return cls(list(report.rows()), f"{grid.n1 + 2}x{grid.n2 + 2}")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "trace_delta", "abs_error", "rel_error"])
            for k, d, a, r in self.rows:
                w.writerow([k, f"{d:.17g}", f"{a:.17g}", f"{r:.17g}"])


@dataclass
class IterationStudy:
    """A full run that keeps the first ``keep`` iterates for later comparison."""

    grid: Grid
    field: GridFunction
    report: SolveReport
    exact: np.ndarray
    history: dict[int, np.ndarray] = field(default_factory=dict)

    def distance_to_converged(self, k: int) -> float:
        return float(np.max(np.abs(self.history[k][1:-1, 1:-1] - self.field.values[1:-1, 1:-1])))

    @property
    def discretization_error(self) -> tuple[float, float]:
        return c_norm(self.field, self.exact)


def iteration_study(problem: ContactProblem, exact: ExactSolution, grid: Grid,
                    opts: IterationOptions | None = None, keep: int = 10) -> IterationStudy:
    opts = opts or IterationOptions(max_iters=30, trace_tol=1e-13)
    ref = exact.nodal(grid)
    history: dict[int, np.ndarray] = {}

    def record(k, u, trace):
        if k <= keep:
            history[k] = u.values.copy()

    u, report = run(problem, grid, opts, reference=ref, callback=record)
    return IterationStudy(grid, u, report, ref, history)
