"""Elliptic problems with multipoint nonlocal contact conditions on an interface.

Two solution paths: a sine-series solution of the constant-coefficient
Poisson case, and an outer iteration that reduces the variable-coefficient
problem to a sequence of Dirichlet solves on the two subdomains.
"""

from .expr import Field, parse
from .fd import Grid, GridFunction, TraceFunction
from .geometry import ContactSpec, ProblemData, Rect, SideData, SplitGeometry, check_coordination, validate
from .iterate import ContactProblem, IterationOptions, SolveReport, run
from .verify import ExactSolution, builtin_example

__all__ = [
    "Field",
    "parse",
    "Grid",
    "GridFunction",
    "TraceFunction",
    "ContactSpec",
    "ProblemData",
    "Rect",
    "SideData",
    "SplitGeometry",
    "check_coordination",
    "validate",
    "ContactProblem",
    "IterationOptions",
    "SolveReport",
    "run",
    "ExactSolution",
    "builtin_example",
]
