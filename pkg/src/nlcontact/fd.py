"""Finite differences for ``-div(K grad u) + k u = f`` on one subdomain.

Principal terms use coefficients sampled at half nodes (conservative form);
the mixed terms use the 4-point cross stencil with coefficients at the
neighbouring full nodes.  Unknowns are ordered column by column (x1 outer),
so the matrix bandwidth is ``n2 + 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import AdmissibilityError, ProblemData, SplitGeometry, check_ellipticity

__all__ = [
    "Grid",
    "GridFunction",
    "TraceFunction",
    "SideOperator",
    "LinearSystem",
    "LinearSolveError",
    "GridAlignmentError",
    "assemble_operator",
    "assemble",
    "solve_linear",
    "extract_trace",
    "stitch",
]

log = logging.getLogger(__name__)

Side = Literal["minus", "plus", "full"]

ALIGN_TOL = 1e-12


class GridAlignmentError(ValueError):
    pass


class LinearSolveError(RuntimeError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (relative residual {residual:.3e})")


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on ``[0,a] x [0,b]`` with ``n1 x n2`` interior nodes.

    ``xi0`` marks the interface column; ``None`` means an unsplit grid.
    """

    a: float
    b: float
    n1: int
    n2: int
    xi0: float | None = None

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("grid needs at least one interior node per direction")
        if self.xi0 is not None and self.column(self.xi0) is None:
            raise GridAlignmentError(f"interface xi0={self.xi0} is not on a grid column (h1={self.h1})")

    @classmethod
    def for_geometry(cls, geom: SplitGeometry, n1: int, n2: int, interpolate: bool = False) -> "Grid":
        grid = cls(geom.rect.a, geom.rect.b, n1, n2, geom.xi0)
        if not interpolate:
            off = [xi for xi in geom.lines if grid.column(xi) is None]
            if off:
                raise GridAlignmentError(
                    f"nonlocal lines {off} are off the grid (h1={grid.h1}); "
                    "choose n1+1 divisible accordingly or enable interpolation"
                )
        if grid.i0 in (0, n1 + 1) or grid.i0 is None:
            raise GridAlignmentError("interface must be an interior column")
        return grid

    @classmethod
    def square(cls, nodes: int, xi0: float | None = None, a: float = 1.0, b: float = 1.0) -> "Grid":
        """Grid with ``nodes`` points per direction, boundary included."""
        return cls(a, b, nodes - 2, nodes - 2, xi0)

    @property
    def h1(self) -> float:
        return self.a / (self.n1 + 1)

    @property
    def h2(self) -> float:
        return self.b / (self.n2 + 1)

    @property
    def x1(self) -> np.ndarray:
        return np.arange(self.n1 + 2) * self.h1

    @property
    def x2(self) -> np.ndarray:
        return np.arange(self.n2 + 2) * self.h2

    def column(self, xi: float) -> int | None:
        i = int(round(xi / self.h1))
        if 0 <= i <= self.n1 + 1 and abs(i * self.h1 - xi) <= ALIGN_TOL * self.h1:
            return i
        return None

    @property
    def i0(self) -> int | None:
        return None if self.xi0 is None else self.column(self.xi0)

    def span(self, side: Side) -> tuple[int, int]:
        """First and last column index (inclusive) owned by ``side``."""
        if side == "full":
            return 0, self.n1 + 1
        if self.i0 is None:
            raise ValueError("grid has no interface column")
        return (0, self.i0) if side == "minus" else (self.i0, self.n1 + 1)


@dataclass
class GridFunction:
    """Nodal values on the columns ``lo..hi`` of a grid, boundary included.

    ``values[i - lo, j]`` is the value at ``(x1[i], x2[j])``.
    """

    grid: Grid
    side: Side
    values: np.ndarray

    @property
    def lo(self) -> int:
        return self.grid.span(self.side)[0]

    @property
    def x1(self) -> np.ndarray:
        lo, hi = self.grid.span(self.side)
        return self.grid.x1[lo:hi + 1]

    @property
    def x2(self) -> np.ndarray:
        return self.grid.x2

    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def rows(self):
        """(x1, x2, u) triples, row-major in x2 then x1."""
        x1, x2 = self.x1, self.x2
        for j in range(len(x2)):
            for i in range(len(x1)):
                yield x1[i], x2[j], self.values[i, j]


@dataclass
class TraceFunction:
    xi: float
    values: np.ndarray


def _side_fields(side: Side, problem: ProblemData, grid: Grid):
    """Evaluator for a named coefficient on a side (piecewise for ``full``)."""
    if side in ("minus", "plus"):
        data = problem.side(side)
        return lambda name, x1, x2: getattr(data, name)(x1, x2)

    xi0 = grid.xi0

    def piecewise(name, x1, x2):
        left = getattr(problem.minus, name)(x1, x2)
        if xi0 is None:
            return left
        right = getattr(problem.plus, name)(x1, x2)
        return np.where(x1 <= xi0 + ALIGN_TOL * grid.h1, left, right)

    return piecewise


@dataclass
class SideOperator:
    """Discrete ``-L`` on one side split into interior and boundary couplings."""

    grid: Grid
    side: Side
    A: sp.csr_matrix
    B: sp.csr_matrix           # couples interior rows to boundary/interface nodes
    f: np.ndarray              # source at interior nodes, column-major order
    boundary: np.ndarray       # Dirichlet values on the full node array of the side
    _lu: object = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        lo, hi = self.grid.span(self.side)
        return hi - lo + 1, self.grid.n2 + 2

    def factor(self):
        if self._lu is None:
            self._lu = spla.splu(self.A.tocsc())
        return self._lu

    def node_values(self, trace: "TraceFunction | None") -> np.ndarray:
        vals = self.boundary.copy()
        if self.side != "full":
            if trace is None:
                raise ValueError("subdomain assembly needs an interface trace")
            i0 = self.grid.i0
            if self.grid.column(trace.xi) != i0:
                raise GridAlignmentError(f"trace at x1={trace.xi} is not on the interface column")
            col = i0 - self.grid.span(self.side)[0]
            # corner nodes stay Dirichlet-owned
            vals[col, 1:-1] = trace.values[1:-1]
        return vals

    def system(self, trace: "TraceFunction | None" = None) -> "LinearSystem":
        vals = self.node_values(trace)
        bnd = _boundary_vector(vals)
        return LinearSystem(self, self.f - self.B @ bnd, vals)

    def residual(self, nodal: np.ndarray) -> np.ndarray:
        """``A u + B u_bnd - f`` for full nodal values of the side."""
        return self.A @ nodal[1:-1, 1:-1].ravel() + self.B @ _boundary_vector(nodal) - self.f


def _boundary_vector(vals: np.ndarray) -> np.ndarray:
    mask = np.ones(vals.shape, bool)
    mask[1:-1, 1:-1] = False
    return vals[mask]


@dataclass
class LinearSystem:
    operator: SideOperator
    rhs: np.ndarray
    nodal: np.ndarray          # boundary and interface values, interior zero

    @property
    def matrix(self) -> sp.csr_matrix:
        return self.operator.A

    def index(self, i: int, j: int) -> int:
        """Unknown number of the interior node at side-local column ``i``, row ``j``."""
        return (i - 1) * self.operator.grid.n2 + (j - 1)


def assemble_operator(side: Side, problem: ProblemData, grid: Grid) -> SideOperator:
    lo, hi = grid.span(side)
    n2 = grid.n2
    h1, h2 = grid.h1, grid.h2
    ncol = hi - lo + 1
    xs = grid.x1[lo:hi + 1]
    ys = grid.x2
    if ncol < 3:
        raise GridAlignmentError(f"{side} side has no interior columns")
    coef = _side_fields(side, problem, grid)

    X, Y = np.meshgrid(xs, ys, indexing="ij")
    XI, YI = X[1:-1, 1:-1], Y[1:-1, 1:-1]

    names = (side,) if side != "full" else ("minus", "plus") if grid.xi0 is not None else ("minus",)
    viol = [v for s in names for v in check_ellipticity(problem.side(s), X, Y, s)]
    if viol:
        raise AdmissibilityError(viol)

    cE = coef("K11", XI + h1 / 2, YI) / h1**2
    cW = coef("K11", XI - h1 / 2, YI) / h1**2
    cN = coef("K22", XI, YI + h2 / 2) / h2**2
    cS = coef("K22", XI, YI - h2 / 2) / h2**2
    diag = cE + cW + cN + cS + coef("k", XI, YI)

    # node numbering over the whole side (boundary included)
    full_id = np.arange(ncol * (n2 + 2)).reshape(ncol, n2 + 2)
    I, J = np.meshgrid(np.arange(1, ncol - 1), np.arange(1, n2 + 1), indexing="ij")
    rows = (I - 1) * n2 + (J - 1)

    entries = [
        (0, 0, diag),
        (1, 0, -cE), (-1, 0, -cW), (0, 1, -cN), (0, -1, -cS),
    ]
    if any(problem.side(s).has_mixed for s in names):
        c = 4.0 * h1 * h2
        k12e = coef("K12", XI + h1, YI) / c
        k12w = coef("K12", XI - h1, YI) / c
        k21n = coef("K21", XI, YI + h2) / c
        k21s = coef("K21", XI, YI - h2) / c
        entries += [
            (1, 1, -k12e - k21n), (1, -1, k12e + k21s),
            (-1, 1, k12w + k21n), (-1, -1, -k12w - k21s),
        ]

    r, cidx, v = [], [], []
    for di, dj, val in entries:
        r.append(rows.ravel())
        cidx.append(full_id[I + di, J + dj].ravel())
        v.append(np.broadcast_to(val, rows.shape).ravel())
    r = np.concatenate(r)
    cidx = np.concatenate(cidx)
    v = np.concatenate(v)
    M = sp.csr_matrix((v, (r, cidx)), shape=(rows.size, full_id.size))
    M.sum_duplicates()

    interior = np.zeros(full_id.shape, bool)
    interior[1:-1, 1:-1] = True
    A = M[:, full_id[interior]].tocsr()
    B = M[:, full_id[~interior]].tocsr()
    A.eliminate_zeros()
    B.eliminate_zeros()

    f = coef("f", XI, YI).ravel()
    boundary = coef("boundary", X, Y).astype(float)
    boundary[1:-1, 1:-1] = 0.0
    return SideOperator(grid, side, A, B, f, boundary)


def assemble(side: Side, problem: ProblemData, grid: Grid, contact_trace: TraceFunction | None = None) -> LinearSystem:
    return assemble_operator(side, problem, grid).system(contact_trace)


def _residual(A, x, b) -> float:
    nb = np.max(np.abs(b)) if b.size else 0.0
    r = np.max(np.abs(A @ x - b)) if b.size else 0.0
    return r / nb if nb > 0 else r


def _banded_solve(A: sp.csr_matrix, b: np.ndarray, bw: int) -> np.ndarray:
    n = A.shape[0]
    coo = A.tocoo()
    ab = np.zeros((2 * bw + 1, n))
    ab[bw + coo.row - coo.col, coo.col] = coo.data
    return scipy.linalg.solve_banded((bw, bw), ab, b)


def solve_linear(system: LinearSystem, tol: float = 1e-11) -> GridFunction:
    """Direct sparse LU with refinement; banded LU if the residual stalls."""
    op = system.operator
    A, b = op.A, system.rhs
    if not np.any(b):
        x = np.zeros_like(b)
    else:
        lu = op.factor()
        x = lu.solve(b)
        for _ in range(2):
            if _residual(A, x, b) <= tol:
                break
            x = x + lu.solve(b - A @ x)
        res = _residual(A, x, b)
        if not np.isfinite(res) or res > tol:
            log.warning("sparse LU residual %.3e above %.1e; falling back to banded LU", res, tol)
            try:
                x = _banded_solve(A, b, op.grid.n2 + 1)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise LinearSolveError(f"banded LU failed: {exc}", res) from exc
            res = _residual(A, x, b)
            if not np.isfinite(res) or res > tol:
                raise LinearSolveError("linear solve did not reach tolerance", res)
    vals = system.nodal.copy()
    vals[1:-1, 1:-1] = x.reshape(vals.shape[0] - 2, op.grid.n2)
    return GridFunction(op.grid, op.side, vals)


def extract_trace(u: GridFunction, xi: float, interpolate: bool = False) -> TraceFunction:
    grid = u.grid
    lo, hi = grid.span(u.side)
    x_lo, x_hi = grid.x1[lo], grid.x1[hi]
    if not (x_lo - ALIGN_TOL * grid.h1 <= xi <= x_hi + ALIGN_TOL * grid.h1):
        raise ValueError(f"x1={xi} outside the {u.side} side [{x_lo}, {x_hi}]")
    i = grid.column(xi)
    if i is not None:
        return TraceFunction(xi, u.values[i - lo].copy())
    if not interpolate:
        raise GridAlignmentError(f"x1={xi} is off the grid and interpolation is disabled")
    t = xi / grid.h1
    i = min(int(np.floor(t)), hi - 1)
    w = t - i
    return TraceFunction(xi, (1 - w) * u.values[i - lo] + w * u.values[i + 1 - lo])


def stitch(minus: GridFunction, plus: GridFunction) -> GridFunction:
    """Join side solutions; the interface column is taken from the left side."""
    grid = minus.grid
    vals = np.empty((grid.n1 + 2, grid.n2 + 2))
    i0 = grid.i0
    vals[: i0 + 1] = minus.values
    vals[i0 + 1:] = plus.values[1:]
    return GridFunction(grid, "full", vals)
