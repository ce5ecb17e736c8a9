"""Series solution of the Poisson contact problem on the unit square.

Solves ``Lap u = f`` on both halves of ``[0,1]^2`` with homogeneous outer
Dirichlet data and the two-point contact condition

    u(xi0, x2) = gm * u(xi_m, x2) + gp * u(xi_p, x2) + phi0(x2)

by expanding in ``sin(k pi x2)``.  Each mode solves
``a'' - (k pi)^2 a = f_k`` on either side with ``a(xi0) = Phi_k``.

All hyperbolic quotients are evaluated in exponent-subtracted form, so mode
numbers far beyond the double-precision range of ``sinh`` are safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .expr import Field
from .geometry import AdmissibilityError, ContactSpec, Rect, SplitGeometry, Violation, validate

__all__ = [
    "PoissonContactProblem",
    "FourierSolution",
    "SineCoefficients",
    "simpson",
    "sinh_ratio",
    "one_minus_sinh_ratio",
    "sine_coeffs",
    "denominators",
    "phi_coefficients",
    "solve",
    "eval_solution",
    "residual_check",
]

DEFAULT_MODES = 64
DEFAULT_PANELS = 256


@dataclass(frozen=True)
class PoissonContactProblem:
    xi0: float
    xi_m: float
    xi_p: float
    gamma_m: float
    gamma_p: float
    f_minus: Field = field(default_factory=lambda: Field.of("0"))
    f_plus: Field = field(default_factory=lambda: Field.of("0"))
    phi0: Field = field(default_factory=lambda: Field.of("0"))

    def __post_init__(self):
        for name in ("f_minus", "f_plus", "phi0"):
            object.__setattr__(self, name, Field.of(getattr(self, name)))

    def validate(self) -> list[Violation]:
        geom = SplitGeometry(Rect(1.0, 1.0), self.xi0, (self.xi_m,), (self.xi_p,))
        return validate(geom, ContactSpec((self.gamma_m,), (self.gamma_p,), self.phi0))


def simpson(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson with ``n`` (even) subintervals."""
    if n < 2 or n % 2:
        raise ValueError(f"Simpson needs an even number of subintervals, got {n}")
    x = np.linspace(a, b, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w * (b - a) / (3.0 * n)


def _subintervals(length: float, per_unit: int) -> int:
    n = max(2, int(math.ceil(abs(length) * per_unit)))
    return n + (n % 2)


def sinh_ratio(alpha, x, L):
    """``sinh(alpha x) / sinh(alpha L)`` for ``alpha > 0`` and ``|x| <= |L|``, same sign."""
    alpha = np.asarray(alpha, float)
    x = np.asarray(x, float)
    L = np.asarray(L, float)
    if np.any(L == 0):
        raise ValueError("sinh_ratio: L must be nonzero")
    ax, aL = np.abs(x), np.abs(L)
    num = -np.expm1(-2.0 * alpha * ax)
    den = -np.expm1(-2.0 * alpha * aL)
    out = np.exp(alpha * (ax - aL)) * num / den
    out = np.where(np.sign(x) * np.sign(L) < 0, -out, out)
    return out[()] if out.ndim == 0 else out


def one_minus_sinh_ratio(alpha, x, L):
    """``1 - sinh(alpha x)/sinh(alpha L)`` for ``0 <= x <= L`` without cancellation."""
    alpha = np.asarray(alpha, float)
    p = alpha * (L + x) / 2.0
    q = alpha * (L - x) / 2.0
    out = (1.0 + np.exp(-2.0 * p)) * -np.expm1(-2.0 * q) / -np.expm1(-2.0 * alpha * L)
    return out[()] if np.ndim(out) == 0 else out


def _green(c: np.ndarray, x: float, s: np.ndarray, L: float) -> np.ndarray:
    """``sinh(c min) sinh(c (L - max)) / sinh(c L)`` on ``[0, L]``; shape ``(len(s), K)``."""
    lo = np.minimum(x, s)[:, None]
    hi = np.maximum(x, s)[:, None]
    c = c[None, :]
    return (0.5 * np.exp(-c * (hi - lo)) * -np.expm1(-2.0 * c * lo)
            * -np.expm1(-2.0 * c * (L - hi)) / -np.expm1(-2.0 * c * L))


@dataclass
class SineCoefficients:
    """``f_k(x1) = 2 int_0^1 f(x1, s) sin(k pi s) ds`` for ``k = 1..K``."""

    f: Field
    K: int
    panels: int = DEFAULT_PANELS

    @cached_property
    def _rule(self):
        t, w = simpson(0.0, 1.0, self.panels)
        k = np.arange(1, self.K + 1)
        return t, 2.0 * w[:, None] * np.sin(np.pi * np.outer(t, k))

    def __call__(self, x1) -> np.ndarray:
        """Array of shape ``(*shape(x1), K)``."""
        x1 = np.asarray(x1, float)
        if self.f.is_zero:
            return np.zeros(x1.shape + (self.K,))
        t, W = self._rule
        vals = self.f(x1[..., None], t)
        return vals @ W


def sine_coeffs(f: Field | str, K: int, panels: int = DEFAULT_PANELS) -> SineCoefficients:
    if panels % 2:
        raise ValueError("panels must be even")
    return SineCoefficients(Field.of(f), K, panels)


def denominators(gamma_m, gamma_p, xi0, xi_m, xi_p, K: int) -> np.ndarray:
    """``1 - [gm S-_k + gp S+_k]`` for ``k = 1..K``, assembled from positive parts."""
    c = np.pi * np.arange(1, K + 1)
    slack = math.fsum([1.0, -gamma_m, -gamma_p])
    return (slack + gamma_m * one_minus_sinh_ratio(c, xi_m, xi0)
            + gamma_p * one_minus_sinh_ratio(c, 1.0 - xi_p, 1.0 - xi0))


@dataclass
class FourierSolution:
    problem: PoissonContactProblem
    K: int
    panels: int
    Phi: np.ndarray
    coeff_minus: SineCoefficients
    coeff_plus: SineCoefficients

    @property
    def rates(self) -> np.ndarray:
        return np.pi * np.arange(1, self.K + 1)

    @property
    def tail_estimate(self) -> float:
        p = self.problem
        arg = np.pi * self.K * min(p.xi0, 1.0 - p.xi0)
        return float(abs(self.Phi[-1]) / math.tanh(arg))

    def _particular(self, side: str, x: float) -> np.ndarray:
        """Zero-boundary particular part of ``a_k`` at ``x``; shape ``(K,)``."""
        p = self.problem
        coeff = self.coeff_minus if side == "minus" else self.coeff_plus
        if coeff.f.is_zero:
            return np.zeros(self.K)
        lo, hi = (0.0, p.xi0) if side == "minus" else (p.xi0, 1.0)
        L = hi - lo
        t = x - lo
        c = self.rates
        total = np.zeros(self.K)
        for a, b in ((0.0, t), (t, L)):
            if b - a <= 0:
                continue
            s, w = simpson(a, b, _subintervals(b - a, self.panels))
            total += w @ (_green(c, t, s, L) * coeff(s + lo))
        return -total / c

    def a_minus(self, x: float) -> np.ndarray:
        p = self.problem
        if x <= 0.0:
            return np.zeros(self.K)
        return self.Phi * sinh_ratio(self.rates, x, p.xi0) + self._particular("minus", x)

    def a_plus(self, x: float) -> np.ndarray:
        p = self.problem
        if x >= 1.0:
            return np.zeros(self.K)
        return self.Phi * sinh_ratio(self.rates, 1.0 - x, 1.0 - p.xi0) + self._particular("plus", x)

    def modes(self, x1: float) -> np.ndarray:
        xi0 = self.problem.xi0
        if x1 < xi0:
            return self.a_minus(x1)
        if x1 > xi0:
            return self.a_plus(x1)
        return self.Phi.copy()

    def __call__(self, x1: float, x2):
        x2 = np.asarray(x2, float)
        basis = np.sin(np.pi * np.multiply.outer(x2, np.arange(1, self.K + 1)))
        out = basis @ self.modes(float(x1))
        return out[()] if out.ndim == 0 else out

    def on_grid(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Values ``u[i, j]`` at ``(x1[i], x2[j])``."""
        basis = np.sin(np.pi * np.outer(x2, np.arange(1, self.K + 1)))
        return np.array([basis @ self.modes(float(x)) for x in x1])


def _forcing(problem: PoissonContactProblem, K: int, panels: int, cm: SineCoefficients, cp: SineCoefficients) -> np.ndarray:
    """Contact-line particular contributions; equals ``-F_k`` with the zero-boundary
    parts of ``a_k`` at the nonlocal lines."""
    probe = FourierSolution(problem, K, panels, np.zeros(K), cm, cp)
    return problem.gamma_m * probe._particular("minus", problem.xi_m) + problem.gamma_p * probe._particular("plus", problem.xi_p)


def phi_coefficients(problem: PoissonContactProblem, K: int = DEFAULT_MODES, panels: int = DEFAULT_PANELS,
                     x2_panels: int | None = None, check: bool = True) -> np.ndarray:
    return solve(problem, K, panels, x2_panels, check).Phi


def solve(problem: PoissonContactProblem, K: int = DEFAULT_MODES, panels: int = DEFAULT_PANELS,
          x2_panels: int | None = None, check: bool = True) -> FourierSolution:
    """Interface amplitudes ``Phi_k = (-F_k + phi0_k) / D_k`` and the mode evaluators.

    ``x2_panels`` defaults to enough Simpson subintervals to give every retained
    mode at least eight nodes per period.  ``check=False`` skips admissibility,
    which admits the local limit ``gamma_m = gamma_p = 0``.
    """
    viol = problem.validate() if check else []
    if viol:
        raise AdmissibilityError(viol)
    if x2_panels is None:
        x2_panels = max(panels, 8 * K)
        x2_panels += x2_panels % 2
    cm = sine_coeffs(problem.f_minus, K, x2_panels)
    cp = sine_coeffs(problem.f_plus, K, x2_panels)
    phi0 = sine_coeffs(problem.phi0, K, x2_panels)(problem.xi0)
    denom = denominators(problem.gamma_m, problem.gamma_p, problem.xi0, problem.xi_m, problem.xi_p, K)
    Phi = (_forcing(problem, K, panels, cm, cp) + phi0) / denom
    return FourierSolution(problem, K, panels, Phi, cm, cp)


def F_closed_form(problem: PoissonContactProblem, K: int, panels: int = DEFAULT_PANELS) -> np.ndarray:
    """``F_k`` assembled from the interface integrals ``I-``/``I+`` and the line integrals.

    Uses raw ``sinh``; only meaningful while ``k pi`` stays moderate.  The right
    contribution carries the sign that makes ``a_k^+(1) = 0``.
    """
    K_ = np.arange(1, K + 1)
    c = np.pi * K_
    cm = sine_coeffs(problem.f_minus, K, max(panels, 8 * K))
    cp = sine_coeffs(problem.f_plus, K, max(panels, 8 * K))
    xi0, xm, xp = problem.xi0, problem.xi_m, problem.xi_p

    def integral(coeff, lo, hi, end):
        s, w = simpson(lo, hi, _subintervals(hi - lo, panels))
        return w @ (np.sinh(np.outer(end - s, c)) * coeff(s)) / c

    I_minus = integral(cm, 0.0, xi0, xi0)
    I_plus = integral(cp, xi0, 1.0, 1.0)
    F_minus = problem.gamma_m * np.sinh(c * xm) / np.sinh(c * xi0) * I_minus
    F_plus = -problem.gamma_p * np.sinh(c * (xp - xi0)) / np.sinh(c * (xi0 - 1.0)) * I_plus
    lines = problem.gamma_m * integral(cm, 0.0, xm, xm) + problem.gamma_p * integral(cp, xi0, xp, xp)
    return F_minus + F_plus - lines


def eval_solution(sol: FourierSolution, x1: float, x2):
    return sol(x1, x2)


def residual_check(sol: FourierSolution, x1: float, x2: float, h: float) -> float:
    """Five-point Laplacian of the series minus the source at an interior point."""
    p = sol.problem
    if not (0.0 < x2 - h and x2 + h < 1.0):
        raise ValueError("residual_check needs an interior point at distance > h from x2 = 0, 1")
    if x1 < p.xi0:
        lo, hi, f = 0.0, p.xi0, p.f_minus
    else:
        lo, hi, f = p.xi0, 1.0, p.f_plus
    if not (lo < x1 - h and x1 + h < hi):
        raise ValueError("residual_check stencil must stay inside one subdomain")
    ys = np.array([x2 - h, x2, x2 + h])
    mid = sol(x1, ys)
    lap = (sol(x1 - h, x2) + sol(x1 + h, x2) + mid[0] + mid[2] - 4.0 * mid[1]) / h**2
    return float(lap - f(x1, x2))
