"""Domain, interface and contact-condition data model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import Field

__all__ = [
    "Rect",
    "SplitGeometry",
    "ContactSpec",
    "ProblemData",
    "SideData",
    "Violation",
    "CoordinationReport",
    "validate",
    "check_coordination",
    "check_ellipticity",
    "AdmissibilityError",
]


class AdmissibilityError(ValueError):
    """Raised when a problem is built from data that fails validation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Rect:
    a: float
    b: float


@dataclass(frozen=True)
class SplitGeometry:
    """Rectangle ``[0,a] x [0,b]`` split by the vertical line ``x1 = xi0``.

    ``xi_minus`` lists the nonlocal lines left of the interface, nearest
    first (descending); ``xi_plus`` those on the right, nearest first.
    """

    rect: Rect
    xi0: float
    xi_minus: tuple[float, ...] = ()
    xi_plus: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "xi_minus", tuple(float(v) for v in self.xi_minus))
        object.__setattr__(self, "xi_plus", tuple(float(v) for v in self.xi_plus))

    @property
    def lines(self) -> tuple[float, ...]:
        return self.xi_minus + self.xi_plus


@dataclass(frozen=True)
class ContactSpec:
    beta_minus: tuple[float, ...]
    beta_plus: tuple[float, ...]
    phi0: Field = field(default_factory=lambda: Field.of("0"))

    def __post_init__(self):
        object.__setattr__(self, "beta_minus", tuple(float(v) for v in self.beta_minus))
        object.__setattr__(self, "beta_plus", tuple(float(v) for v in self.beta_plus))
        object.__setattr__(self, "phi0", Field.of(self.phi0))

    @property
    def weight_sum(self) -> float:
        return math.fsum(self.beta_minus + self.beta_plus)


@dataclass(frozen=True)
class SideData:
    """Coefficients and data of ``div(K grad u) - k u = -f`` on one subdomain.

    ``boundary`` supplies the Dirichlet values on the outer edges of the side.
    """

    K11: Field = field(default_factory=lambda: Field.of("1"))
    K12: Field = field(default_factory=lambda: Field.of("0"))
    K21: Field = field(default_factory=lambda: Field.of("0"))
    K22: Field = field(default_factory=lambda: Field.of("1"))
    k: Field = field(default_factory=lambda: Field.of("0"))
    f: Field = field(default_factory=lambda: Field.of("0"))
    boundary: Field = field(default_factory=lambda: Field.of("0"))

    def __post_init__(self):
        for name in ("K11", "K12", "K21", "K22", "k", "f", "boundary"):
            object.__setattr__(self, name, Field.of(getattr(self, name)))

    @property
    def has_mixed(self) -> bool:
        return not (self.K12.is_zero and self.K21.is_zero)


@dataclass(frozen=True)
class ProblemData:
    minus: SideData = field(default_factory=SideData)
    plus: SideData = field(default_factory=SideData)

    def side(self, name: str) -> SideData:
        if name == "minus":
            return self.minus
        if name == "plus":
            return self.plus
        raise ValueError(f"unknown side {name!r}")


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str

    def __str__(self):
        return f"{self.rule}: {self.detail}"


@dataclass(frozen=True)
class CoordinationReport:
    residual_A0: float
    residual_B0: float
    tol: float

    @property
    def satisfied(self) -> bool:
        return self.residual_A0 <= self.tol and self.residual_B0 <= self.tol


def _finite(v) -> bool:
    try:
        return math.isfinite(float(v))
    except (TypeError, ValueError):
        return False


def validate(geom: SplitGeometry, spec: ContactSpec) -> list[Violation]:
    """Return every violated admissibility rule; an empty list means ok."""
    out: list[Violation] = []
    a, b = geom.rect.a, geom.rect.b
    if not (_finite(a) and a > 0):
        out.append(Violation("rect", f"width a={a} must be positive"))
    if not (_finite(b) and b > 0):
        out.append(Violation("rect", f"height b={b} must be positive"))
    if not (_finite(geom.xi0) and 0 < geom.xi0 < a):
        out.append(Violation("interface", f"xi0={geom.xi0} must lie in (0, {a})"))

    chain_m = (geom.xi0,) + geom.xi_minus + (0.0,)
    for left, right in zip(chain_m[1:], chain_m[:-1]):
        if not (_finite(left) and left < right):
            out.append(Violation("ordering", f"xi_minus must descend strictly inside (0, xi0): {left} vs {right}"))
    chain_p = (geom.xi0,) + geom.xi_plus + (a,)
    for left, right in zip(chain_p[:-1], chain_p[1:]):
        if not (_finite(right) and left < right):
            out.append(Violation("ordering", f"xi_plus must ascend strictly inside (xi0, a): {left} vs {right}"))
    if not geom.lines:
        out.append(Violation("lines", "at least one nonlocal line is required"))

    if len(spec.beta_minus) != len(geom.xi_minus):
        out.append(Violation("weights", f"{len(spec.beta_minus)} beta_minus for {len(geom.xi_minus)} lines"))
    if len(spec.beta_plus) != len(geom.xi_plus):
        out.append(Violation("weights", f"{len(spec.beta_plus)} beta_plus for {len(geom.xi_plus)} lines"))
    for w in spec.beta_minus + spec.beta_plus:
        if not (_finite(w) and w > 0):
            out.append(Violation("weights", f"weight {w} must be positive"))
    total = spec.weight_sum
    if not (_finite(total) and 0 < total <= 1):
        out.append(Violation("weight_sum", f"sum of weights {total} must lie in (0, 1]"))
    return out


def contact_corner_residual(geom: SplitGeometry, spec: ContactSpec, data: ProblemData, x2: float) -> float:
    u0 = data.minus.boundary(geom.xi0, x2)
    rhs = math.fsum(
        [w * data.minus.boundary(xi, x2) for w, xi in zip(spec.beta_minus, geom.xi_minus)]
        + [w * data.plus.boundary(xi, x2) for w, xi in zip(spec.beta_plus, geom.xi_plus)]
        + [spec.phi0(geom.xi0, x2)]
    )
    return abs(u0 - rhs)


def check_coordination(geom: SplitGeometry, spec: ContactSpec, data: ProblemData, tol: float = 1e-12) -> CoordinationReport:
    """Corner compatibility of the contact condition with the Dirichlet data.

    The value at the interface corners is taken from the left boundary field.
    """
    return CoordinationReport(
        residual_A0=contact_corner_residual(geom, spec, data, 0.0),
        residual_B0=contact_corner_residual(geom, spec, data, geom.rect.b),
        tol=tol,
    )


def check_ellipticity(side: SideData, x1: np.ndarray, x2: np.ndarray, name: str = "") -> list[Violation]:
    """Pointwise uniform ellipticity and nonnegative reaction at sample points."""
    out = []
    k11, k12, k21, k22 = (side.K11(x1, x2), side.K12(x1, x2), side.K21(x1, x2), side.K22(x1, x2))
    bad = ~(4.0 * k11 * k22 > (k12 + k21) ** 2) | ~(k11 > 0)
    if np.any(bad):
        i = np.flatnonzero(np.ravel(bad))[0]
        out.append(Violation("ellipticity", f"{name} side fails 4*K11*K22 > (K12+K21)^2 at "
                             f"({np.ravel(x1)[i]:.6g}, {np.ravel(x2)[i]:.6g})"))
    kk = side.k(x1, x2)
    if np.any(kk < 0):
        i = np.flatnonzero(np.ravel(kk < 0))[0]
        out.append(Violation("reaction", f"{name} side has k < 0 at ({np.ravel(x1)[i]:.6g}, {np.ravel(x2)[i]:.6g})"))
    return out
