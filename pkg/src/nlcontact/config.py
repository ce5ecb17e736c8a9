"""Sectioned ``key = value`` run configuration (see docs/config.md)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .expr import ExprEvalError, ExprSyntaxError, Field, evaluate
from .geometry import ContactSpec, ProblemData, Rect, SideData, SplitGeometry, validate
from .verify import ExactSolution

__all__ = ["ConfigError", "Numerics", "RunConfig", "load_config", "parse_config", "from_sections"]

MODES = ("fourier", "iterate", "verify", "cross-validate")
SIDE_KEYS = ("K11", "K12", "K21", "K22", "k", "f", "boundary")

REQUIRED = {
    "fourier": ("geometry", "contact"),
    "iterate": ("geometry", "contact"),
    "verify": ("geometry", "contact", "exact"),
    "cross-validate": ("geometry", "contact"),
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class Numerics:
    n1: int = 127
    n2: int = 127
    modes: int = 64
    panels: int = 256
    trace_tol: float = 1e-12
    max_iters: int = 100
    solver_tol: float = 1e-11
    interpolate_traces: bool = False


@dataclass(frozen=True)
class RunConfig:
    mode: str
    geom: SplitGeometry
    spec: ContactSpec
    data: ProblemData
    numerics: Numerics = field(default_factory=Numerics)
    exact: ExactSolution | None = None
    output_dir: str = "out"

    def with_overrides(self, grid: int | None = None, tol: float | None = None, max_iters: int | None = None,
                       modes: int | None = None, out_dir: str | None = None) -> "RunConfig":
        num = self.numerics
        if grid is not None:
            num = replace(num, n1=grid - 2, n2=grid - 2)
        if tol is not None:
            num = replace(num, trace_tol=tol)
        if max_iters is not None:
            num = replace(num, max_iters=max_iters)
        if modes is not None:
            num = replace(num, modes=modes)
        return replace(self, numerics=num, output_dir=out_dir if out_dir is not None else self.output_dir)

    def to_sections(self) -> dict[str, dict[str, str]]:
        """Canonical text form; ``from_sections`` of it reproduces this config."""
        g, s = self.geom, self.spec

        def nums(vals):
            return ", ".join(repr(v) for v in vals)

        out = {
            "run": {"mode": self.mode, "output_dir": self.output_dir},
            "geometry": {"a": repr(g.rect.a), "b": repr(g.rect.b), "xi0": repr(g.xi0),
                         "xi_minus": nums(g.xi_minus), "xi_plus": nums(g.xi_plus)},
            "contact": {"beta_minus": nums(s.beta_minus), "beta_plus": nums(s.beta_plus), "phi0": s.phi0.text},
        }
        for side in ("minus", "plus"):
            d = self.data.side(side)
            out[side] = {key: getattr(d, key).text for key in SIDE_KEYS}
        n = self.numerics
        out["numerics"] = {
            "n1": str(n.n1), "n2": str(n.n2), "modes": str(n.modes), "panels": str(n.panels),
            "trace_tol": repr(n.trace_tol), "max_iters": str(n.max_iters), "solver_tol": repr(n.solver_tol),
            "interpolate_traces": "true" if n.interpolate_traces else "false",
        }
        if self.exact is not None:
            out["exact"] = {"u_minus": self.exact.u_minus.text, "u_plus": self.exact.u_plus.text}
        return out

    def to_text(self) -> str:
        lines = []
        for sec, kv in self.to_sections().items():
            lines.append(f"[{sec}]")
            for key, val in kv.items():
                quoted = sec in ("contact", "minus", "plus", "exact") and key not in ("beta_minus", "beta_plus")
                lines.append(f'{key} = "{val}"' if quoted else f"{key} = {val}")
            lines.append("")
        return "\n".join(lines)


def parse_config(text: str) -> tuple[dict[str, dict[str, str]], dict[tuple[str, str], int]]:
    """Split text into sections; also returns the line number of every key."""
    sections: dict[str, dict[str, str]] = {}
    where: dict[tuple[str, str], int] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"malformed section header {line!r}", lineno)
            current = line[1:-1].strip()
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            where[(current, "")] = lineno
            continue
        if current is None:
            raise ConfigError("key outside of any section", lineno)
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        if len(value) >= 2 and value[0] == value[-1] == '"':
            value = value[1:-1]
        sections[current][key] = value
        where[(current, key)] = lineno
    return sections, where


class _Reader:
    def __init__(self, sections, where):
        self.sections = sections
        self.where = where

    def line(self, sec, key=""):
        return self.where.get((sec, key))

    def has(self, sec, key):
        return key in self.sections.get(sec, {})

    def raw(self, sec, key, default=None):
        try:
            return self.sections[sec][key]
        except KeyError:
            if default is not None:
                return default
            if sec not in self.sections:
                raise ConfigError(f"missing section [{sec}]") from None
            raise ConfigError(f"missing required key {key!r} in [{sec}]", self.line(sec)) from None

    def field(self, sec, key, default=None) -> Field:
        text = self.raw(sec, key, default)
        try:
            return Field.of(text)
        except ExprSyntaxError as exc:
            raise ConfigError(f"[{sec}] {key}: {exc}", self.line(sec, key)) from exc

    def number(self, sec, key, default=None) -> float:
        text = self.raw(sec, key, None if default is None else str(default))
        return self._const(text, sec, key)

    def _const(self, text, sec, key) -> float:
        try:
            f = Field.of(text)
            if not f.is_constant:
                raise ConfigError(f"[{sec}] {key} must be a constant, got {text!r}", self.line(sec, key))
            v = evaluate(f.tree)
        except (ExprSyntaxError, ExprEvalError) as exc:
            raise ConfigError(f"[{sec}] {key}: {exc}", self.line(sec, key)) from exc
        if not math.isfinite(v):
            raise ConfigError(f"[{sec}] {key} is not finite", self.line(sec, key))
        return v

    def integer(self, sec, key, default) -> int:
        v = self.number(sec, key, default)
        if not float(v).is_integer():
            raise ConfigError(f"[{sec}] {key} must be an integer", self.line(sec, key))
        return int(v)

    def numbers(self, sec, key) -> tuple[float, ...]:
        text = self.raw(sec, key, "")
        return tuple(self._const(t.strip(), sec, key) for t in text.split(",") if t.strip())

    def flag(self, sec, key, default: bool) -> bool:
        text = self.raw(sec, key, "true" if default else "false").lower()
        if text in ("true", "yes", "1", "on"):
            return True
        if text in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"[{sec}] {key} must be true or false", self.line(sec, key))


def from_sections(sections: Mapping[str, Mapping[str, str]], where: Mapping | None = None) -> RunConfig:
    r = _Reader({k: dict(v) for k, v in sections.items()}, dict(where or {}))
    mode = r.raw("run", "mode")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}", r.line("run", "mode"))
    for sec in REQUIRED[mode]:
        if sec not in r.sections:
            raise ConfigError(f"missing section [{sec}] (required in {mode} mode)")

    geom = SplitGeometry(
        Rect(r.number("geometry", "a", 1.0), r.number("geometry", "b", 1.0)),
        r.number("geometry", "xi0"),
        r.numbers("geometry", "xi_minus"),
        r.numbers("geometry", "xi_plus"),
    )
    spec = ContactSpec(r.numbers("contact", "beta_minus"), r.numbers("contact", "beta_plus"),
                       r.field("contact", "phi0", "0"))
    viol = validate(geom, spec)
    if viol:
        raise ConfigError("invalid geometry/contact: " + "; ".join(str(v) for v in viol), r.line("contact"))

    defaults = SideData()
    sides = {}
    for side in ("minus", "plus"):
        sides[side] = SideData(**{key: r.field(side, key, getattr(defaults, key).text) for key in SIDE_KEYS})

    d = Numerics()
    numerics = Numerics(
        n1=r.integer("numerics", "n1", d.n1),
        n2=r.integer("numerics", "n2", d.n2),
        modes=r.integer("numerics", "modes", d.modes),
        panels=r.integer("numerics", "panels", d.panels),
        trace_tol=r.number("numerics", "trace_tol", repr(d.trace_tol)),
        max_iters=r.integer("numerics", "max_iters", d.max_iters),
        solver_tol=r.number("numerics", "solver_tol", repr(d.solver_tol)),
        interpolate_traces=r.flag("numerics", "interpolate_traces", d.interpolate_traces),
    )
    exact = None
    if "exact" in r.sections:
        exact = ExactSolution(r.field("exact", "u_minus"), r.field("exact", "u_plus"), geom.xi0)
    return RunConfig(mode, geom, spec, ProblemData(**sides), numerics, exact,
                     r.raw("run", "output_dir", "out"))


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    sections, where = parse_config(text)
    return from_sections(sections, where)
