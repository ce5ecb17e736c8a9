"""Small arithmetic expression language for pointwise fields.

Grammar (lowest to highest precedence)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | "+" unary | power
    power   := atom ("^" unary)?          # right associative
    atom    := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Names are ``x1``, ``x2``, ``pi`` and ``e``; functions are listed in
``FUNCTIONS``.  So ``-x1^2`` is ``-(x1^2)`` and ``2^3^2`` is ``2^(3^2)``.

Evaluation works on scalars and on numpy arrays of matching shape.  Domain
faults raise :class:`ExprEvalError` instead of producing nan/inf.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExprSyntaxError",
    "ExprEvalError",
    "parse",
    "to_text",
    "evaluate",
    "Field",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "abs")
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("x1", "x2")

# exponents that are integer literals up to this size use repeated products
_SMALL_POWER = 8


class ExprSyntaxError(ValueError):
    def __init__(self, text: str, offset: int, expected: set[str]):
        self.text = text
        self.offset = offset
        self.expected = frozenset(expected)
        got = repr(text[offset]) if offset < len(text) else "end of input"
        super().__init__(
            f"syntax error at offset {offset}: got {got}, "
            f"expected one of {sorted(self.expected)}"
        )


class ExprEvalError(ArithmeticError):
    def __init__(self, node: "Expr", reason: str):
        self.node = node
        self.reason = reason
        super().__init__(f"{reason} in '{to_text(node)}'")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ExprSyntaxError(text, pos, {"number", "name", "operator"})
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.i = 0

    def _offset(self) -> int:
        if self.i < len(self.tokens):
            return self.tokens[self.i][2]
        return len(self.text)

    def _peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _is_op(self, *ops: str) -> bool:
        tok = self._peek()
        return tok is not None and tok[0] == "op" and tok[1] in ops

    def _expect_op(self, op: str) -> None:
        if not self._is_op(op):
            raise ExprSyntaxError(self.text, self._offset(), {op})
        self.i += 1

    def parse(self) -> Expr:
        node = self.expr()
        if self.i != len(self.tokens):
            raise ExprSyntaxError(self.text, self._offset(), {"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self._is_op("+", "-"):
            op = self.tokens[self.i][1]
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self._is_op("*", "/"):
            op = self.tokens[self.i][1]
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self._is_op("-"):
            self.i += 1
            return Neg(self.unary())
        if self._is_op("+"):
            self.i += 1
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._is_op("^"):
            self.i += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self._peek()
        if tok is None:
            raise ExprSyntaxError(self.text, self._offset(), {"number", "name", "("})
        kind, value, _ = tok
        if kind == "num":
            self.i += 1
            return Num(float(value))
        if kind == "name":
            self.i += 1
            if value in FUNCTIONS:
                self._expect_op("(")
                arg = self.expr()
                self._expect_op(")")
                return Call(value, arg)
            if value in CONSTANTS or value in VARIABLES:
                return Var(value)
            self.i -= 1
            raise ExprSyntaxError(
                self.text, self._offset(), set(VARIABLES) | set(CONSTANTS) | set(FUNCTIONS)
            )
        if value == "(":
            self.i += 1
            node = self.expr()
            self._expect_op(")")
            return node
        raise ExprSyntaxError(self.text, self._offset(), {"number", "name", "(", "-", "+"})


def parse(text: str) -> Expr:
    return _Parser(text).parse()


def to_text(node: Expr) -> str:
    """Fully parenthesised text that parses back to an identical tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.func}({to_text(node.arg)})"


def _check(node: Expr, ok, reason: str) -> None:
    if not np.all(ok):
        raise ExprEvalError(node, reason)


def _int_literal(node: Expr) -> int | None:
    if isinstance(node, Neg):
        inner = _int_literal(node.operand)
        return None if inner is None else -inner
    if isinstance(node, Num) and node.value.is_integer() and abs(node.value) <= _SMALL_POWER:
        return int(node.value)
    return None


def _ipow(base, n: int):
    out = 1.0
    for _ in range(abs(n)):
        out = out * base
    return out


def _eval(node: Expr, x1, x2):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name == "x1":
            return x1
        if node.name == "x2":
            return x2
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, x1, x2)
    if isinstance(node, Call):
        v = _eval(node.arg, x1, x2)
        fn = node.func
        if fn == "log":
            _check(node, np.greater(v, 0.0), "log of nonpositive value")
        elif fn == "sqrt":
            _check(node, np.greater_equal(v, 0.0), "sqrt of negative value")
        elif fn == "tan":
            _check(node, np.abs(np.cos(v)) > 1e-300, "tan at a pole")
        with np.errstate(over="ignore"):
            out = getattr(np, "abs" if fn == "abs" else fn)(v)
        _check(node, np.isfinite(out), "overflow")
        return out

    left = _eval(node.left, x1, x2)
    if node.op == "^":
        n = _int_literal(node.right)
        if n is not None:
            if n < 0:
                _check(node, np.not_equal(left, 0.0), "zero to a negative power")
                return 1.0 / _ipow(left, n)
            return _ipow(left, n)
        right = _eval(node.right, x1, x2)
        left_a, right_a = np.broadcast_arrays(np.asarray(left, float), np.asarray(right, float))
        integral = np.equal(np.round(right_a), right_a)
        _check(node, (left_a > 0) | ((left_a == 0) & (right_a > 0)) | ((left_a < 0) & integral),
               "power outside its real domain")
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            mag = np.power(np.abs(left_a), right_a)
            odd = integral & (np.mod(np.abs(right_a), 2.0) == 1.0)
            out = np.where(left_a == 0, 0.0, np.where((left_a < 0) & odd, -mag, mag))
        _check(node, np.isfinite(out), "overflow")
        return out[()] if out.ndim == 0 else out

    right = _eval(node.right, x1, x2)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    _check(node, np.not_equal(right, 0.0), "division by zero")
    return left / right


def evaluate(node: Expr, x1=0.0, x2=0.0):
    """Evaluate at scalar or array coordinates; arrays broadcast together."""
    out = _eval(node, x1, x2)
    if np.ndim(x1) or np.ndim(x2):
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(x1, x2).shape).copy()
    return float(out)


def _uses(node: Expr, name: str) -> bool:
    if isinstance(node, Var):
        return node.name == name
    if isinstance(node, Num):
        return False
    if isinstance(node, (Neg,)):
        return _uses(node.operand, name)
    if isinstance(node, Call):
        return _uses(node.arg, name)
    return _uses(node.left, name) or _uses(node.right, name)


@dataclass(frozen=True)
class Field:
    """A scalar field of (x1, x2) backed by an expression.

    ``text`` is kept as written so configurations echo back verbatim.
    """

    text: str
    tree: Expr

    @classmethod
    def of(cls, value: "str | float | Field") -> "Field":
        if isinstance(value, Field):
            return value
        if isinstance(value, (int, float)):
            value = repr(float(value))
        return cls(value, parse(value))

    def __call__(self, x1, x2):
        return evaluate(self.tree, x1, x2)

    def __eq__(self, other):
        return isinstance(other, Field) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.tree, Num) and self.tree.value == 0.0

    @property
    def is_constant(self) -> bool:
        return not (_uses(self.tree, "x1") or _uses(self.tree, "x2"))

    def __repr__(self):
        return f"Field({self.text!r})"
