import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlcontact.expr import (BinOp, Call, ExprEvalError, ExprSyntaxError, Field, Neg, Num, Var, evaluate, parse,
                            to_text)


def test_builtin_exact_solution_parses():
    e = parse("x1*x2*cos(pi*x2/2)")
    assert evaluate(e, 0.5, 0.5) == pytest.approx(0.25 * math.cos(math.pi / 4))


def test_dangling_operator_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("1+")
    assert info.value.offset == 2
    assert "number" in info.value.expected


def test_unary_minus_of_power():
    assert evaluate(parse("-(x1^2)"), 2.0, 0.0) == -4.0
    assert evaluate(parse("-x1^2"), 2.0, 0.0) == -4.0


@pytest.mark.parametrize("text,tree", [
    ("2*x1^2", BinOp("*", Num(2.0), BinOp("^", Var("x1"), Num(2.0)))),
    ("2^3^2", BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))),
    ("1-2-3", BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))),
    ("-x1^2", Neg(BinOp("^", Var("x1"), Num(2.0)))),
    ("2^-1", BinOp("^", Num(2.0), Neg(Num(1.0)))),
    ("sin(x1)*2", BinOp("*", Call("sin", Var("x1")), Num(2.0))),
])
def test_precedence_golden(text, tree):
    assert parse(text) == tree


@pytest.mark.parametrize("text,x1,x2,value", [
    ("(21/64)*x2*cos(pi*x2/2)", 0.0, 1.0, 0.0),
    ("1+2*x1^2", 1.0, 0.0, 3.0),
    ("2^3^2", 0, 0, 512.0),
    ("  1 +\t2 ", 0, 0, 3.0),
    ("e", 0, 0, math.e),
    ("abs(-3)+sqrt(4)+exp(0)+log(e)", 0, 0, 7.0),
    ("x1^-2", 2.0, 0, 0.25),
    ("(-2)^3", 0, 0, -8.0),
    ("2^0.5", 0, 0, math.sqrt(2)),
    ("1.5e1", 0, 0, 15.0),
])
def test_eval(text, x1, x2, value):
    assert evaluate(parse(text), x1, x2) == pytest.approx(value, abs=1e-15)


def test_eval_phi0_midpoint():
    # 21/64 * 1/2 * cos(pi/4) = 21 sqrt(2) / 256
    v = evaluate(parse("(21/64)*x2*cos(pi*x2/2)"), 0.0, 0.5)
    assert v == pytest.approx(21 * math.sqrt(2) / 256, rel=1e-15)
    assert v == pytest.approx(0.1160097, abs=1e-7)


@pytest.mark.parametrize("text", ["log(x1)", "1/x1", "sqrt(x1-1)", "x1^-1", "(0-2)^0.5"])
def test_domain_faults_raise(text):
    with pytest.raises(ExprEvalError):
        evaluate(parse(text), 0.0, 0.0)


def test_domain_fault_names_subexpression():
    with pytest.raises(ExprEvalError) as info:
        evaluate(parse("1 + log(x1 - 1)"), 0.5, 0.0)
    assert "log" in str(info.value)


@pytest.mark.parametrize("text,offset", [("", 0), ("(1", 2), ("foo", 0), ("1 2", 2), ("sin 1", 4), ("1 $ 2", 2)])
def test_syntax_errors(text, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(text)
    assert info.value.offset == offset


def test_array_evaluation_broadcasts():
    x = np.linspace(0, 1, 5)
    out = evaluate(parse("x1*x2 + 1"), x[:, None], x[None, :])
    assert out.shape == (5, 5)
    assert evaluate(parse("3"), x, x).shape == (5,)


def test_field_helpers():
    f = Field.of("0")
    assert f.is_zero and f.is_constant
    assert not Field.of("x2").is_constant
    assert Field.of("1+x1") == Field.of("(1 + x1)")


def test_repeated_product_for_small_integer_powers():
    x = 1.0 + 2.0**-30
    assert evaluate(parse("x1^3"), x, 0) == x * x * x


_leaves = st.one_of(
    st.floats(0, 10, allow_nan=False).map(lambda v: Num(float(v))),
    st.sampled_from([Var("x1"), Var("x2"), Var("pi"), Var("e")]),
)
_trees = st.recursive(
    _leaves,
    lambda kids: st.one_of(
        st.tuples(st.sampled_from("+-*"), kids, kids).map(lambda t: BinOp(*t)),
        kids.map(Neg),
        st.tuples(st.sampled_from(["sin", "cos", "abs"]), kids).map(lambda t: Call(*t)),
    ),
    max_leaves=12,
)


@settings(max_examples=200, deadline=None)
@given(_trees, st.floats(-2, 2), st.floats(-2, 2))
def test_print_parse_round_trip(tree, x1, x2):
    again = parse(to_text(tree))
    assert again == tree
    assert evaluate(again, x1, x2) == evaluate(tree, x1, x2)
