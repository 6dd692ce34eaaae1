import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdedep import expr as E
from fdedep.errors import DelayOutOfRange, EvalError, ParseError


def val(src, **env):
    return float(E.evaluate(E.parse(src, variables=tuple(env)), env))


@pytest.mark.parametrize(
    "src, expected",
    [
        ("1 + 2 * 3", 7.0),
        ("(1 + 2) * 3", 9.0),
        ("2 ^ 3 ^ 2", 512.0),
        ("2 ** 3", 8.0),
        ("-2 ^ 2", 4.0),
        ("8 / 4 / 2", 1.0),
        ("1 - 2 - 3", -4.0),
        ("pi", math.pi),
        ("e", math.e),
        ("max(1, min(5, 3))", 3.0),
        ("mod(7, 3)", 1.0),
        ("abs(-2.5e-1)", 0.25),
        ("acos(cos(2))", 2.0),
    ],
)
def test_arithmetic_and_precedence(src, expected):
    assert val(src) == pytest.approx(expected, rel=1e-15)


def test_variables_and_params():
    node = E.parse("a * x + t", variables=("x", "t"), params={"a": 2.0})
    assert float(E.evaluate(node, {"x": 3.0, "t": 1.0})) == 7.0
    assert E.free_names(node) == {"x", "t"}


def test_delayed_references():
    node = E.parse("-x[1](t-1) + x[2](t - 0.5) * x[1](t+0)", variables=("t",), n_dim=2, r=1.0)
    assert E.delayed_refs(node) == {(1, 1.0), (2, 0.5), (1, 0.0)}
    out = E.evaluate(node, {"t": 0.0}, {(1, 1.0): 2.0, (2, 0.5): 3.0, (1, 0.0): 4.0})
    assert float(out) == 10.0
    assert E.parse("-x[1](t-1)", variables=("t",), n_dim=1, r=1.0) == E.Unary("-", E.Delayed(1, 1.0))
    assert E.parse("x(t - 0.5)", variables=("t",), n_dim=1, r=1.0) == E.Delayed(1, 0.5)


def test_delay_out_of_range_reports_position():
    with pytest.raises(DelayOutOfRange) as err:
        E.parse("x[1](t-2)", variables=("t",), n_dim=1, r=1.0)
    assert (err.value.line, err.value.column) == (1, 8)
    assert "1:8" in str(err.value)


@pytest.mark.parametrize("src", ["1 +", "foo(1)", "x[3](t-0)", "sin(1, 2)", "(1", "1 $ 2", "y + 1", "x[1](t-s)", "x(t)", "x[1](t+1)"])
def test_parse_errors(src):
    with pytest.raises(ParseError):
        E.parse(src, variables=("t",), n_dim=2, r=1.0)


@pytest.mark.parametrize("src", ["log(0)", "1/0", "sqrt(-1)", "asin(2)", "exp(1000)"])
def test_eval_errors(src):
    with pytest.raises(EvalError):
        val(src)


def test_parse_many_splits_on_separators():
    nodes = E.parse_many("1; 2\n3", variables=())
    assert [float(E.evaluate(n, {})) for n in nodes] == [1.0, 2.0, 3.0]


def test_compile_scalar_is_vectorized():
    f = E.compile_scalar("x^2 + 1")
    assert f(2.0) == 5.0
    np.testing.assert_array_equal(f(np.array([0.0, 1.0])), [1.0, 2.0])
    g = E.compile_scalar("1", variables=("k",))
    assert g(np.arange(3.0)).shape == (3,)


def test_print_is_minimal_and_round_trips():
    node = E.parse("(1 + x) * (x - (2 - x)) / 3 ^ (1 / 2)", variables=("x",))
    src = E.to_source(node)
    assert E.parse(src, variables=("x",)) == node
    assert E.to_source(E.parse("((x))", variables=("x",))) == "x"


# random expression trees for the parse-print fixed point
leaf = st.one_of(
    st.floats(0, 100, allow_nan=False).map(E.Num),
    st.sampled_from(["y", "t"]).map(E.Var),
    st.sampled_from([0.0, 0.25, 1.0]).map(lambda d: E.Delayed(1, d)),
)
trees = st.recursive(
    leaf,
    lambda kids: st.one_of(
        st.tuples(st.sampled_from("+-*/^"), kids, kids).map(lambda a: E.Binary(*a)),
        kids.map(lambda a: E.Unary("-", a)),
        st.tuples(st.sampled_from(["sin", "exp", "abs"]), kids).map(lambda a: E.Call(a[0], (a[1],))),
        st.tuples(kids, kids).map(lambda a: E.Call("max", a)),
    ),
    max_leaves=12,
)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_parse_print_fixed_point(node):
    src = E.to_source(node)
    again = E.parse(src, variables=("y", "t"), n_dim=1, r=1.0)
    assert again == node
    assert E.to_source(again) == src


@settings(max_examples=100, deadline=None)
@given(trees, st.floats(-2, 2), st.floats(-2, 2))
def test_reformatting_does_not_change_value(node, y, t):
    src = E.to_source(node)
    noisy = "  (" + src.replace("+", " + ").replace("*", " * ") + ")  "
    refs = {(1, 0.0): 0.3, (1, 0.25): -0.7, (1, 1.0): 1.1}
    env = {"y": y, "t": t}
    try:
        a = E.evaluate(E.parse(src, ("y", "t"), n_dim=1, r=1.0), env, refs)
    except EvalError:
        with pytest.raises(EvalError):
            E.evaluate(E.parse(noisy, ("y", "t"), n_dim=1, r=1.0), env, refs)
        return
    b = E.evaluate(E.parse(noisy, ("y", "t"), n_dim=1, r=1.0), env, refs)
    assert float(a) == float(b)
