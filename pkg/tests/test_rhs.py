import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdedep import expr as E
from fdedep.errors import EvalError, OutOfDomain, ParseError
from fdedep.grid import HistorySegment, Trajectory
from fdedep.rhs import (
    CallableRhs,
    Tube,
    autonomous,
    estimate_bound,
    eval_rhs,
    parse_rhs,
    perturbation_basis,
    tube_points,
)


def test_parse_rhs_components_and_refs():
    f = parse_rhs("x[2](t-0); -x[1](t-0.5) + t", N=2, r=1.0)
    assert f.dim == 2 and f.refs == ((1, 0.5), (2, 0.0))
    assert f.max_delay == 0.5
    seg = HistorySegment.from_values(np.column_stack([np.linspace(0, 1, 11), np.ones(11)]), 0.1)
    np.testing.assert_allclose(eval_rhs(f, 2.0, seg), [1.0, -0.5 + 2.0])


def test_parse_rhs_rejects_wrong_component_count_and_free_names():
    with pytest.raises(ParseError):
        parse_rhs("1; 2", N=1, r=0.0)
    with pytest.raises(ParseError):
        parse_rhs("y", N=1, r=0.0)


def test_params_are_bound():
    f = parse_rhs("a * x(t-0)", N=1, r=0.0, params={"a": -3.0})
    seg = HistorySegment.constant([2.0], 0.0, 0.1)
    assert eval_rhs(f, 0.0, seg)[0] == -6.0


def test_plus_builds_the_drifted_tree():
    f0 = parse_rhs("-x[1](t-1)", 1, 1.0)
    g = parse_rhs("1", 1, 1.0)
    fk = f0.plus(0.25, g)
    assert fk.source == "-x[1](t - 1.0) + 0.25 * 1.0"
    vals = {(1, 1.0): np.array([2.0])}
    np.testing.assert_allclose(fk.evaluate(np.array([0.0]), vals), [[-1.75]])


def test_eval_rhs_needs_long_enough_segment():
    f = parse_rhs("x(t-1)", 1, 1.0)
    with pytest.raises(ValueError):
        eval_rhs(f, 0.0, HistorySegment.constant([1.0], 0.5, 0.1))


def test_callable_rhs_checks_finiteness():
    f = CallableRhs(lambda t, v: 1.0 / v[(1, 0.0)], 1, 0.0, [(1, 0.0)])
    with pytest.raises(EvalError):
        f.evaluate(np.array([0.0]), {(1, 0.0): np.array([0.0])})
    g = autonomous(np.cos)
    np.testing.assert_allclose(g.evaluate(np.zeros(2), {(1, 0.0): np.array([0.0, np.pi])}), [[1.0], [-1.0]])


def test_tube_validation():
    x0 = Trajectory.from_values(np.zeros(21), 0.1, sigma=0.0, r=1.0)
    with pytest.raises(ValueError):
        Tube(x0, 0.0, 0.0, 1.0)
    with pytest.raises(OutOfDomain):
        Tube(x0, 1.0, 0.0, 2.0)
    assert Tube(x0, 1.0, 0.25, 0.75).times().tolist() == pytest.approx([0.3, 0.4, 0.5, 0.6, 0.7])


def test_perturbation_basis_is_symmetric_and_bounded():
    refs = ((1, 0.0), (1, 0.5), (2, 1.0))
    P = perturbation_basis(refs, 1.0, 0.3, 5)
    assert np.max(np.abs(P)) == pytest.approx(0.3)
    rows = {tuple(np.round(p, 12)) for p in P}
    assert all(tuple(np.round(-p, 12)) in rows for p in P)
    assert len(P) >= 2**3


def test_anchored_tube_leaves_history_unperturbed():
    x0 = Trajectory.from_values(np.zeros(31), 0.1, sigma=0.0, r=1.0)
    tube = Tube(x0, 0.5, 0.0, 2.0, anchored=True)
    refs = ((1, 1.0),)
    _, vals = tube_points(refs, tube, np.array([[0.5]]))
    s = tube.times()
    assert np.all(vals[(1, 1.0)][0][s <= 1.0 + 1e-12] == 0.0)
    assert np.all(vals[(1, 1.0)][0][s > 1.0 + 1e-9] == 0.5)


def _tube(radius, trend):
    h = 0.05
    n = 41
    x0 = Trajectory.from_values(trend * np.linspace(-1, 1, n), h, sigma=0.0, r=0.5)
    return Tube(x0, radius, 0.0, x0.a)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 2), st.floats(0.01, 2), st.floats(-2, 2))
def test_estimate_bound_monotone_in_radius(r1, r2, trend):
    r1, r2 = sorted((r1, r2))
    f = parse_rhs("x(t-0.5)^2 - 0.3*x(t-0) + sin(t)", 1, 0.5)
    assert estimate_bound(f, _tube(r1, trend)) <= estimate_bound(f, _tube(r2, trend)) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 1.5), st.floats(-2, 2))
def test_affine_bound_is_exact_supremum(a, b, c, radius, trend):
    f = parse_rhs(f"{a!r}*x(t-0.5) + {b!r}*x(t-0) + {c!r}", 1, 0.5)
    tube = _tube(radius, trend)
    x0 = tube.x0
    tau = tube.times()
    # supremum of an affine function over the box is attained at a vertex
    base = {d: x0.eval(tau - d)[:, 0] for d in (0.0, 0.5)}
    best = 0.0
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            v = a * (base[0.5] + s1 * radius) + b * (base[0.0] + s2 * radius) + c
            best = max(best, float(np.max(np.abs(v))))
    assert estimate_bound(f, tube, safety=1.0) == pytest.approx(best, abs=1e-9)


def test_round_trip_of_printed_rhs_is_fixed_point():
    f = parse_rhs("-(x[1](t-1)) + ((2))*t; x[2](t - 0.25)^2", 2, 1.0)
    g = parse_rhs(f.source, 2, 1.0)
    assert g.components == f.components
    assert parse_rhs(g.source, 2, 1.0).source == g.source
    assert E.to_source(f.components[0]) == "-x[1](t - 1.0) + 2.0 * t"
