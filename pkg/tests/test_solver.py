import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdedep.errors import NoConvergence, SelfMapViolation, StepUnderflow
from fdedep.grid import EtaFn, HistorySegment, in_A
from fdedep.rhs import parse_rhs
from fdedep.solver import (
    STEP_MARGIN,
    ProblemSpec,
    apply_T,
    choose_step,
    extend_solution,
    picard_solve,
    residual,
    restart_problem,
    solve,
    splice,
)

TOL = 1e-10


def problem(rhs, phi=1.0, r=0.0, horizon=1.0, h=1e-3, N=1, sigma=0.0):
    return ProblemSpec(sigma, r, HistorySegment.constant(np.atleast_1d(phi), r, h), parse_rhs(rhs, N, r), horizon, h)


def test_problem_spec_snaps_and_validates():
    p = problem("0", r=0.30000001, horizon=0.9999999, h=0.1)
    assert p.r == pytest.approx(0.3) and p.horizon == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ProblemSpec(0.0, 1.0, HistorySegment.constant([1.0], 0.5, 0.1), parse_rhs("0", 1, 1.0), 1.0, 0.1)
    with pytest.raises(ValueError):
        problem("x(t-0.5)", r=0.5, horizon=-1.0)


def test_choose_step_rule():
    assert choose_step(2.0, 1.0, 0.01, 10.0) == pytest.approx(0.25)
    assert 2.0 * choose_step(2.0, 1.0, 0.01, 10.0) <= STEP_MARGIN * 1.0
    assert choose_step(0.0, 1.0, 0.01, 0.5) == pytest.approx(0.5)
    assert choose_step(1.0, 1.0, 0.1, 0.2) == pytest.approx(0.2)
    with pytest.raises(StepUnderflow):
        choose_step(1e6, 1.0, 0.01, 1.0)


def test_zero_rhs_keeps_constant():
    res = solve(problem("0", phi=2.5, r=0.5, horizon=1.0, h=0.01))
    assert res.completed
    np.testing.assert_array_equal(res.x.values, 2.5)


def test_harmonic_oscillator_system():
    p = problem("x[2](t-0); -x[1](t-0)", phi=[1.0, 0.0], N=2, horizon=3.0)
    res = solve(p, tol=TOL)
    t = res.x.times
    err = np.max(np.abs(res.x.values - np.column_stack([np.cos(t), -np.sin(t)])))
    assert res.completed and err < 1e-5


def test_delay_off_grid_uses_interpolation():
    # x' = -x(t - 0.3333); compare against a fine-grid solve
    coarse = solve(problem("-x(t-0.3333)", r=0.5, horizon=2.0, h=1e-3), tol=TOL)
    fine = solve(problem("-x(t-0.3333)", r=0.5, horizon=2.0, h=1e-4), tol=TOL)
    err = np.max(np.abs(coarse.x.values[:, 0] - fine.x.values[::10, 0]))
    assert coarse.completed and err < 1e-5


def test_blow_up_is_reported_as_stalled():
    res = solve(problem("x(t-0)^2", horizon=2.0, h=1e-3), tol=1e-9)
    assert res.status == "Stalled"
    assert 0.9 < res.achieved < 1.0
    assert res.reason
    t = res.x.times
    assert np.max(np.abs(res.x.values[:, 0] - 1 / (1 - t)) / (1 / (1 - t))) < 1e-2


def test_picard_guards():
    p = problem("1", r=0.0, horizon=1.0, h=0.01)
    with pytest.raises(SelfMapViolation):
        picard_solve(p, 1.0, beta=0.5)
    with pytest.raises(SelfMapViolation):
        picard_solve(p, 0.1, beta=1.0, bound=0.5)
    q = problem("x(t-0)", horizon=1.0, h=0.01)
    with pytest.raises(NoConvergence):
        picard_solve(q, 0.5, beta=10.0, tol=1e-14, max_iter=3)


def test_fixed_point_stays_in_A_and_has_small_residual():
    p = problem("-x(t-1)", r=1.0, horizon=0.5)
    out = picard_solve(p, 0.5, beta=1.0, tol=TOL)
    assert in_A(out.eta, 0.5, 1.0)
    assert residual(p, out.eta) <= TOL
    assert out.max_norm <= out.max_rhs * 0.5 + 1e-15


def test_apply_T_of_zero_integrates_initial_history():
    p = problem("-x(t-1)", r=1.0, horizon=0.5, h=0.01)
    Teta = apply_T(p, EtaFn.zero(0.5, 1.0, 0.01), 0.5)
    np.testing.assert_allclose(Teta.forward[:, 0], -np.linspace(0, 0.5, 51), atol=1e-14)


def test_restart_and_splice_reproduce_single_solve():
    p = problem("-x(t-1)", r=1.0, horizon=1.6)
    whole = solve(p, tol=TOL)
    first = solve(p.with_(horizon=0.7), tol=TOL)
    rp = restart_problem(p, first.eta, horizon=0.9)
    assert rp.sigma == pytest.approx(0.7)
    second = solve(rp, tol=TOL)
    eta = splice(first.eta, second.eta)
    assert np.max(np.abs(eta.values - whole.eta.values)) < 1e-12
    ext = extend_solution(p, first.eta, 1.6, tol=TOL)
    assert np.max(np.abs(ext.values - whole.eta.values)) < 1e-12


@pytest.mark.parametrize(
    "rhs, r, exact",
    [
        ("x(t-0)", 0.0, lambda t: np.exp(t)),
        ("-x(t-1)", 1.0, None),
        ("-2*t*x(t-0)", 0.0, lambda t: np.exp(-(t**2))),
    ],
)
def test_grid_convergence_factor(rhs, r, exact):
    horizon = 3.0 if exact is None else 1.0

    def oracle(t):
        if exact is not None:
            return exact(t)
        # method of steps on [0, 3] for x' = -x(t-1), x = 1 on [-1, 0]
        return np.select(
            [t <= 0, t <= 1, t <= 2],
            [np.ones_like(t), 1 - t, 1 - t + (t - 1) ** 2 / 2],
            -0.5 + (t - 2) ** 2 / 2 - (t - 2) ** 3 / 6,
        )

    errs = []
    for h in (4e-3, 2e-3):
        res = solve(problem(rhs, r=r, horizon=horizon, h=h), tol=1e-12)
        t = res.x.times
        errs.append(np.max(np.abs(res.x.values[:, 0] - oracle(t))))
    assert errs[1] <= 1e-3
    if errs[0] > 1e-12:
        assert errs[0] / errs[1] >= 1.8


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-1, 1), st.sampled_from([0.25, 0.5, 0.37]), st.floats(-1, 1))
def test_self_mapping_and_equicontinuity_on_linear_delay_problems(a, b, d, c):
    p = problem(f"{a!r}*x(t-{d!r}) + {b!r}*x(t-0) + {c!r}", phi=1.0, r=0.5, horizon=1.0, h=1e-3)
    res = solve(p, tol=TOL)
    assert res.completed
    x = res.x
    for st_ in res.steps:
        assert st_.max_norm <= st_.M * st_.length + 1e-12
        assert st_.max_norm < st_.beta_bar
        assert st_.max_slope <= st_.M * (1 + 1e-12)
        j0 = x.r_nodes + int(round(st_.start / x.h))
        seg = x.values[j0 : j0 + int(round(st_.length / x.h)) + 1, 0]
        inc = np.abs(seg[:, None] - seg[None, :])
        tt = x.h * np.arange(seg.size)
        assert np.all(inc <= st_.M * np.abs(tt[:, None] - tt[None, :]) + 2 * TOL + 1e-12)
    assert res.global_residual <= 10 * TOL


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 7))
def test_restart_consistency(split):
    p = problem("-x(t-1)", r=1.0, horizon=0.8, h=1e-3)
    one = solve(p, tol=TOL, beta_bar=2.0)
    a1 = split * 0.1
    first = solve(p.with_(horizon=a1), tol=TOL, beta_bar=2.0)
    eta = extend_solution(p, first.eta, 0.8, tol=TOL, beta_bar=2.0)
    M = max(s.M for s in one.steps)
    assert np.max(np.abs(eta.values - one.eta.values)) <= 10 * TOL + 2 * p.h * M


def test_init_hook_changes_start_but_not_solution():
    p = problem("-x(t-0.5) + 0.2*x(t-0)", r=0.5, horizon=1.5)
    base = solve(p, tol=TOL)

    def wiggle(offset, shape):
        out = np.zeros(shape)
        nr = p.r_nodes
        out[nr:, 0] = 0.01 * np.sin(np.arange(shape[0] - nr))
        out[nr, 0] = 0.0
        return out

    other = solve(p, tol=TOL, init=wiggle)
    assert np.max(np.abs(other.x.values - base.x.values)) <= 10 * TOL


def test_choose_step_with_subnormal_bound():
    assert choose_step(5e-324, 1.0, 0.01, 0.5) == pytest.approx(0.5)
    res = solve(problem("2.2250738585072014e-309", horizon=0.5, h=0.01))
    assert res.completed
