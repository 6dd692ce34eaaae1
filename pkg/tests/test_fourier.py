import numpy as np
import pytest

from fdedep.fourier import (
    FourierCoeffs,
    fourier_coeffs,
    lipschitz_estimate,
    partial_sum,
    run_fourier_application,
    total_variation,
)


def triangle(x):
    return np.abs(np.mod(x + np.pi, 2 * np.pi) - np.pi)


def test_coefficients_of_trig_polynomials():
    c = fourier_coeffs(lambda x: 3 + np.cos(x) - 2 * np.sin(4 * x), 6, 512)
    a = np.zeros(7)
    b = np.zeros(7)
    a[0], a[1], b[4] = 6.0, 1.0, -2.0
    np.testing.assert_allclose(c.a, a, atol=1e-13)
    np.testing.assert_allclose(c.b, b, atol=1e-13)


def test_triangle_wave_coefficients_match_closed_form():
    n = 64
    c = fourier_coeffs(triangle, n)
    k = np.arange(1, n + 1)
    a = np.where(k % 2 == 1, -4.0 / (np.pi * k**2), 0.0)
    assert c.a[0] == pytest.approx(np.pi, abs=1e-8)
    np.testing.assert_allclose(c.a[1:], a, atol=1e-8)
    np.testing.assert_allclose(c.b, 0.0, atol=1e-8)


def test_quadrature_floor_and_validation():
    with pytest.raises(ValueError):
        fourier_coeffs(np.cos, 100, 512)
    with pytest.raises(ValueError):
        fourier_coeffs(np.cos, -1)
    with pytest.raises(ValueError):
        FourierCoeffs([1.0, 2.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        FourierCoeffs([1.0], [0.0, 0.0])
    c = fourier_coeffs(np.cos, 4, 64)
    assert c.truncate(2).n == 2
    with pytest.raises(ValueError):
        c.truncate(5)


def test_partial_sum_matches_direct_summation(rng):
    c = FourierCoeffs(rng.normal(size=41), np.concatenate([[0.0], rng.normal(size=40)]))
    x = rng.uniform(-10, 10, size=200)
    for n in (0, 1, 7, 40):
        direct = np.array([0.5 * c.a[0] + sum(c.a[k] * np.cos(k * t) + c.b[k] * np.sin(k * t) for k in range(1, n + 1)) for t in x])
        S = partial_sum(c, n)
        assert S.order == n
        np.testing.assert_allclose(S(x), direct, atol=1e-12)
    assert np.shape(partial_sum(c, 3)(np.zeros((2, 3)))) == (2, 3)


def test_bessel_inequality_and_uniform_error_decay():
    c = fourier_coeffs(triangle, 128)
    energy = np.pi * (0.5 * c.a[0] ** 2 + np.cumsum(c.a[1:] ** 2 + c.b[1:] ** 2))
    x = np.linspace(0, 2 * np.pi, 4097)
    norm2 = np.trapezoid(triangle(x) ** 2, x)
    assert np.all(energy <= norm2 + 1e-6)
    errs = [np.max(np.abs(partial_sum(c, n)(x) - triangle(x))) for n in (1, 3, 7, 15, 31)]
    assert np.all(np.diff(errs) < 0)


def test_lipschitz_and_variation_helpers():
    assert lipschitz_estimate(triangle) == pytest.approx(1.0, rel=1e-6)
    assert lipschitz_estimate(np.sin) == pytest.approx(1.0, rel=1e-3)
    assert total_variation(triangle, 1000) == pytest.approx(2 * np.pi, rel=1e-9)


def test_cos_application_meets_gronwall_bound():
    rep = run_fourier_application(np.cos, c0=0.5, horizon=2.0, orders=[0, 1, 2], h=1e-3)
    assert rep.passed and not rep.warnings
    # cos is its own first partial sum: only tolerance level differences remain
    assert rep.rows[1]["sup_rhs_err"] < 1e-12
    assert rep.rows[1]["sup_sol_err_same_grid"] <= 2e-10
    assert rep.rows[0]["sup_rhs_err"] == pytest.approx(1.0, abs=1e-9)
    assert rep.reference["status"] == "Completed"


def test_square_wave_triggers_premise_warnings():
    rep = run_fourier_application(lambda x: np.sign(np.sin(x)), c0=0.0, horizon=0.5, orders=[1, 3], h=1e-2, lab_k_max=64, lab_grid=9)
    assert any("discontinuous" in w for w in rep.warnings)


def test_non_periodic_input_warns():
    rep = run_fourier_application(lambda x: 0.1 * x, c0=0.0, horizon=0.2, orders=[1], h=1e-2, lab_k_max=64, lab_grid=9)
    assert any("periodic" in w for w in rep.warnings)


def test_report_outputs(tmp_path):
    # the kink error 2/(pi n) needs the default index window to fall below eps
    rep = run_fourier_application(triangle, c0=1.0, horizon=1.0, orders=[1, 3, 5], h=1e-2)
    rep.write_csv(tmp_path / "f.csv")
    rep.write_json(tmp_path / "f.json")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "n,sup_rhs_err,sup_sol_err" and len(lines) == 4
    assert '"gronwall_ok": true' in (tmp_path / "f.json").read_text()
    assert rep.verdict.tag == "ConsistentUpTo"
