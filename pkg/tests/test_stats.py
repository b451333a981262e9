import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import derangement_count_bruteforce, fixed_point_counts, poisson_central_moment_fft
from permspec.errors import InvalidArgument
from permspec.reports import correlation_report, mean_report, variance_report, wilson_interval
from permspec.rng import RngStream
from permspec.stats import (
    central_moment_polynomial,
    cycle_limit_test,
    derangements,
    ewens_params,
    falling_factorial,
    fixed_point_law_derangement,
    fixed_point_law_enumerated,
    gaussian_moment,
    growing_d_targets,
    limit_trace_cov,
    limit_trace_mean,
    poisson_central_moment,
    poisson_clt_moment_check,
    poisson_gof,
    residual_trend,
    trace_limit_test_fixed_d,
    uniform_params,
)


def test_gaussian_moment_table():
    assert [gaussian_moment(k) for k in range(5)] == [1, 1, 3, 15, 105]


def test_central_moment_polynomials_against_sympy():
    lam, t = sympy.symbols("lam t")
    mgf = sympy.exp(lam * (sympy.exp(t) - 1 - t))
    ser = sympy.series(mgf, t, 0, 9).removeO()
    for k in range(9):
        expected = sympy.Poly(sympy.expand(ser.coeff(t, k) * sympy.factorial(k)), lam)
        got = central_moment_polynomial(k)
        as_poly = sum(sympy.Rational(c.numerator, c.denominator) * lam**p for p, c in enumerate(got))
        assert sympy.expand(as_poly - expected.as_expr()) == 0


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(0.05, 30), k=st.integers(1, 8))
def test_central_moments_against_fft_extraction(lam, k):
    assert math.isclose(poisson_central_moment(lam, k), poisson_central_moment_fft(lam, k),
                        rel_tol=1e-8, abs_tol=1e-10)


def test_exact_rational_central_moment():
    assert poisson_central_moment(Fraction(3, 2), 4) == 3 * Fraction(9, 4) + Fraction(3, 2)


def test_standardized_moments_tend_to_gaussian():
    rep = poisson_clt_moment_check([10, 100, 1e4], 8)
    assert rep.approaching
    even = [r for r in rep.rows if r.lam == 1e4 and r.k % 2 == 0]
    assert all(abs(r.analytic / r.target - 1) < 0.01 for r in even)
    # odd standardized moments decay like lam^(-1/2): mu_3 / lam^(3/2) = lam^(-1/2)
    assert [r.analytic for r in rep.rows if r.lam == 1e4 and r.k == 3] == [pytest.approx(0.01)]
    with pytest.raises(InvalidArgument):
        poisson_clt_moment_check([10, 5], 4)


def test_sampled_clt_rows_agree_with_analytic():
    rep = poisson_clt_moment_check([20.0], 4, samples=20000, rng=RngStream(1))
    assert all(abs(r.sampled.z_score) < 4 for r in rep.rows)


def test_falling_factorial():
    assert falling_factorial(5, 0) == 1 and falling_factorial(5, 3) == 60
    np.testing.assert_array_equal(falling_factorial(np.array([0, 1, 4]), 2), [0, 0, 12])


@pytest.mark.parametrize("n", range(1, 8))
def test_fixed_point_laws(n):
    assert fixed_point_law_enumerated(n) == fixed_point_law_derangement(n) == fixed_point_counts(n)
    assert derangements(n) == derangement_count_bruteforce(n)


def test_gof_detects_wrong_mean():
    x = np.random.default_rng(0).poisson(3.0, 5000)
    assert poisson_gof(x, 3.0).p_value > 1e-3 and poisson_gof(x, 3.0).tv < 0.05
    assert poisson_gof(x, 3.5).p_value < 1e-6
    with pytest.raises(InvalidArgument):
        poisson_gof(x[:50], 3.0)


def test_limit_parameters():
    mu = uniform_params(3)
    assert limit_trace_mean(4, mu) == 3 + 9 + 81
    # Var(Lambda_1 + 2 Lambda_2 + 4 Lambda_4) and Cov with Lambda_1 + 2 Lambda_2
    assert limit_trace_cov(4, 4, mu) == pytest.approx(3 + 4 * 4.5 + 16 * 81 / 4)
    assert limit_trace_cov(2, 4, mu) == pytest.approx(3 + 4 * 4.5)
    assert ewens_params(2, 1.0)(3) == uniform_params(2)(3)
    assert ewens_params(2, 0.5)(1) == pytest.approx(1.0)


def test_growing_d_targets():
    t = growing_d_targets(12, 3)
    assert t["mean"] == 0 and t["var"] == 3
    assert t["finite_mean"] == pytest.approx(12 ** -0.5)
    assert t["finite_var"] == pytest.approx(3 + 12 ** -2)


def test_report_helpers():
    x = np.random.default_rng(1).standard_normal(4000)
    assert mean_report("m", 0.0, x).pass_
    assert variance_report("v", 1.0, x).pass_
    assert correlation_report("c", x, x + np.random.default_rng(2).standard_normal(4000), 2 ** -0.5).pass_
    iv = wilson_interval(0, 50)
    assert iv.low == 0 and 0 < iv.high < 0.1


def test_small_trace_limit_run():
    rep = trace_limit_test_fixed_d(500, 2, 3, 300, seed=2)
    assert rep.passed and rep.gof is not None


def test_small_cycle_limit_run():
    rep = cycle_limit_test(500, 2, 3, 400, seed=3)
    assert rep.passed


def test_residual_trend_small():
    tr = residual_trend([100, 400], 2, 4, 60, seed=1)
    assert tr.mean_residual[100] > tr.mean_residual[400]
