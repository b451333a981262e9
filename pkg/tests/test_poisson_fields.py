import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permspec.errors import DomainError, InvalidArgument
from permspec.fields import (
    Yd_kernel,
    coefficients_from_draws,
    covariance_check,
    default_truncation,
    eval_field,
    exact_gaussian_distance,
    exp_moment_Yd,
    exp_moment_Yd_series,
    field_convergence_d,
    limit_law_sample,
    log_exp_moment_Yd,
    log_kernel,
    sample_coupled_fields,
    sample_field,
    upsilon_bound,
)
from permspec.poisson import sample_poisson, sample_poisson_coeffs, sample_poisson_standardized
from permspec.rng import RngStream
from permspec.stats import poisson_gof


@pytest.mark.parametrize("lam", [0.3, 4.0, 10.0, 57.5, 2500.0])
def test_poisson_sampler_moments_and_fit(lam):
    x = sample_poisson(lam, 20000, RngStream(int(lam * 10)))
    se = math.sqrt(lam / x.size)
    assert abs(x.mean() - lam) < 4 * se
    assert abs(x.var() / lam - 1) < 4 * math.sqrt(2 / x.size) * 1.5
    assert poisson_gof(x, lam).p_value > 1e-4


def test_huge_means_use_standardized_normal_draws():
    z, approx = sample_poisson_standardized(200.0, 1000, RngStream(0))
    assert approx and np.isfinite(z).all() and abs(z.mean()) < 0.2
    z, approx = sample_poisson_standardized(math.log(50.0), 10, RngStream(0))
    assert not approx


def test_poisson_draws_values_roundtrip():
    dr = sample_poisson_coeffs(3, 6, RngStream(4))
    v = dr.values
    np.testing.assert_allclose((v - dr.lam) / np.sqrt(dr.lam), dr.standardized, atol=1e-9)
    with pytest.raises(InvalidArgument):
        sample_poisson_coeffs(5, 40, RngStream(0)).values


def test_coupled_fields_satisfy_sum_identity():
    F = sample_coupled_fields(4, 50, RngStream(1), size=10)
    np.testing.assert_allclose(F["Y_d"].coeffs, F["X_d"].coeffs + F["Upsilon_d"].coeffs, atol=1e-14)
    assert np.all(F["Upsilon_d"].coeffs[:, 0] == 0)


def test_coefficient_formula_by_hand():
    dr = sample_poisson_coeffs(2, 4, RngStream(8))
    s = dr.standardized
    c = coefficients_from_draws(dr)["Y_d"]
    # k = 4: divisors 1, 2, 4
    by_hand = (s[0] * 2 ** (-1.5) + math.sqrt(2) * s[1] * 2 ** (-1.0) + 2 * s[3]) / 4
    assert math.isclose(c[3], by_hand, rel_tol=1e-12)


def test_uncentered_series_adds_deterministic_shift():
    a = sample_field("Y_d", 3, 8, RngStream(5), centered=True).coeffs
    b = sample_field("Y_d", 3, 8, RngStream(5), centered=False).coeffs
    # k = 2 shift: (d + d^2) / (2 d)
    assert math.isclose(b[1] - a[1], (3 + 9) / 6, rel_tol=1e-12)


def test_eval_field_guard_and_bound():
    f = sample_field("X_d", 2, 64, RngStream(0))
    with pytest.raises(DomainError):
        eval_field(f, 0.995)
    val, bound = eval_field(f, 0.5, with_bound=True)
    assert isinstance(val, complex) and 0 < bound < 1e-15


def test_default_truncation():
    assert default_truncation(0.5) == 64
    assert default_truncation(0.99) >= 2700


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0, 0.95), t=st.floats(0, 2 * math.pi), d=st.integers(1, 8))
def test_exponential_moment_two_forms_agree(r, t, d):
    z = r * cmath.exp(1j * t)
    a, b = exp_moment_Yd(z, d), exp_moment_Yd_series(z, d)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_exponential_moment_is_real_on_real_axis_and_one_at_zero():
    assert exp_moment_Yd(0, 3) == 1
    assert abs(log_exp_moment_Yd(0.5, 2).imag) < 1e-15


def test_kernels():
    assert cmath.isclose(log_kernel(0.5, 0.5), -math.log(0.75))
    # the Y_d kernel tends to the log kernel at rate d^(-1/2)
    gaps = [abs(Yd_kernel(0.5, 0.3j, d) - log_kernel(0.5, 0.3j)) for d in (40, 400, 4000)]
    for a, b in zip(gaps, gaps[1:]):
        assert 2.8 < a / b < 3.6
    assert abs(Yd_kernel(0.5, 0.5, 2) - log_kernel(0.5, 0.5)) > 1e-2


@pytest.mark.parametrize("kind,d", [("X_d", 3), ("X_inf", None), ("Y_d", 2)])
def test_covariance_matches_kernel(kind, d):
    rows = covariance_check(kind, d, [(0.5, 0.5), (0.3 + 0.4j, 0.6), (0.8j, -0.2)], 20000, RngStream(3))
    assert all(r.passed for r in rows)
    with pytest.raises(DomainError):
        covariance_check(kind, d, [(0.95, 0)], 10, 0)


def test_limit_law_functions():
    f = limit_law_sample("fixed_d", 3, 64, RngStream(0))
    assert abs(f(1 / math.sqrt(3))) < 1e-15
    g = limit_law_sample("growing_d", None, 64, RngStream(0), size=4)
    assert g(0.0).shape == (4,) and np.all(g(0.0) == 0)
    with pytest.raises(InvalidArgument):
        limit_law_sample("other", 3, 8, 0)


def test_field_convergence_shrinks_with_d():
    rep = field_convergence_d([2, 16, 256], None, 300, RngStream(6))
    assert rep.upsilon_decreasing
    assert all(row.below_bound for row in rep.rows if math.isfinite(row.upsilon_bound))
    assert exact_gaussian_distance(256) < exact_gaussian_distance(16)
    assert math.isclose(upsilon_bound(16, 0.9), 0.405 / 1.21)


def test_divisor_resummed_form_of_Yd():
    d, L = 3, 200
    dr = sample_poisson_coeffs(d, L, RngStream(31))
    c = coefficients_from_draws(dr)["Y_d"]
    from permspec.fields import eval_coeffs

    z = 0.6 * cmath.exp(0.8j)
    w = z / math.sqrt(d)
    resummed = -sum((dr.lam[l - 1] ** 0.5 * dr.standardized[l - 1]) * cmath.log(1 - w**l)
                    for l in range(1, L + 1))
    assert abs(eval_coeffs(c, z) - resummed) < 1e-8


def test_truncation_bound_covers_refinement():
    from permspec.fields import eval_coeffs

    for seed in range(5):
        f2L = sample_field("X_d", 2, 80, RngStream(seed))
        fL = type(f2L)(f2L.kind, f2L.d, 40, f2L.coeffs[:40])
        for z in (0.5, 0.7j, -0.8):
            val, bound = eval_field(fL, z, with_bound=True)
            assert abs(val - eval_coeffs(f2L.coeffs, z)) <= bound
