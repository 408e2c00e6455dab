import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.special import kv, zeta

from lqchain import (DomainError, TransitionKernel, ValidationError,
                     asymptotic_variance_chain, bessel_k_half, catalan_generator,
                     kernel_entry, kernel_row, rho, stationary_chain_coeffs,
                     variance_chain)
from lqchain.catalan import (_rho_exact_coefficients, _rho_log_coefficients,
                             rho_coefficients)
from lqchain.oracle import dense_expm, finite_difference, variance_parseval


def test_stationary_examples():
    assert stationary_chain_coeffs(1.0, 1.0, 3).values.tolist() == [1.0, -0.5, -0.125, -0.0625]
    quarter = stationary_chain_coeffs(0.25, 1.0, 3).values
    assert quarter[:3].tolist() == [0.5, -0.25, -0.0625]
    zero = stationary_chain_coeffs(0.0, 1.0, 5).values
    assert np.all(zero == 0.0) and not np.any(np.signbit(zero))


def test_stationary_matches_factorial_formula():
    coeffs = stationary_chain_coeffs(1.0, 1.0, 20).values
    for k in range(2, 21):
        exact = -Fraction(math.factorial(2 * k - 3),
                          math.factorial(k - 2) * math.factorial(k) * 4 ** (k - 1))
        assert coeffs[k] == pytest.approx(float(exact), rel=1e-15)


def test_stationary_convolution_and_signs():
    coeffs = stationary_chain_coeffs(0.7, 2.0, 200)
    assert coeffs.convolution_residual() <= 1e-12
    assert coeffs.values[0] > 0 and np.all(coeffs.values[1:] < 0)
    assert coeffs.scale == pytest.approx(math.sqrt(1.4))
    assert coeffs.provenance == "closed-form"


def test_stationary_large_k_is_finite():
    vals = stationary_chain_coeffs(1.0, 1.0, 100_000).values
    assert np.all(np.isfinite(vals))
    # phi^k ~ -k^{-3/2} / (2 sqrt(pi))
    k = 100_000
    assert vals[k] == pytest.approx(-k ** -1.5 / (2 * math.sqrt(math.pi)), rel=1e-4)


def test_stationary_validation():
    for args in ((1.5, 1.0, 4), (0.5, 0.0, 4), (0.5, 1.0, 1)):
        with pytest.raises(ValidationError):
            stationary_chain_coeffs(*args)


def test_generator_examples():
    gen = catalan_generator(1.0, 2)
    assert gen.row.tolist() == [-1.0, 0.5, 0.125]
    assert 2 * gen.row[0] * gen.row[2] + gen.row[1] ** 2 == 0.0


def test_generator_row_sum_tail():
    s256 = abs(catalan_generator(1.0, 256).row_sum())
    s1024 = abs(catalan_generator(1.0, 1024).row_sum())
    assert s256 <= 0.05
    assert s1024 / s256 == pytest.approx(0.5, abs=0.01)


def test_generator_dense_scaling():
    gen = catalan_generator(0.25, 5)
    A = gen.dense()
    assert A[0, 0] == -0.5 and A[1, 0] == 0.0 and A[0, 1] == 0.25
    assert np.array_equal(gen.dense(scaled=False)[2], [0, 0, -1.0, 0.5, 0.125, 0.0625])


def test_rho_examples():
    assert rho(0, -5.0) == 1.0
    assert rho(1, -1.0) == pytest.approx(0.5, abs=1e-15)
    assert rho(2, -1.0) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(DomainError):
        rho(1, 0.0)
    with pytest.raises(ValidationError):
        rho(-1, -1.0)


def test_rho_by_hand():
    # rho_2 = (-x)^{-1}/4 + (-x)^{-3/2}/4
    for x in (-0.3, -2.0, -7.5):
        assert rho(2, x) == pytest.approx(0.25 / -x + 0.25 * (-x) ** -1.5, rel=1e-14)


def test_rho_coefficients_exact_vs_log():
    for k in range(1, 31):
        exact = np.array(_rho_exact_coefficients(k), dtype=float)
        assert np.allclose(np.exp(_rho_log_coefficients(k)), exact, rtol=1e-12, atol=0)
    j, c = rho_coefficients(3)
    # one recursion step from rho_2 by hand: rho_3 = (y^-1.5 + 3 y^-2 + 3 y^-2.5) / 8
    assert j.tolist() == [3, 4, 5] and c.tolist() == [1.0, 3.0, 3.0]


def test_rho_recursion_by_finite_differences():
    # relative error: rho_11(-0.25) is of order 1e11
    worst = 0.0
    for k in range(0, 11):
        for x in np.linspace(-9.0, -0.25, 8):
            deriv, _ = finite_difference(lambda y: rho(k, y), float(x))
            lhs = rho(k + 1, x)
            rhs = deriv + rho(k, x) / (2 * math.sqrt(-x))
            worst = max(worst, abs(lhs - rhs) / lhs)
    assert worst <= 1e-8


def test_kernel_entry_examples():
    assert kernel_entry(3, 3, 1.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert kernel_entry(3, 4, 1.0, 1.0) == pytest.approx(0.5 * math.exp(-1.0), rel=1e-15)
    assert kernel_entry(2, 5, 0.0, 0.5) == 0.0
    assert kernel_entry(2, 2, 0.0, 0.5) == 1.0
    assert kernel_entry(5, 2, 1.0, 0.5) == 0.0
    assert kernel_entry(0, 0, 2.0, 0.25) == pytest.approx(math.exp(-1.0), rel=1e-15)


@pytest.mark.parametrize("p", [1.0, 0.5])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 5.0])
def test_kernel_against_dense_expm(p, t):
    K = 60
    dense = dense_expm(catalan_generator(p, K).dense(), t)
    closed = np.array([kernel_entry(0, j, t, p) for j in range(K + 1)])
    assert np.max(np.abs(dense[0] - closed)) <= 1e-8
    assert np.max(np.abs(TransitionKernel(p, t, K).matrix() - dense)) <= 1e-8


def test_dense_oracle_agrees_with_scipy():
    A = catalan_generator(1.0, 60).dense()
    assert np.max(np.abs(dense_expm(A, 2.0) - expm(2.0 * A))) <= 1e-13


def test_kernel_nonnegative_on_covered_range():
    for t in (0.1, 0.5, 1.0, 2.0):
        assert np.all(kernel_row(t, 200) >= 0.0)


def test_row_deficit_equals_tail_mass():
    # a K = 200 row cannot sum to 1 within 1e-6: the jump law has a k^{-3/2} tail
    K, L = 200, 200_000
    for t in (0.5, 1.0, 2.0):
        full = kernel_row(t, L)
        deficit = 1.0 - full[:K + 1].sum()
        tail = full[K + 1:].sum() + full[-1] * L ** 1.5 * float(zeta(1.5, L + 1))
        assert deficit > 1e-3
        assert deficit == pytest.approx(tail, abs=1e-8)


def test_kernel_validation():
    with pytest.raises(ValidationError):
        kernel_entry(0, 1, -1.0, 0.5)
    with pytest.raises(ValidationError):
        kernel_entry(0, 1, 1.0, 0.0)
    with pytest.raises(ValidationError):
        TransitionKernel(0.5, -1.0, 4)


def test_bessel_examples():
    assert bessel_k_half(0, 1.0) == pytest.approx(0.461069, abs=1e-6)
    integral, _ = quad(lambda s: math.exp(-math.cosh(s)) * math.cosh(s / 2), 0, 40)
    assert bessel_k_half(0, 1.0) == pytest.approx(integral, rel=1e-12)
    assert bessel_k_half(-1, 2.0) == bessel_k_half(0, 2.0)
    lhs = rho(1, -1.0)
    rhs = math.sqrt(2 / math.pi) * math.e * bessel_k_half(0, 1.0) / 2
    assert lhs == pytest.approx(0.5, abs=1e-15) and rhs == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(DomainError):
        bessel_k_half(1, 0.0)


def test_bessel_recurrence_and_scipy():
    for x in (0.5, 1.0, 5.0):
        for n in range(0, 21):
            lhs = bessel_k_half(n + 1, x)
            rhs = bessel_k_half(n - 1, x) + (2 * n + 1) / x * bessel_k_half(n, x)
            assert lhs == pytest.approx(rhs, rel=1e-12)
            assert bessel_k_half(n, x) == pytest.approx(kv(n + 0.5, x), rel=1e-12)


def test_variance_examples():
    assert variance_chain(0.0, 1.0) == 0.0
    assert variance_chain(0.1, 1.0) == pytest.approx(0.0907141, abs=1e-6)
    assert variance_chain(1.0, 0.5, sigma=2.0) == pytest.approx(
        4.0 * variance_chain(1.0, 0.5), rel=1e-12)


@pytest.mark.parametrize("p", [1.0, 0.5, 0.25])
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0, 50.0])
def test_variance_against_parseval(p, t):
    assert variance_chain(t, p) == pytest.approx(variance_parseval(t, p), rel=1e-6)


def test_variance_approaches_limit_from_below():
    p = 1.0
    values = [variance_chain(t, p) for t in (1.0, 5.0, 20.0, 50.0)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert values[-1] < asymptotic_variance_chain(p)
    # exact 1/t correction, read off the Parseval integral
    for t in (50.0, 200.0):
        gap = asymptotic_variance_chain(p) - variance_parseval(t, p)
        assert gap == pytest.approx(1.0 / (math.pi * p * t), rel=0.02)


def test_asymptotic_variance_examples():
    assert asymptotic_variance_chain(1.0) == pytest.approx(0.7071068, abs=1e-7)
    assert asymptotic_variance_chain(0.5) == pytest.approx(1.0, abs=1e-15)
    assert asymptotic_variance_chain(0.125) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(DomainError):
        asymptotic_variance_chain(0.0)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.01, 4.0), p=st.floats(0.05, 1.0), k=st.integers(0, 40))
def test_kernel_two_routes_property(t, p, k):
    # log-space rho route against the Bessel ratio recurrence
    row = kernel_row(math.sqrt(p) * t, 40)
    assert kernel_entry(0, k, t, p) == pytest.approx(row[k], rel=1e-10, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0.05, 3.0), t=st.floats(0.05, 3.0))
def test_kernel_semigroup_property(s, t):
    # truncated upper-triangular Toeplitz products are exact: P(s) P(t) = P(s + t)
    K = 30
    a, b, c = kernel_row(s, K), kernel_row(t, K), kernel_row(s + t, K)
    assert np.allclose(np.convolve(a, b)[:K + 1], c, rtol=1e-12, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(p=st.floats(0.0, 1.0), eps=st.floats(0.01, 10.0), K=st.integers(2, 300))
def test_convolution_law_property(p, eps, K):
    coeffs = stationary_chain_coeffs(p, eps, K)
    assert coeffs.convolution_residual() <= 1e-12 * max(1.0, p * eps)
