import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import toeplitz
from scipy.special import hyp2f1 as scipy_hyp2f1
from scipy.special import zeta

from lqchain import (DomainError, TwoSidedParams, ValidationError, hyp2f1,
                     kernel_entry, stationary_chain_coeffs, stationary_twosided_coeffs,
                     twosided_kernel_weight)
from lqchain.oracle import cauchy_coeffs, dense_expm, laurent_radius
from lqchain.twosided import (_hyp2f1_scaled, powerlaw_geometric_tail,
                              twosided_kernel_row, twosided_series_coeffs)

PHI0 = 2 * math.sqrt(2) / math.pi


def test_hyp2f1_examples():
    assert hyp2f1(0.3, 0.7, 1.5, 0.0) == 1.0
    assert hyp2f1(-0.25, 0.25, 1.0, 1.0) == pytest.approx(PHI0, rel=1e-15)
    assert hyp2f1(1.0, 1.0, 2.0, 0.5) == pytest.approx(2 * math.log(2), rel=1e-14)


def test_hyp2f1_rejects_divergent_input():
    with pytest.raises(DomainError):
        hyp2f1(1.0, 1.0, 2.0, 1.0)
    with pytest.raises(ValidationError):
        hyp2f1(1.0, 1.0, -2.0, 0.5)
    with pytest.raises(DomainError):
        hyp2f1(1.0, 1.0, 2.0, 1.5)


def test_hyp2f1_slow_series_uses_tail():
    # c - a - b = 0.5: terms fall like n^{-1.5} z^n, so z near 1 needs the tail
    z = 1 - 1e-7
    assert hyp2f1(0.25, 0.75, 1.5, z) == pytest.approx(scipy_hyp2f1(0.25, 0.75, 1.5, z),
                                                       rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-3.0, 3.0), b=st.floats(-3.0, 3.0), c=st.floats(0.2, 5.0),
       z=st.floats(0.0, 0.95))
def test_hyp2f1_matches_scipy(a, b, c, z):
    ref = scipy_hyp2f1(a, b, c, z)
    assert hyp2f1(a, b, c, z) == pytest.approx(ref, rel=1e-10, abs=1e-12)


def test_powerlaw_tail_against_direct_sum():
    for z in (0.3, 0.9, 1.0):
        n, beta = 50, 2.5
        i = np.arange(1, 2_000_000)
        direct = float(np.sum(z ** i * (1 + i / n) ** -beta))
        if z == 1.0:
            direct += n ** beta * 2_000_000 ** (1 - beta) / (beta - 1)
        assert powerlaw_geometric_tail(z, n, beta) == pytest.approx(direct, rel=1e-6)


def test_symmetric_values():
    coeffs = stationary_twosided_coeffs(TwoSidedParams(p=0.5), 8)
    assert coeffs[0] == pytest.approx(PHI0, abs=1e-15)
    assert coeffs[1] == pytest.approx(-PHI0 / 3, abs=1e-15)
    assert coeffs[-1] == coeffs[1]


def test_one_band_reduces_to_chain():
    p = 0.6
    coeffs = stationary_twosided_coeffs(TwoSidedParams(epsilon=1.5, p=p, p1=1.0, q1=0.0), 40)
    chain = stationary_chain_coeffs(p, 1.5, 40).values
    assert np.max(np.abs(coeffs.values[40:] - chain)) <= 1e-15
    assert np.all(coeffs.values[:40] == 0.0)


def test_sign_pattern():
    for p in (0.2, 0.5, 0.9):
        vals = stationary_twosided_coeffs(TwoSidedParams(p=p, p1=0.8, q1=0.6), 200).values
        assert vals[200] > 0
        assert np.all(np.delete(vals, 200) < 0)


def test_exchange_symmetry():
    a = stationary_twosided_coeffs(TwoSidedParams(p=0.7), 50).values
    b = stationary_twosided_coeffs(TwoSidedParams(p=0.3), 50).values
    assert np.max(np.abs(a - b[::-1])) <= 1e-15


@pytest.mark.parametrize("z", [0.2, 0.5, 0.9])
def test_laurent_series_reproduces_symbol(z):
    # w = 0.9, v = 0.1: the Laurent annulus is 1/9 < |z| < 1
    params = TwoSidedParams(epsilon=2.0, p=0.9)
    coeffs = stationary_twosided_coeffs(params, 128)
    b = math.sqrt(params.epsilon * params.B) * math.sqrt(1 - params.w * z - params.v / z)
    assert abs(coeffs.series(z).real - b) <= 1e-8


def test_sum_zero_residual_is_the_tail():
    # |sum_j phi^j| <= 1e-6 at K = 256 cannot hold: phi^j ~ j^{-3/2} on one side
    params = TwoSidedParams(p=0.9)
    residuals = [stationary_twosided_coeffs(params, K).tail_residual() for K in (64, 128, 256)]
    assert residuals[0] > residuals[1] > residuals[2]
    L = 16384
    wide = stationary_twosided_coeffs(params, L)
    beyond = wide.values[L + 257:]
    tail = beyond.sum() + beyond[-1] * L ** 1.5 * float(zeta(1.5, L + 1))
    tail += wide.values[:L - 256].sum()
    assert residuals[2] > 1e-2
    assert residuals[2] == pytest.approx(-tail, rel=1e-4)


def test_far_coefficient_does_not_underflow():
    # the 2F1 terms grow for thousands of steps before decaying at j = 65536
    w, v, j = 0.9, 0.1, 65536
    log_scale = (math.lgamma(j - 0.5) - math.log(2 * math.sqrt(math.pi))
                 - math.lgamma(j + 1) + j * math.log(w))
    val = -_hyp2f1_scaled(j / 2 - 0.25, j / 2 + 0.25, 1.0 + j, 4 * w * v, log_scale, 1e-14)
    assert val == pytest.approx(-math.sqrt(w - v) / (2 * math.sqrt(math.pi)) * j ** -1.5,
                                rel=1e-4)


@pytest.mark.parametrize("p", [0.9, 0.8, 0.65, 0.2])
def test_cauchy_oracle_agreement(p):
    params = TwoSidedParams(p=p, p1=0.9, q1=0.7)
    coeffs = stationary_twosided_coeffs(params, 32)
    scale = math.sqrt(params.epsilon * params.B)
    radius = laurent_radius(params.w, params.v)
    oracle = cauchy_coeffs(
        lambda z: scale * np.sqrt(1 - (params.w * z + params.v / z)), 32, radius)
    assert np.max(np.abs(oracle.coeffs.real - coeffs.values)) <= 1e-10


def test_cauchy_radius_choice():
    assert laurent_radius(0.5, 0.5) == 1.0
    assert laurent_radius(1.0, 0.0) == pytest.approx(0.9)
    r = laurent_radius(0.8, 0.2)
    assert 0.25 < r < 1.0
    assert laurent_radius(0.2, 0.8) == pytest.approx(1 / r)


def test_double_series_route():
    params = TwoSidedParams(p=0.8, p1=0.9, q1=0.7)
    a = stationary_twosided_coeffs(params, 40).values
    b = twosided_series_coeffs(params, 40).values
    assert np.max(np.abs(a - b)) <= 1e-13


def test_kernel_weight_examples():
    assert twosided_kernel_weight(0, 0.0, 0.4) == 1.0
    assert twosided_kernel_weight(3, 0.0, 0.4) == 0.0
    assert twosided_kernel_weight(1, 1.0, 1.0) == pytest.approx(
        kernel_entry(0, 1, 1.0, 1.0), rel=1e-14)
    assert twosided_kernel_weight(1, 1.0, 1.0) == pytest.approx(0.183940, abs=1e-6)
    assert twosided_kernel_weight(-1, 1.0, 1.0) == 0.0
    with pytest.raises(ValidationError):
        twosided_kernel_weight(0, -1.0, 0.5)
    with pytest.raises(ValidationError):
        twosided_kernel_weight(0, 1.0, 1.5)


def test_kernel_weight_reflection():
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        for p in (0.2, 0.35, 0.5):
            for j in range(-6, 7):
                a = twosided_kernel_weight(j, t, p)
                b = twosided_kernel_weight(-j, t, 1 - p)
                worst = max(worst, abs(a - b))
    assert worst <= 1e-12


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_kernel_against_dense_expm(t):
    p, W = 0.3, 128
    vals = np.asarray(stationary_twosided_coeffs(TwoSidedParams(p=p), 2 * W).values)
    dense = dense_expm(toeplitz(-vals[2 * W::-1], -vals[2 * W:]), t)
    mid = dense[W, W - 30:W + 31]
    assert np.max(np.abs(mid - twosided_kernel_row(t, p, 30))) <= 1e-8


def test_kernel_weights_are_subprobabilities():
    row = twosided_kernel_row(1.0, 0.4, 40)
    assert np.all(row >= 0)
    assert row.sum() < 1.0


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.1, 2.0), p=st.floats(0.05, 0.95), j=st.integers(-6, 6))
def test_kernel_reflection_property(t, p, j):
    a = twosided_kernel_weight(j, t, p)
    b = twosided_kernel_weight(-j, t, 1 - p)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-15)


@settings(max_examples=20, deadline=None)
@given(p=st.floats(0.05, 0.95), p1=st.floats(0.1, 1.0), q1=st.floats(0.1, 1.0))
def test_exchange_symmetry_property(p, p1, q1):
    a = stationary_twosided_coeffs(TwoSidedParams(p=p, p1=p1, q1=q1), 20).values
    b = stationary_twosided_coeffs(TwoSidedParams(p=1 - p, p1=q1, q1=p1), 20).values
    assert np.allclose(a, b[::-1], rtol=1e-12, atol=1e-15)
