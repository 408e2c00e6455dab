"""Stationary two-sided coefficients and the deterministic two-sided kernel.

The stationary generating function is
``b(z) = sqrt(eps*B) * sqrt(1 - (w z + v / z))``. Expanding the square root
binomially and regrouping by the power of ``z`` gives every coefficient as
a Gauss hypergeometric value at ``4wv``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, zeta

from .catalan import kernel_row
from .errors import DomainError, ValidationError

__all__ = [
    "TwoSidedStationary",
    "hyp2f1",
    "stationary_twosided_coeffs",
    "twosided_series_coeffs",
    "twosided_kernel_weight",
    "twosided_kernel_row",
]

_MAX_TERMS = 1 << 20
_CHUNK = 4096


def powerlaw_geometric_tail(z, n, beta):
    """``sum_{i>=1} z^i (1 + i/n)^{-beta}`` for ``0 <= z <= 1``, ``beta > 1``.

    Uses ``(1+x)^{-beta} = Gamma(beta)^{-1} int s^{beta-1} e^{-s(1+x)} ds``
    and sums the geometric series under the integral.
    """
    if z == 0:
        return 0.0
    if z == 1.0:
        return n ** beta * float(zeta(beta, n + 1))

    def integrand(s):
        q = z * math.exp(-s / n)
        return s ** (beta - 1.0) * math.exp(-s) * q / (1.0 - q)

    val, _ = quad(integrand, 0.0, math.inf, limit=200)
    return val / math.gamma(beta)


def _gauss_log(a, b, c):
    """Sign and log-magnitude of ``2F1(a, b; c; 1)``; sign 0 for an exact zero."""
    if not c - a - b > 0:
        raise DomainError("series diverges at z=1 unless c - a - b > 0")
    for arg in (c - a, c - b):
        if arg <= 0 and float(arg).is_integer():
            return 0.0, -math.inf
    sign = 1.0
    for arg in (c, c - a, c - b):
        if arg < 0 and math.floor(arg) % 2 == 1:
            sign = -sign
    logs = gammaln(c) + gammaln(c - a - b) - gammaln(c - a) - gammaln(c - b)
    return sign, float(logs)


def _hyp2f1_scaled(a, b, c, z, log_scale, rtol):
    """``exp(log_scale) * 2F1(a, b; c; z)`` with the series kept in log space.

    Folding the scale into every term keeps huge ``F`` times tiny prefactor
    products finite.
    """
    if z == 0.0:
        return math.exp(log_scale)
    if z == 1.0:
        sign, logs = _gauss_log(a, b, c)
        return sign * math.exp(logs + log_scale) if sign else 0.0
    head = math.exp(log_scale)
    total = head
    log_term, sign = log_scale, 1.0
    n0 = 0
    lz = math.log(z)
    last = head
    while n0 < _MAX_TERMS:
        n = np.arange(n0, n0 + _CHUNK, dtype=float)
        ratios = (a + n) * (b + n) / ((c + n) * (1.0 + n))
        if np.any(ratios == 0.0):
            stop = int(np.argmax(ratios == 0.0))
            ratios = ratios[:stop]
            if ratios.size == 0:
                return total
        signs = sign * np.cumprod(np.sign(ratios))
        logs = log_term + np.cumsum(np.log(np.abs(ratios)) + lz)
        terms = signs * np.exp(logs)
        total += float(terms.sum())
        if ratios.size < _CHUNK:
            return total
        sign, log_term = float(signs[-1]), float(logs[-1])
        last = float(terms[-1])
        n0 += _CHUNK
        # for large c the terms first grow for ~c z / 4 steps; an underflowed
        # term only ends the sum once the terms are shrinking
        shrinking = abs(ratios[-1]) * z < 1.0
        if shrinking and (last == 0.0 or abs(last) <= rtol * abs(total) * (1.0 - z)):
            return total
    if c - a - b > 0:
        # terms behave like C n^{a+b-c-1} z^n
        total += last * powerlaw_geometric_tail(z, n0, c + 1.0 - a - b)
    return total


def hyp2f1(a, b, c, z, rtol=1e-14):
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for ``0 <= z <= 1``.

    Partial sums of the rising-factorial series, or Gauss summation at
    ``z = 1``. When the series has not converged after ``2^20`` terms and
    ``c - a - b > 0``, a power-law-times-geometric tail closes the sum.
    """
    if c <= 0 and float(c).is_integer():
        raise ValidationError("c must not be a nonpositive integer")
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"z must lie in [0, 1], got {z}")
    if z == 0:
        return 1.0
    return _hyp2f1_scaled(a, b, c, z, 0.0, rtol)


def _half_binomial_signed(n_max):
    """``(-1)^n C(1/2, n)`` for ``n = 0..n_max``: Taylor coefficients of sqrt(1-z)."""
    out = np.empty(n_max + 1)
    out[0] = 1.0
    for n in range(1, n_max + 1):
        out[n] = out[n - 1] * (2 * n - 3) / (2 * n)
    return out


@dataclass(frozen=True)
class TwoSidedStationary:
    """Stationary two-sided coefficients ``phi^{-K}..phi^{K}``."""

    values: np.ndarray
    epsilon: float
    w: float
    v: float
    B: float
    provenance: str

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def truncation(self):
        return (len(self.values) - 1) // 2

    @property
    def indices(self):
        K = self.truncation
        return np.arange(-K, K + 1)

    def __getitem__(self, j):
        return self.values[j + self.truncation]

    def tail_residual(self):
        """``|sum_j phi^j|``: what the window misses of ``b(1) = 0``."""
        return float(abs(self.values.sum()))

    def series(self, z):
        z = complex(z)
        return sum(z ** int(j) * v for j, v in zip(self.indices, self.values))


def _weights(params):
    w, v = params.w, params.v
    wv4 = 4.0 * w * v
    if wv4 > 1.0 + 1e-12:
        raise DomainError(f"4wv = {wv4} exceeds 1")
    return w, v, min(wv4, 1.0)


def stationary_twosided_coeffs(params, K):
    """Closed-form stationary coefficients of the two-sided chain.

    ``phi^{+j} = sqrt(eps B) (-1)^j C(1/2, j) w^j 2F1(j/2 - 1/4, j/2 + 1/4; 1 + j; 4wv)``
    and ``phi^{-j}`` is the same with ``v`` in place of ``w``.

    Parameters
    ----------
    params : TwoSidedParams
    K : int
        Window half-width.
    """
    if K < 0:
        raise ValidationError("K must be nonnegative")
    w, v, x = _weights(params)
    scale = math.sqrt(params.epsilon * params.B)
    log_half = np.log(np.abs(_half_binomial_signed(K)))
    values = np.zeros(2 * K + 1)
    for j in range(K + 1):
        a, b, c = j / 2 - 0.25, j / 2 + 0.25, 1.0 + j
        sign = 1.0 if j == 0 else -1.0
        for side, weight in ((1, w), (-1, v)):
            if side == -1 and j == 0:
                continue
            if j and weight == 0.0:
                continue
            log_scale = log_half[j] + (j * math.log(weight) if j else 0.0)
            values[K + side * j] = (sign * scale
                                    * _hyp2f1_scaled(a, b, c, x, log_scale, 1e-14))
    return TwoSidedStationary(values, params.epsilon, w, v, params.B,
                              "closed-form")


def twosided_series_coeffs(params, K, max_terms=100_000, rtol=1e-16):
    """Stationary coefficients summed from the raw binomial double series.

    Independent of :func:`hyp2f1`; converges geometrically with ratio
    ``4wv`` and is meant for ``wv < 1/4``.
    """
    w, v, x = _weights(params)
    scale = math.sqrt(params.epsilon * params.B)
    values = np.zeros(2 * K + 1)
    lw = math.log(w) if w > 0 else -math.inf
    lv = math.log(v) if v > 0 else -math.inf
    ell = np.arange(max_terms, dtype=float)
    for j in range(K + 1):
        n = 2 * ell + j
        # |C(1/2, n)| = Gamma(n - 1/2) / (2 sqrt(pi) n!) for n >= 1
        log_half = np.where(
            n == 0, 0.0,
            gammaln(np.maximum(n - 0.5, 0.5)) - math.log(2.0 * math.sqrt(math.pi))
            - gammaln(n + 1))
        sign = np.where(n == 0, 1.0, -1.0)
        log_binom = gammaln(n + 1) - gammaln(ell + j + 1) - gammaln(ell + 1)
        with np.errstate(invalid="ignore"):
            pos = sign * np.exp(log_half + log_binom + (ell + j) * lw + ell * lv)
            neg = sign * np.exp(log_half + log_binom + ell * lw + (ell + j) * lv)
        pos = np.nan_to_num(pos)
        neg = np.nan_to_num(neg)
        values[K + j] = scale * pos.sum()
        if j:
            values[K - j] = scale * neg.sum()
    return TwoSidedStationary(values, params.epsilon, w, v, params.B,
                              "double-series")


@lru_cache(maxsize=16)
def _cached_row(t, L):
    row = kernel_row(t, L)
    row.setflags(write=False)
    return row


def _series_length(p, j, tol):
    r = 4.0 * p * (1.0 - p)
    if r <= 0.0:
        return abs(j) + 2
    if r >= 1.0 - 1e-12:
        return 200_000
    # terms shrink like r^(k/2); stop once that factor is below tol
    need = 2.0 * math.log(tol) / math.log(r)
    return int(min(200_000, abs(j) + math.ceil(need) + 8))


def _weight_terms(j, t, p, L):
    row = _cached_row(float(t), L)
    k = np.arange(abs(j), L + 1, 2)
    i = (k + j) // 2
    with np.errstate(divide="ignore"):
        logb = gammaln(k + 1) - gammaln(i + 1) - gammaln(k - i + 1)
        logp = np.where(i > 0, i * math.log(p) if p > 0 else -np.inf, 0.0)
        logq = np.where(k - i > 0,
                        (k - i) * math.log(1.0 - p) if p < 1 else -np.inf, 0.0)
    return row[k] * np.exp(logb + logp + logq)


def twosided_kernel_weight(j, t, p, tol=1e-16):
    """Entry ``(i, i + j)`` of ``exp(t Q)`` for the deterministic two-sided chain.

    ``Q = -sqrt(I - (p S + (1-p) S^{-1}))`` with ``S`` the right shift.
    Writing ``e^{-t sqrt(1 - y)} = sum_k a_k(t) y^k`` with the one-sided
    kernel row ``a_k``, the weight is
    ``sum_k a_k C(k, (k+j)/2) p^{(k+j)/2} (1-p)^{(k-j)/2}`` over ``k >= |j|``
    of the parity of ``j``. Near ``p = 1/2`` the summands decay only like
    ``k^{-2}``; the remainder is then closed with a power-law tail.
    """
    if not t >= 0:
        raise ValidationError(f"t must be nonnegative, got {t}")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    j = int(j)
    if t == 0:
        return 1.0 if j == 0 else 0.0
    L = _series_length(p, j, tol)
    terms = _weight_terms(j, t, p, L)
    total = float(terms.sum())
    r = 4.0 * p * (1.0 - p)
    if terms.size and terms[-1] > tol and r > 0:
        n = terms.size
        total += float(terms[-1]) * powerlaw_geometric_tail(r, n, 2.0)
    return total


def twosided_kernel_row(t, p, J, tol=1e-16):
    """Weights for offsets ``-J..J``."""
    return np.array([twosided_kernel_weight(j, t, p, tol)
                     for j in range(-J, J + 1)])
