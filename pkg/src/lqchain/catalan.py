"""Stationary one-sided solution, its Catalan generator and the transition kernel.

The stationary coefficients are ``phi^k = -sqrt(p*eps) * q_k`` where
``q_0 = -1`` and ``q_k`` (k >= 1) are the Taylor coefficients of
``1 - sqrt(1 - z)``. Read as a generator, the row ``q`` drives a pure-jump
Markov chain that moves right only. Its transition probabilities ``p_ij(t)``
depend on ``j - i`` and have a closed form in half-integer Bessel functions.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import gammaln, logsumexp, zeta

from .errors import ConvergenceError, DomainError, ValidationError

__all__ = [
    "StationaryCoefficients",
    "GeneratorMatrix",
    "TransitionKernel",
    "catalan_q",
    "stationary_chain_coeffs",
    "catalan_generator",
    "rho",
    "rho_coefficients",
    "kernel_entry",
    "kernel_row",
    "variance_chain",
    "asymptotic_variance_chain",
    "bessel_k_half",
]

_EXACT_LIMIT = 30


def catalan_q(K):
    """Generator row ``q_0..q_K`` with ``q_0 = -1``, ``q_1 = 1/2``.

    Uses ``q_k = q_{k-1} (2k - 3) / (2k)``, so nothing overflows.
    """
    q = np.empty(K + 1)
    q[0] = -1.0
    if K >= 1:
        q[1] = 0.5
    for k in range(2, K + 1):
        q[k] = q[k - 1] * (2 * k - 3) / (2 * k)
    return q


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StationaryCoefficients:
    """Constant equilibrium coefficients ``phi^0..phi^K``."""

    values: np.ndarray
    scale: float
    provenance: str
    truncation: int

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    @property
    def indices(self):
        return np.arange(self.truncation + 1)

    def convolution_residual(self, nmax=None):
        """Largest ``|sum_{k<=n} phi^k phi^{n-k}|`` over ``2 <= n <= nmax``."""
        nmax = self.truncation if nmax is None else nmax
        conv = np.convolve(self.values, self.values)[2:nmax + 1]
        return float(np.max(np.abs(conv))) if conv.size else 0.0

    def tail_residual(self):
        """``|sum_k phi^k|``: the mass beyond the truncation."""
        return float(abs(self.values.sum()))


def stationary_chain_coeffs(p, epsilon, K):
    """Closed-form stationary coefficients of the one-sided chain.

    Parameters
    ----------
    p : float
        Link probability in ``[0, 1]``.
    epsilon : float
        Running-cost weight, positive.
    K : int
        Largest index, at least 2.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    if K < 2:
        raise ValidationError(f"K must be at least 2, got {K}")
    scale = math.sqrt(p * epsilon)
    # adding 0.0 turns the -0.0 entries of the p = 0 case into 0.0
    return StationaryCoefficients(-scale * catalan_q(K) + 0.0, scale,
                                  "closed-form", K)


@dataclass(frozen=True)
class GeneratorMatrix:
    """Upper-triangular Toeplitz generator with first row ``row``."""

    row: np.ndarray
    p: float

    def __post_init__(self):
        object.__setattr__(self, "row", _readonly(self.row))

    @property
    def dimension(self):
        return len(self.row)

    def row_sum(self):
        return float(self.row.sum())

    def dense(self, n=None, scaled=True):
        """``n x n`` truncation, multiplied by ``sqrt(p)`` if ``scaled``."""
        n = self.dimension if n is None else n
        if n > self.dimension:
            raise ValidationError("requested dimension exceeds stored row")
        A = toeplitz(np.r_[self.row[0], np.zeros(n - 1)], self.row[:n])
        return math.sqrt(self.p) * A if scaled else A


def catalan_generator(p, K):
    """Generator row ``q_0..q_K``; the ``sqrt(p)`` scale is kept separate."""
    if K < 2:
        raise ValidationError(f"K must be at least 2, got {K}")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    return GeneratorMatrix(catalan_q(K), p)


def _rho_log_coefficients(k):
    """Log of the integer coefficients of ``rho_k`` for ``j = k..2k-1``."""
    j = np.arange(k, 2 * k)
    m = j - k
    return (gammaln(j) - m * math.log(2.0) - gammaln(m + 1)
            - gammaln(2 * k - j))


def _rho_exact_coefficients(k):
    out = []
    for j in range(k, 2 * k):
        m = j - k
        num = math.factorial(j - 1)
        den = 2 ** m * math.factorial(m) * math.factorial(2 * k - j - 1)
        out.append(num // den)
    return out


def rho_coefficients(k):
    """Coefficients ``c_j`` of ``rho_k = 2^-k sum_j c_j (-x)^(-j/2)``.

    Returns ``(j, c_j)`` with ``j = k..2k-1``. Integer arithmetic up to
    ``k = 30``, log-gamma ratios above.
    """
    if k < 1:
        raise ValidationError("rho_0 has no sum representation")
    j = np.arange(k, 2 * k)
    if k <= _EXACT_LIMIT:
        return j, np.array(_rho_exact_coefficients(k), dtype=float)
    return j, np.exp(_rho_log_coefficients(k))


def _log_rho(k, x):
    if k == 0:
        return 0.0
    j = np.arange(k, 2 * k)
    if k <= _EXACT_LIMIT:
        logc = np.log(np.array(_rho_exact_coefficients(k), dtype=float))
    else:
        logc = _rho_log_coefficients(k)
    return float(logsumexp(logc - 0.5 * j * math.log(-x))) - k * math.log(2.0)


def rho(k, x):
    """``rho_k(x)`` for ``x < 0``.

    ``rho_0 = 1`` and ``rho_{k+1} = rho_k' + rho_k / (2 sqrt(-x))``.
    """
    if not x < 0:
        raise DomainError(f"rho needs x < 0, got {x}")
    if k < 0:
        raise ValidationError(f"order must be nonnegative, got {k}")
    return math.exp(_log_rho(k, x))


def kernel_entry(i, j, t, p):
    """Transition probability ``p_ij(t)`` of the Catalan chain.

    For a gap ``k = j - i >= 0`` this is
    ``p^k t^(2k) rho_k(-p t^2) exp(-sqrt(p) t) / k!``. Zero below the
    diagonal.
    """
    if not t >= 0:
        raise ValidationError(f"t must be nonnegative, got {t}")
    if not 0.0 < p <= 1.0:
        raise ValidationError(f"p must lie in (0, 1], got {p}")
    k = j - i
    if k < 0:
        return 0.0
    if t == 0:
        return 1.0 if k == 0 else 0.0
    nu = math.sqrt(p) * t
    if k == 0:
        return math.exp(-nu)
    logval = (2 * k * math.log(nu) - nu - math.lgamma(k + 1)
              + _log_rho(k, -nu * nu))
    return math.exp(logval)


def _iter_kernel_row(nu, K):
    nu = np.asarray(nu, dtype=float)
    a = np.exp(-nu)
    yield a
    safe = np.where(nu > 0, nu, 1.0)
    ratio = np.ones_like(safe)
    for k in range(1, K + 1):
        if k > 1:
            ratio = 1.0 / ratio + (2 * k - 3) / safe
        a = a * (nu / (2 * k)) * ratio
        yield a


def kernel_row(nu, K):
    """Entries ``a_0..a_K`` of a kernel row at ``nu = sqrt(p) t``.

    ``a_k = sqrt(2 nu / pi) (nu/2)^k K_{k-1/2}(nu) / k!``, generated by the
    Bessel ratio ``R_n = K_{n+1/2} / K_{n-1/2}``. ``nu`` may be an array;
    the result then has shape ``(K + 1,) + nu.shape``.
    """
    return np.stack(list(_iter_kernel_row(nu, K)))


@dataclass(frozen=True)
class TransitionKernel:
    """Kernel ``exp(t sqrt(p) Q)`` evaluated on the window ``0..K``."""

    p: float
    t: float
    window: int

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValidationError(f"p must lie in (0, 1], got {self.p}")
        if not self.t >= 0:
            raise ValidationError(f"t must be nonnegative, got {self.t}")

    def row(self):
        return kernel_row(math.sqrt(self.p) * self.t, self.window)

    def entry(self, i, j):
        return kernel_entry(i, j, self.t, self.p)

    def matrix(self):
        """Dense upper-triangular Toeplitz matrix of the window."""
        a = self.row()
        return toeplitz(np.r_[a[0], np.zeros(self.window)], a)

    def row_sum(self):
        return float(self.row().sum())


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _squared_row_sum(nu):
    """``sum_k a_k(nu)^2`` with a power-law tail beyond the cut."""
    nu = np.asarray(nu, dtype=float)
    K = int(max(200, math.ceil(30.0 * float(np.max(nu)) ** 2)))
    total = np.zeros_like(nu)
    for a in _iter_kernel_row(nu, K):
        total += a * a
    # a_k ~ C k^{-3/2} once k >> nu^2
    tail = a ** 2 * K ** 3 * zeta(3.0, K + 1)
    return total + tail


def _panel_integral(f, lo, hi, panels):
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * vals))


def variance_chain(t, p, sigma=1.0, panels=None, rtol=1e-6, max_panels=4096):
    """Variance of one player's state at time ``t`` from zero initial data.

    ``Var(t) = sigma^2 int_0^t sum_k p_{0k}(s)^2 ds``, computed with
    composite 16-point Gauss-Legendre panels. The panel count doubles until
    the relative change falls below ``rtol``.
    """
    if not t >= 0:
        raise ValidationError(f"t must be nonnegative, got {t}")
    if not 0.0 < p <= 1.0:
        raise ValidationError(f"p must lie in (0, 1], got {p}")
    if t == 0:
        return 0.0
    root = math.sqrt(p)
    u = root * t
    n = panels or max(2, int(math.ceil(u / 2.0)))
    prev = _panel_integral(_squared_row_sum, 0.0, u, n)
    while True:
        n *= 2
        cur = _panel_integral(_squared_row_sum, 0.0, u, n)
        change = abs(cur - prev) / max(abs(cur), 1e-300)
        if change <= rtol:
            return sigma ** 2 * cur / root
        if n >= max_panels:
            raise ConvergenceError(
                f"variance quadrature reached relative change {change:.2e}",
                achieved=change)
        prev = cur


def asymptotic_variance_chain(p):
    """Long-time variance ``1 / sqrt(2p)``."""
    if not 0.0 < p <= 1.0:
        raise DomainError(f"variance diverges unless 0 < p <= 1, got {p}")
    return 1.0 / math.sqrt(2.0 * p)


def bessel_k_half(n, x):
    """``K_{n+1/2}(x)`` for integer ``n >= -1`` from the finite sum.

    ``K_{n+1/2}(x) = sqrt(pi/(2x)) e^{-x} sum_j (n+j)!/(j!(n-j)!) (2x)^{-j}``;
    ``K_{-1/2} = K_{1/2}``.
    """
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    if n < -1 or int(n) != n:
        raise ValidationError(f"n must be an integer >= -1, got {n}")
    n = 0 if n == -1 else int(n)
    j = np.arange(n + 1)
    logs = (gammaln(n + j + 1) - gammaln(j + 1) - gammaln(n - j + 1)
            - j * math.log(2.0 * x))
    return math.exp(0.5 * math.log(math.pi / (2.0 * x)) - x + logsumexp(logs))
