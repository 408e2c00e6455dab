"""Finite-horizon Riccati systems of the one-sided and two-sided chain games.

The equilibrium drift of player ``i`` is ``-sum_k phi_t^k X^{i+k}``. The
coefficients depend only on the index distance ``k``, so one vector per time
point describes the whole infinite system. Both solvers integrate backward
from the terminal data with classical RK4 and step doubling.
"""

from dataclasses import dataclass, field

import numpy as np

from ._integrate import integrate_backward
from .errors import DomainError, ValidationError

__all__ = [
    "ChainParams",
    "TwoSidedParams",
    "RiccatiSolution",
    "solve_chain_riccati",
    "solve_twosided_riccati",
    "eval_generating_function_chain",
    "eval_generating_function_twosided",
]


def _check_common(epsilon, c, sigma, horizon):
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    if not c >= 0:
        raise ValidationError(f"c must be nonnegative, got {c}")
    if not sigma >= 0:
        raise ValidationError(f"sigma must be nonnegative, got {sigma}")
    if not horizon > 0:
        raise ValidationError(f"horizon must be positive, got {horizon}")


@dataclass(frozen=True)
class ChainParams:
    """Parameters of the random directed chain game.

    Attributes
    ----------
    epsilon : float
        Running-cost weight on the distance to the right neighbour.
    c : float
        Terminal-cost weight.
    p : float
        Probability that the link to the right neighbour is present.
    sigma : float
        Diffusion coefficient.
    horizon : float
        Terminal time ``T``.
    """

    epsilon: float = 1.0
    c: float = 0.0
    p: float = 1.0
    sigma: float = 1.0
    horizon: float = 1.0

    def __post_init__(self):
        _check_common(self.epsilon, self.c, self.sigma, self.horizon)
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class TwoSidedParams:
    """Parameters of the random two-sided chain game.

    A player looks right with weight ``p`` and left with weight ``1 - p``.
    The right link is present with probability ``p1`` and the left one with
    probability ``q1``.
    """

    epsilon: float = 1.0
    c: float = 0.0
    p: float = 0.5
    p1: float = 1.0
    q1: float = 1.0
    sigma: float = 1.0
    horizon: float = 1.0

    def __post_init__(self):
        _check_common(self.epsilon, self.c, self.sigma, self.horizon)
        if not 0.0 < self.p < 1.0:
            raise ValidationError(f"p must lie in (0, 1), got {self.p}")
        for name in ("p1", "q1"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValidationError(f"{name} must lie in [0, 1], got {val}")
        if not self.B > 0:
            raise ValidationError("p*p1 + (1-p)*q1 must be positive")

    @property
    def B(self):
        """Total link weight ``p*p1 + (1-p)*q1``."""
        return self.p * self.p1 + (1.0 - self.p) * self.q1

    @property
    def w(self):
        """Normalized right weight."""
        return self.p * self.p1 / self.B

    @property
    def v(self):
        """Normalized left weight."""
        return (1.0 - self.p) * self.q1 / self.B


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RiccatiSolution:
    """Coefficient functions ``phi_t^k`` on a time grid.

    ``values[r, n]`` is the coefficient with index ``indices[r]`` at time
    ``grid[n]``.
    """

    model: str
    params: object
    grid: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    truncation: int
    residual: float = 0.0
    error_estimate: float = 0.0
    substeps: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "grid", _frozen(self.grid))
        object.__setattr__(self, "values", _frozen(self.values))
        idx = np.array(self.indices, dtype=int)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def coefficient(self, k):
        """Time series of the coefficient with index ``k``."""
        pos = k - int(self.indices[0])
        if not 0 <= pos < len(self.indices):
            raise IndexError(f"index {k} outside stored range")
        return self.values[pos]

    def at(self, t):
        """Coefficient vector at time ``t`` by linear interpolation."""
        grid = self.grid
        if not grid[0] - 1e-12 <= t <= grid[-1] + 1e-12:
            raise DomainError(f"t={t} outside [{grid[0]}, {grid[-1]}]")
        n = int(np.clip(np.searchsorted(grid, t, side="right") - 1,
                        0, len(grid) - 2))
        lam = (t - grid[n]) / (grid[n + 1] - grid[n])
        return (1.0 - lam) * self.values[:, n] + lam * self.values[:, n + 1]

    def series(self, z, n=None):
        """Truncated generating function ``sum_k z^k phi^k`` at grid index n.

        With ``n=None`` returns the whole time series.
        """
        z = complex(z)
        powers = np.array([z ** int(k) for k in self.indices])
        vals = self.values if n is None else self.values[:, n]
        return powers @ vals

    def sum_law(self):
        """Largest ``|sum_k phi_t^k|`` over the grid."""
        return float(np.max(np.abs(self.values.sum(axis=0))))


def _time_grid(horizon, steps):
    if steps < 2:
        raise ValidationError(f"steps must be at least 2, got {steps}")
    return np.linspace(0.0, horizon, steps + 1)


def chain_rhs(p, epsilon, K):
    """Right-hand side of the truncated one-sided system (time derivative)."""
    src = p * epsilon

    def rhs(phi):
        out = np.convolve(phi, phi)[:K + 1]
        out[0] -= src
        out[1] += src
        return out

    return rhs


def solve_chain_riccati(params, K, steps, tol=1e-10):
    """Solve the one-sided chain Riccati system on ``[0, T]``.

    Parameters
    ----------
    params : ChainParams
    K : int
        Largest coefficient index kept; convolutions are cut at ``K``.
    steps : int
        Number of grid intervals.
    tol : float
        Step-doubling error tolerance per component.

    Returns
    -------
    RiccatiSolution
        Indices ``0..K``.
    """
    if K < 2:
        raise ValidationError(f"K must be at least 2, got {K}")
    grid = _time_grid(params.horizon, steps)
    if params.p == 0.0:
        return RiccatiSolution("chain", params, grid, np.arange(K + 1),
                               np.zeros((K + 1, len(grid))), K)
    terminal = np.zeros(K + 1)
    terminal[0] = params.p * params.c
    terminal[1] = -params.p * params.c
    values, err, sub = integrate_backward(
        chain_rhs(params.p, params.epsilon, K), terminal, grid, tol=tol)
    values[:, -1] = terminal
    return RiccatiSolution("chain", params, grid, np.arange(K + 1), values, K,
                           residual=0.0, error_estimate=err, substeps=sub)


def twosided_rhs(params, K):
    """Right-hand side of the truncated two-sided system on ``-K..K``."""
    eps = params.epsilon
    right = eps * params.p * params.p1
    left = eps * (1.0 - params.p) * params.q1
    centre = eps * params.B

    def rhs(phi):
        out = np.convolve(phi, phi)[K:3 * K + 1]
        out[K] -= centre
        out[K + 1] += right
        out[K - 1] += left
        return out

    return rhs


def solve_twosided_riccati(params, K, steps, tol=1e-10):
    """Solve the reduced two-sided Riccati system on ``[0, T]``.

    Returns a :class:`RiccatiSolution` with indices ``-K..K``.
    """
    if K < 2:
        raise ValidationError(f"K must be at least 2, got {K}")
    grid = _time_grid(params.horizon, steps)
    c = params.c
    terminal = np.zeros(2 * K + 1)
    terminal[K] = c * params.B
    terminal[K + 1] = -c * params.p * params.p1
    terminal[K - 1] = -c * (1.0 - params.p) * params.q1
    values, err, sub = integrate_backward(
        twosided_rhs(params, K), terminal, grid, tol=tol)
    values[:, -1] = terminal
    return RiccatiSolution("twosided", params, grid, np.arange(-K, K + 1),
                           values, K, residual=0.0, error_estimate=err,
                           substeps=sub)


def _riccati_closed_form(b, q, tau):
    """``b * tanh(b*tau + artanh(q/b))`` written without overflow.

    ``b`` is the principal square root, so ``Re b >= 0`` and the factor
    ``exp(-2*b*tau)`` stays bounded.
    """
    if b == 0:
        return q / (1.0 + q * tau)
    decay = np.exp(-2.0 * b * tau)
    den = (b + q) + (b - q) * decay
    if abs(den) == 0.0:
        raise DomainError("closed form has a pole at this argument")
    return b * ((b + q) - (b - q) * decay) / den


def _check_time(t, horizon):
    if not 0.0 <= t <= horizon:
        raise DomainError(f"t={t} outside [0, {horizon}]")


def eval_generating_function_chain(params, z, t):
    """Closed-form ``S_t(z) = sum_k phi_t^k z^k`` for the one-sided chain.

    ``S`` solves ``dS/dt = S^2 - p*eps*(1-z)`` with ``S_T = p*c*(1-z)``.
    """
    _check_time(t, params.horizon)
    z = complex(z)
    if z == 1:
        return 0j
    if abs(z) > 1:
        raise DomainError(f"|z| must not exceed 1, got {abs(z)}")
    one_minus_z = 1.0 - z
    b = np.sqrt(params.p * params.epsilon * one_minus_z)
    q = params.p * params.c * one_minus_z
    return complex(_riccati_closed_form(b, q, params.horizon - t))


def symbol_twosided(params, z):
    """``T(z) = (1 - 1/z)(1-p)q1 + (1 - z)p*p1``."""
    z = complex(z)
    return ((1.0 - 1.0 / z) * (1.0 - params.p) * params.q1
            + (1.0 - z) * params.p * params.p1)


def eval_generating_function_twosided(params, z, t):
    """Closed-form ``S_t(z) = sum_j phi_t^j z^j`` for the two-sided chain."""
    _check_time(t, params.horizon)
    z = complex(z)
    if z == 0:
        raise DomainError("z=0 is a singular point of the two-sided symbol")
    tz = symbol_twosided(params, z)
    if z == 1 or tz == 0:
        return 0j
    b = np.sqrt(params.epsilon * tz)
    q = params.c * tz
    return complex(_riccati_closed_form(b, q, params.horizon - t))
