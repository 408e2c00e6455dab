"""Random directed tree game: depth-reduced Riccati system and checks.

Each node looks at its ``M`` children, each present with probability ``p``.
After marginalizing the random child set, the equilibrium coefficient
between a node and a descendant depends only on their depth difference
``m``: ``Psi^m``. The path between two nodes on a tree is unique, so the
reduced system is the chain convolution
``dPsi^m/dt = sum_{i<=m} Psi^i Psi^{m-i}`` plus sources at ``m = 0, 1``.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._integrate import integrate_backward
from .errors import ResourceError, TruncationError, ValidationError
from .riccati import _check_common, _frozen, _time_grid

__all__ = [
    "TreeParams",
    "TreeRiccatiSolution",
    "solve_tree_riccati",
    "verify_depth_invariance",
    "deterministic_limit_check",
    "tree_equilibrium_drift",
    "dropped_weight",
    "subset_average_weights",
]


@dataclass(frozen=True)
class TreeParams:
    """Parameters of the random directed tree game.

    ``M`` is the branching number and ``p`` the probability that each child
    link is present.
    """

    M: int = 2
    p: float = 1.0
    epsilon: float = 1.0
    c: float = 0.0
    sigma: float = 1.0
    horizon: float = 1.0

    def __post_init__(self):
        _check_common(self.epsilon, self.c, self.sigma, self.horizon)
        if int(self.M) != self.M or self.M < 1:
            raise ValidationError(f"M must be a positive integer, got {self.M}")
        if not 0.0 < self.p <= 1.0:
            raise ValidationError(f"p must lie in (0, 1], got {self.p}")

    @property
    def p0(self):
        """Probability that no child link is present, ``(1-p)^M``."""
        if self.p == 1.0:
            return 0.0
        return math.exp(self.M * math.log1p(-self.p))


@dataclass(frozen=True)
class TreeRiccatiSolution:
    """Depth-indexed coefficients ``Psi^m_t``; ``values[m, n]`` at ``grid[n]``."""

    params: TreeParams
    grid: np.ndarray
    values: np.ndarray
    depth: int
    error_estimate: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "grid", _frozen(self.grid))
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def indices(self):
        return np.arange(self.depth + 1)

    def at(self, t):
        """Coefficient vector at time ``t`` by linear interpolation."""
        return np.array([np.interp(t, self.grid, row) for row in self.values])

    def depth_sum(self, n=0):
        """Partial sums ``sum_{m<=D} M^m Psi^m`` at grid index ``n``."""
        weights = float(self.params.M) ** np.arange(self.depth + 1)
        return np.cumsum(weights * self.values[:, n])


def _tree_rhs(mass_eps, M, D):
    def rhs(psi):
        out = np.convolve(psi, psi)[:D + 1]
        out[0] -= mass_eps
        out[1] += mass_eps / M
        return out

    return rhs


def solve_tree_riccati(params, D, steps, tol=1e-10):
    """Solve the depth-reduced tree Riccati system on ``[0, T]``.

    Parameters
    ----------
    params : TreeParams
    D : int
        Deepest depth kept.
    steps : int
        Number of grid intervals.
    """
    if D < 1:
        raise ValidationError(f"D must be at least 1, got {D}")
    grid = _time_grid(params.horizon, steps)
    mass = 1.0 - params.p0
    terminal = np.zeros(D + 1)
    terminal[0] = params.c * mass
    terminal[1] = -params.c * mass / params.M
    values, err, _ = integrate_backward(
        _tree_rhs(params.epsilon * mass, params.M, D), terminal, grid, tol=tol)
    values[:, -1] = terminal
    return TreeRiccatiSolution(params, grid, values, D, err)


def verify_depth_invariance(params, generations, D=None, steps=100,
                            max_nodes=4096, return_details=False):
    """Brute-force check that coefficients depend on depth only.

    Integrates every ancestor/descendant pair of a finite tree and returns
    the largest spread among same-depth trajectories. With
    ``return_details`` also returns the largest gap between the brute-force
    trajectories and the reduced solver at each depth.
    """
    from .oracle import brute_force_tree

    G = int(generations)
    n_nodes = sum(params.M ** g for g in range(G))
    if n_nodes > max_nodes:
        raise ResourceError(f"{n_nodes} nodes exceed {max_nodes}")
    bf = brute_force_tree(params, G, steps)
    spread = 0.0
    for m in range(G):
        block = bf.by_depth(m)
        spread = max(spread, float(np.max(block.max(axis=0) - block.min(axis=0))))
    if not return_details:
        return spread
    depth = max(D or 1, G - 1, 1)
    reduced = solve_tree_riccati(params, depth, steps, tol=1e-12)
    gaps = [float(np.max(np.abs(bf.by_depth(m) - reduced.values[m])))
            for m in range(G)]
    return spread, gaps


def _deterministic_tree_rhs(epsilon, M, D):
    def rhs(psi):
        out = np.zeros_like(psi)
        for m in range(D + 1):
            out[m] = sum(psi[i] * psi[m - i] for i in range(m + 1))
        out[0] -= epsilon
        out[1] += epsilon / M
        return out

    return rhs


def deterministic_limit_check(params, D, steps=100):
    """Compare the ``p = 1`` tree solution against the deterministic tree.

    The deterministic system is written out separately and integrated with
    the same fixed-step scheme. Returns the largest absolute gap.
    """
    if params.p != 1.0:
        raise ValidationError("deterministic limit needs p = 1")
    sol = solve_tree_riccati(params, D, steps)
    terminal = np.zeros(D + 1)
    terminal[0] = params.c
    terminal[1] = -params.c / params.M
    det, _, _ = integrate_backward(
        _deterministic_tree_rhs(params.epsilon, params.M, D), terminal, sol.grid)
    det[:, -1] = terminal
    return float(np.max(np.abs(sol.values - det)))


def _descendant_slice(M, k, m):
    return slice(k * M ** m, (k + 1) * M ** m)


def tree_equilibrium_drift(solution, states, node, t=None, n=None):
    """Equilibrium drift ``-sum_m Psi^m sum_{descendants at depth m} X`` at a node.

    Parameters
    ----------
    solution : TreeRiccatiSolution
    states : sequence of arrays
        ``states[g]`` holds the ``M**g`` states of generation ``g``.
    node : (int, int)
        ``(generation, index)``, both 0-based; the root is ``(0, 0)``.
    t, n : float or int, optional
        Time, or grid index, at which to read ``Psi``. Defaults to ``t = 0``.
    """
    M = solution.params.M
    g, k = node
    G = len(states)
    if not (0 <= g < G and 0 <= k < M ** g):
        raise ValidationError(f"node {node} is not in the stored tree")
    for gen, arr in enumerate(states):
        if len(arr) != M ** gen:
            raise ValidationError(f"generation {gen} needs {M ** gen} states")
    needed = G - 1 - g
    if needed > solution.depth:
        raise TruncationError(
            f"solution depth {solution.depth} does not cover the {needed} "
            f"levels below node {node}")
    psi = solution.values[:, n] if n is not None else solution.at(0.0 if t is None else t)
    drift = 0.0
    for m in range(needed + 1):
        drift -= psi[m] * float(np.sum(states[g + m][_descendant_slice(M, k, m)]))
    return drift


def dropped_weight(solution, available, n=None, t=None):
    """``sum_{m > available} M^m |Psi^m|`` over the stored depths."""
    psi = solution.values[:, n] if n is not None else solution.at(0.0 if t is None else t)
    m = np.arange(available + 1, solution.depth + 1)
    return float(np.sum(float(solution.params.M) ** m * np.abs(psi[m])))


def subset_average_weights(M, p):
    """Weight each child receives in the marginalized neighbour average.

    Enumerates every nonempty child subset ``I`` of size ``d``, which occurs
    with probability ``p^d (1-p)^(M-d)``, and adds ``1/d`` to each member.
    Exact when ``p`` is a :class:`fractions.Fraction`.
    """
    one = Fraction(1) if isinstance(p, Fraction) else 1.0
    weights = [0 * one] * M
    for d in range(1, M + 1):
        prob = p ** d * (one - p) ** (M - d)
        for subset in itertools.combinations(range(M), d):
            for j in subset:
                weights[j] += prob / d
    return weights
