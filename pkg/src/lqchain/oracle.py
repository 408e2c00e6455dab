"""Brute-force verifiers.

These routines are written for clarity and share no code with the closed
forms they check. Tests and ``lqchain verify`` pair each closed form with
at least one of them.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import ConvergenceError, DomainError, ResourceError, ValidationError

__all__ = [
    "dense_expm",
    "CauchyResult",
    "cauchy_coeffs",
    "laurent_radius",
    "BruteForceTree",
    "brute_force_tree",
    "finite_difference",
    "variance_parseval",
]

MAX_DENSE_DIM = 1024
MAX_TREE_NODES = 10_000


def dense_expm(matrix, t=1.0, max_squarings=64):
    """``exp(t * matrix)`` by scaling and squaring a Taylor polynomial.

    The scaled matrix has 1-norm at most 1/2, and the Taylor sum runs until
    the next term is below machine precision relative to the partial sum.
    """
    A = t * np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("dense_expm needs a square matrix")
    n = A.shape[0]
    if n > MAX_DENSE_DIM:
        raise ResourceError(f"dimension {n} exceeds {MAX_DENSE_DIM}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    norm = np.abs(A).sum(axis=0).max() if n else 0.0
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    if s > max_squarings:
        raise ResourceError(f"norm {norm:.3e} needs {s} squarings")
    A = A / 2.0 ** s
    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, 60):
        term = term @ A / k
        result = result + term
        if np.abs(term).max() <= 1e-18 * max(1.0, np.abs(result).max()):
            break
    for _ in range(s):
        result = result @ result
    return result


@dataclass(frozen=True)
class CauchyResult:
    """Laurent coefficients ``c_{-K}..c_K`` extracted on ``|z| = radius``."""

    indices: np.ndarray
    coeffs: np.ndarray
    radius: float
    n_points: int
    achieved: float

    def __getitem__(self, j):
        return self.coeffs[j - int(self.indices[0])]


def _contour_pass(f, K, r, n):
    z = r * np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.asarray(f(z), dtype=complex)
    if vals.shape != z.shape:
        vals = np.broadcast_to(vals, z.shape)
    c = np.fft.fft(vals) / n
    j = np.arange(-K, K + 1)
    return c[j % n] * r ** (-j.astype(float))


def cauchy_coeffs(f, K, r, tol=1e-12, max_points=2 ** 24):
    """Trapezoid-rule contour coefficients of ``f`` on the circle of radius r.

    ``n`` starts at the first power of two at or above ``8K`` and doubles
    until successive coefficient vectors agree to ``tol``.
    """
    if K < 0:
        raise ValidationError("K must be nonnegative")
    if not r > 0:
        raise ValidationError("radius must be positive")
    n = 1 << max(6, int(math.ceil(math.log2(max(8 * K, 1)))))
    prev = _contour_pass(f, K, r, n)
    while True:
        n *= 2
        cur = _contour_pass(f, K, r, n)
        achieved = float(np.max(np.abs(cur - prev)))
        if not np.isfinite(achieved):
            raise DomainError("function is not finite on the contour")
        if achieved <= tol:
            return CauchyResult(np.arange(-K, K + 1), cur, r, n, achieved)
        if n >= max_points:
            raise ConvergenceError(
                f"coefficients stabilized only to {achieved:.2e}",
                achieved=achieved)
        prev = cur


def laurent_radius(w, v, frac=0.9):
    """Contour radius for the Laurent coefficients of ``sqrt(1 - (w z + v/z))``.

    The branch points are ``z = 1`` and ``z = v/w``. Coefficients on the
    slow side are divided by ``r^j``, which amplifies FFT roundoff unless
    ``r`` sits near 1, so the radius lies a fraction ``frac`` of the way
    from the inner branch point to 1 (mirrored when ``v > w``).
    """
    if w == v:
        return 1.0
    rho = min(w, v) / max(w, v)
    r = rho + frac * (1.0 - rho)
    return r if w > v else 1.0 / r


@dataclass(frozen=True)
class BruteForceTree:
    """Per-pair coefficients ``phi^{a;b}`` on an explicit finite tree.

    ``pairs[r] = (g_a, k_a, g_b, k_b)``: node ``k_a`` of generation ``g_a``
    and its descendant ``k_b`` of generation ``g_b``.
    """

    M: int
    generations: int
    grid: np.ndarray
    pairs: np.ndarray
    values: np.ndarray

    def depths(self):
        return self.pairs[:, 2] - self.pairs[:, 0]

    def by_depth(self, m):
        """All pair trajectories at depth ``m``, shape (count, n_grid)."""
        return self.values[self.depths() == m]


def _tree_pairs(M, G):
    pairs = []
    for ga in range(G):
        for ka in range(M ** ga):
            for gb in range(ga, G):
                d = gb - ga
                for r in range(M ** d):
                    pairs.append((ga, ka, gb, ka * M ** d + r))
    return pairs


def brute_force_tree(params, generations, steps, rtol=1e-12, atol=1e-14):
    """Integrate the unreduced tree Riccati system with DOP853.

    For an ancestor ``a`` of ``b`` (or ``a = b``),
    ``d/dt phi^{a;b} = sum_c phi^{a;c} phi^{c;b}`` over the nodes ``c`` on
    the path from ``a`` to ``b``, plus ``-eps(1-p0)`` when ``a = b`` and
    ``+eps(1-p0)/M`` when ``b`` is a child of ``a``. The parent of node
    ``l`` in the next generation is ``l // M``.
    """
    M, G = int(params.M), int(generations)
    if G < 1:
        raise ValidationError("need at least one generation")
    n_nodes = sum(M ** g for g in range(G))
    if n_nodes > MAX_TREE_NODES:
        raise ResourceError(f"{n_nodes} nodes exceed {MAX_TREE_NODES}")
    pairs = _tree_pairs(M, G)
    index = {pr: r for r, pr in enumerate(pairs)}

    left, right, target = [], [], []
    for r, (ga, ka, gb, kb) in enumerate(pairs):
        for gc in range(ga, gb + 1):
            kc = kb // M ** (gb - gc)
            left.append(index[(ga, ka, gc, kc)])
            right.append(index[(gc, kc, gb, kb)])
            target.append(r)
    left, right, target = map(np.asarray, (left, right, target))

    mass = 1.0 - params.p0
    depth = np.array([gb - ga for ga, _, gb, _ in pairs])
    source = np.where(depth == 0, -params.epsilon * mass, 0.0)
    source += np.where(depth == 1, params.epsilon * mass / M, 0.0)
    terminal = np.where(depth == 0, params.c * mass, 0.0)
    terminal += np.where(depth == 1, -params.c * mass / M, 0.0)

    def rhs(_, y):
        return np.bincount(target, weights=y[left] * y[right],
                           minlength=len(pairs)) + source

    T = params.horizon
    grid = np.linspace(0.0, T, steps + 1)
    sol = solve_ivp(rhs, (T, 0.0), terminal, method="DOP853",
                    t_eval=grid[::-1], rtol=rtol, atol=atol)
    if not sol.success:
        raise ConvergenceError(f"brute-force integration failed: {sol.message}")
    values = sol.y[:, ::-1].copy()
    values[:, -1] = terminal
    return BruteForceTree(M, G, grid, np.array(pairs), values)


def finite_difference(f, x, hs=(1e-3, 5e-4, 2.5e-4)):
    """Central differences at three step sizes with Richardson extrapolation.

    Returns ``(estimate, error_estimate)``. The steps must halve.
    """
    d = []
    for h in hs:
        hi, lo = f(x + h), f(x - h)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise DomainError(f"non-finite evaluation near x={x}")
        d.append((hi - lo) / (2.0 * h))
    r1 = [(4.0 * d[i + 1] - d[i]) / 3.0 for i in range(len(d) - 1)]
    if len(r1) == 1:
        return r1[0], abs(r1[0] - d[-1])
    r2 = (16.0 * r1[1] - r1[0]) / 15.0
    return r2, abs(r2 - r1[1])


def variance_parseval(t, p, sigma=1.0):
    """One-sided chain variance from the Fourier symbol of the generator.

    ``sum_k p_{0k}(s)^2 = (1/2pi) int exp(-2 sqrt(p) s Re sqrt(1 - e^{i th})) dth``
    by Parseval; the ``s``-integral is done in closed form. ``t = inf``
    gives the long-time limit. The substitution ``th = s^2`` removes the
    ``th^{-1/2}`` behaviour at the origin.
    """
    if not t >= 0:
        raise ValidationError("t must be nonnegative")
    if not 0 < p <= 1:
        raise ValidationError("p must lie in (0, 1]")
    if t == 0:
        return 0.0
    u = math.sqrt(p) * t

    def integrand(s):
        if s == 0.0:
            return 0.0
        R = np.sqrt(1.0 - np.exp(1j * s * s)).real
        if math.isinf(u):
            return s / R
        return -math.expm1(-2.0 * u * R) * s / R

    top = math.sqrt(math.pi)
    brk = [] if math.isinf(u) else [x / u for x in (1.0, 10.0, 100.0) if x / u < top]
    val, _ = quad(integrand, 0.0, top, points=brk or None, limit=1000,
                  epsabs=1e-14, epsrel=1e-13)
    return sigma ** 2 * val / (math.pi * math.sqrt(p))
