"""Named verification suites pairing closed forms with brute-force oracles."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from . import oracle
from .catalan import (bessel_k_half, catalan_generator, kernel_entry, rho,
                      stationary_chain_coeffs, variance_chain)
from .riccati import (ChainParams, TwoSidedParams, eval_generating_function_chain,
                      eval_generating_function_twosided, solve_chain_riccati,
                      solve_twosided_riccati)
from .tree import TreeParams, verify_depth_invariance
from .twosided import stationary_twosided_coeffs, twosided_kernel_row

SUITES = ("convolution", "kernel", "generating-function", "tree-depth", "rho",
          "variance")


@dataclass(frozen=True)
class Check:
    name: str
    achieved: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.achieved <= self.tolerance)

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name}: {self.achieved:.3e} (tol {self.tolerance:.0e})"


def convolution_suite(K=200, **_):
    coeffs = stationary_chain_coeffs(1.0, 1.0, K)
    gen = catalan_generator(1.0, K)
    conv = np.convolve(gen.row, gen.row)[2:K + 1]
    return [
        Check(f"stationary convolution n<={K}", coeffs.convolution_residual(), 1e-12),
        Check(f"generator convolution n<={K}", float(np.max(np.abs(conv))), 1e-12),
    ]


def kernel_suite(t=1.0, dim=60, p=1.0, **_):
    gen = catalan_generator(p, dim - 1)
    dense = oracle.dense_expm(gen.dense(), t)
    entries = np.array([kernel_entry(0, k, t, p) for k in range(dim)])
    checks = [Check(f"chain kernel row t={t} dim={dim}",
                    float(np.max(np.abs(dense[0] - entries))), 1e-8)]
    half = dim // 2
    window = 4 * half
    coeffs = stationary_twosided_coeffs(TwoSidedParams(p=0.3), 2 * window)
    col = -np.asarray(coeffs.values[2 * window::-1])
    row = -np.asarray(coeffs.values[2 * window:])
    dense2 = oracle.dense_expm(toeplitz(col, row), t)
    weights = twosided_kernel_row(t, 0.3, half)
    mid = dense2[window, window - half:window + half + 1]
    checks.append(Check(f"two-sided kernel p=0.3 t={t} |j|<={half}",
                        float(np.max(np.abs(mid - weights))), 1e-8))
    return checks


def generating_function_suite(**_):
    chain = ChainParams(epsilon=1.0, c=1.0, p=0.7, horizon=2.0)
    sol = solve_chain_riccati(chain, 128, 20)
    worst = 0.0
    for z in (0.0, 0.3, 0.6, -0.5):
        for n, t in enumerate(sol.grid):
            worst = max(worst, abs(sol.series(z, n)
                                   - eval_generating_function_chain(chain, z, t)))
    checks = [Check("chain series vs closed form", worst, 1e-6)]
    two = TwoSidedParams(epsilon=1.0, c=1.0, p=0.9, horizon=2.0)
    sol2 = solve_twosided_riccati(two, 128, 20)
    worst = 0.0
    for z in (0.3, 0.6, -0.5):
        for n, t in enumerate(sol2.grid):
            worst = max(worst, abs(sol2.series(z, n)
                                   - eval_generating_function_twosided(two, z, t)))
    checks.append(Check("two-sided series vs closed form", worst, 1e-6))
    checks.append(Check("two-sided sum law K=128", sol2.sum_law(), 1e-8))
    return checks


def tree_depth_suite(M=2, G=3, p=0.5, **_):
    params = TreeParams(M=M, p=p, epsilon=1.0, c=1.0, horizon=1.0)
    spread, gaps = verify_depth_invariance(params, G, return_details=True)
    return [Check(f"same-depth spread M={M} G={G}", spread, 1e-9),
            Check(f"reduced vs brute force M={M} G={G}", max(gaps), 1e-9)]


def rho_suite(**_):
    worst = 0.0
    for nu in (0.5, 1.0, 2.0):
        for j in range(1, 9):
            bessel = (math.sqrt(2 * nu / math.pi) * math.exp(nu)
                      * bessel_k_half(j - 1, nu) / (2 ** j * nu ** j))
            worst = max(worst, abs(rho(j, -nu * nu) - bessel) / bessel)
    checks = [Check("rho vs Bessel j<=8 (relative)", worst, 1e-10)]
    worst = 0.0
    for k in range(0, 11):
        for x in np.linspace(-9.0, -0.25, 8):
            deriv, _ = oracle.finite_difference(lambda y: rho(k, y), float(x))
            lhs = rho(k + 1, x)
            rhs = deriv + rho(k, x) / (2 * math.sqrt(-x))
            worst = max(worst, abs(lhs - rhs) / abs(lhs))
    checks.append(Check("rho recursion k<=10 (relative)", worst, 1e-8))
    return checks


def variance_suite(**_):
    worst = 0.0
    for p in (1.0, 0.5, 0.25):
        for t in (0.1, 1.0, 10.0):
            a = variance_chain(t, p)
            b = oracle.variance_parseval(t, p)
            worst = max(worst, abs(a - b) / b)
    return [Check("variance quadrature vs Parseval (relative)", worst, 1e-6)]


_RUNNERS = {
    "convolution": convolution_suite,
    "kernel": kernel_suite,
    "generating-function": generating_function_suite,
    "tree-depth": tree_depth_suite,
    "rho": rho_suite,
    "variance": variance_suite,
}


def run_suite(name, **options):
    """Run one suite, or every suite for ``name == "all"``."""
    names = SUITES if name == "all" else (name,)
    checks = []
    for n in names:
        checks.extend(_RUNNERS[n](**options))
    return checks
