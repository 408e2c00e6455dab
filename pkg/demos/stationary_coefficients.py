"""Stationary equilibrium coefficients of the one-sided and two-sided chains.

Run with ``python3 demos/stationary_coefficients.py``.
"""

from lqchain import TwoSidedParams, stationary_chain_coeffs, stationary_twosided_coeffs

chain = stationary_chain_coeffs(p=1.0, epsilon=1.0, K=8)
print("one-sided, p=1:", chain.values.round(6).tolist())
print("  convolution residual:", chain.convolution_residual())
# the coefficients sum to zero only in the limit; the window misses ~K^{-1/2}
for K in (16, 256, 4096):
    print(f"  K={K:5d}  |sum phi| = {stationary_chain_coeffs(1.0, 1.0, K).tail_residual():.4f}")

params = TwoSidedParams(p=0.7, p1=0.9, q1=0.6)
two = stationary_twosided_coeffs(params, 4)
print("two-sided, p=0.7:", dict(zip(two.indices.tolist(), two.values.round(6).tolist())))
