"""Finite-horizon Riccati coefficients relaxing to the stationary ones.

Run with ``python3 demos/riccati_horizon.py``.
"""

import numpy as np

from lqchain import ChainParams, solve_chain_riccati, stationary_chain_coeffs

K = 16
stationary = stationary_chain_coeffs(0.5, 1.0, K).values
for T in (1.0, 5.0, 20.0):
    sol = solve_chain_riccati(ChainParams(p=0.5, c=1.0, horizon=T), K, int(20 * T))
    gap = np.max(np.abs(sol.values[:, 0] - stationary))
    print(f"T={T:5.1f}  phi^0(0)={sol.values[0, 0]:.6f}  max gap to stationary {gap:.2e}")
