"""Euler-Maruyama simulation: variance check and a unilateral deviation.

Run with ``python3 demos/monte_carlo.py`` (about ten seconds).
"""

import numpy as np

from lqchain import (ChainParams, SimConfig, exact_variance_crosscheck,
                     nash_deviation_test, solve_chain_riccati)

check = exact_variance_crosscheck(ChainParams(p=1.0), t=1.0, paths=2000, seed=1)
print(f"Var(X_1): analytic {check.analytic:.4f}, simulated "
      f"{check.simulated:.4f} +/- {check.stderr:.4f} (z={check.z:+.2f})")

params = ChainParams(p=1.0, c=1.0, horizon=1.0)
coeffs = solve_chain_riccati(params, 15, 100)
config = SimConfig(n_players=16, paths=1000, seed=2, x0=np.linspace(-1, 1, 16))
for row in nash_deviation_test(config, params, coeffs, player=3, perturbation=1.0,
                               magnitudes=[0.0, 0.25, 0.5]):
    print(f"delta={row.delta:.2f}  cost change {row.mean:+.4f} +/- {row.stderr:.4f}"
          f"  {row.status}")
