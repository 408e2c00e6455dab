"""Transition kernel of the deterministic chain and the resulting variance.

Run with ``python3 demos/kernel_and_variance.py``.
"""

from lqchain import asymptotic_variance_chain, kernel_row, variance_chain

row = kernel_row(1.0, 6)
print("kernel row at t=1:", row.round(6).tolist())
p = 1.0
limit = asymptotic_variance_chain(p)
for t in (1.0, 10.0, 50.0):
    v = variance_chain(t, p)
    print(f"t={t:6.1f}  Var={v:.6f}  limit-Var={limit - v:.2e}")
# the deficit closes like 1/(pi p t), so t = 50 is still 6e-3 short of the limit
print(f"1/(pi p t) at t=50: {1 / (3.141592653589793 * p * 50):.2e}")
