"""
Pivot rules and element growth
==============================

The growth factor rho = max |intermediate entry| / max |initial entry|
is the stability proxy that the pivoting rewards are built from.
"""
import numpy as np

from elimq.pivoting import PIVOT_ACTIONS, factorize, reconstruct, solve

# Wilkinson's matrix: partial pivoting doubles the last column every step
n = 8
w = np.eye(n) - np.tril(np.ones((n, n)), -1)
w[:, -1] = 1.0
for a in PIVOT_ACTIONS:
    f = factorize(w, a)
    print(f"{a:4s} rho={f.rho:8.1f} episode return={sum(f.rewards):9.2f}")

# SKIP breaks down on a zero diagonal and falls back to partial pivoting
f = factorize([[0.0, 1.0], [1.0, 0.0]], "SKIP")
print("fallback used:", f.step_log[0].fallback, "reward:", f.rewards[0])

# solve and check against the original matrix
rng = np.random.default_rng(0)
a = rng.standard_normal((6, 6)) + 6 * np.eye(6)
b = rng.standard_normal(6)
f = factorize(a, "RP")
x = solve(f, b)
print("residual", np.abs(a @ x - b).max(), "reconstruction", np.abs(reconstruct(f) - a).max())
