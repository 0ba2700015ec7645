"""How the multiplier functions pick the variables that get pinned to a bound."""

# %%
import numpy as np

from asabcp import BoxBounds
from asabcp.activeset import (
    EpsilonState,
    active_set_step,
    estimate,
    multipliers,
    partition_stationarity_check,
    stationarity_measure,
)

b = BoxBounds([0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, np.inf])
x = np.array([1e-4, 0.5, 0.9999, 0.2])
g = np.array([2.0, 0.3, -1.0, 0.1])

m = multipliers(x, g, b)
print("lambda:", m.lam)
print("mu:    ", m.mu)

# %%
# With a small epsilon only coordinates essentially on a bound are estimated active.
for eps in (1e-6, 1e-3, 1e-1):
    part = estimate(x, g, b, EpsilonState(eps))
    print(f"eps={eps:g}  lower={np.flatnonzero(part.lower_active)}  upper={np.flatnonzero(part.upper_active)}")

# %%
# Stage 1 of an iteration just moves the estimated active variables onto their bounds.
part = estimate(x, g, b, EpsilonState(1e-3))
x_tilde = active_set_step(x, part, b)
print("x      :", x)
print("x tilde:", x_tilde)

# %%
# The two stationarity tests: the sup-norm projected gradient and the partition-based one.
x_stat = np.array([0.0, 0.5, 1.0, 0.2])
g_stat = np.array([1.0, 0.0, -2.0, 0.0])
part = estimate(x_stat, g_stat, b, EpsilonState())
print("measure:", stationarity_measure(x_stat, g_stat, b),
      "partition check:", partition_stationarity_check(x_stat, g_stat, part, b, 1e-5))
