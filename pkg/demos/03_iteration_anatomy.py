"""Inside a solve: channels taken, reference value, and the watchdog length Z."""

# %%
from collections import Counter

from asabcp import SolverConfig, solve
from asabcp.problems import rosenbrock

p = rosenbrock(10)
rep = solve(p, SolverConfig())
print(rep.status.value, "iterations:", rep.iterations, "f evals:", rep.counters.n_f)

# Most late iterations accept the unit Newton step without evaluating f at all.
print(Counter(t.channel for t in rep.trace))

# %%
print(f"{'it':>3} {'f':>12} {'f_R':>12} {'stat':>9} {'|Al|':>4} {'|Au|':>4} {'|N|':>4} {'alpha':>7} channel")
for t in rep.trace[:15]:
    print(f"{t.iter:3d} {t.f:12.5g} {t.f_R:12.5g} {t.stationarity:9.2e} {t.n_lower:4d} {t.n_upper:4d} "
          f"{t.n_nonactive:4d} {t.alpha:7.3g} {t.channel}")
# f is nan on iterations where no objective value was needed.

# %%
# The memory M sets how far f may rise above recent checkpoints.
for M in (0, 5, 99):
    r = solve(p, SolverConfig(M=M, trace=False))
    print(f"M={M:3d}: iterations={r.iterations:4d} f evals={r.counters.n_f:4d}")

# %%
# A callback sees every iteration, for example to watch the step direction.
def show(info):
    if info.iteration < 3 and info.direction is not None:
        print(info.iteration, info.channel.value, "CG its", info.direction.cg_iterations,
              "eta", round(info.direction.eta, 4))

solve(p, SolverConfig(trace=False), callback=show)
