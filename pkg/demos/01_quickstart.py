"""Solve a small bound-constrained quadratic and check the answer against brute force."""

# %%
import numpy as np

from asabcp import SolverConfig, solve
from asabcp.problems import enumerate_box_qp, generate_random_qp

# A strictly convex QP in 10 variables with a planted solution: about a third
# of the coordinates sit on a bound at the optimum.
p = generate_random_qp(10, seed=0, cond=100.0)
print(p.name, "bounds active at x*:", int(p.meta["lower_active"].sum() + p.meta["upper_active"].sum()))

# %%
rep = solve(p, SolverConfig())
print(f"status={rep.status.value} f={rep.f_final:.10f} stationarity={rep.stationarity:.2e}")
print("iterations:", rep.iterations, "f evals:", rep.counters.n_f, "CG iterations:", rep.counters.cg_iters)

# %%
# Enumerate all 3^n lower/upper/free assignments for the exact optimum.
Q, c = p.meta["qp"].matrix(), p.meta["qp"].c
x_star, f_star = enumerate_box_qp(Q, c, p.bounds.lower, p.bounds.upper)
print(f"f* = {f_star:.10f}   |f - f*| = {abs(rep.f_final - f_star):.1e}")
print("max |x - x*| =", np.max(np.abs(rep.x_final - x_star)))

# %%
# Any smooth objective works: give f, its gradient and (optionally) a Hessian-vector product.
from asabcp import BoxBounds, ObjectiveModel, ProblemInstance

model = ObjectiveModel(
    f=lambda x: float(np.sum((x - 3.0) ** 4) + x @ x),
    grad=lambda x: 4 * (x - 3.0) ** 3 + 2 * x,
    dimension=3,
)  # no hessvec: finite differences of the gradient are used
prob = ProblemInstance(model, BoxBounds([0, 0, 0], [1, 2, 5]), "quartic", x0=np.zeros(3))
r = solve(prob)
print(r.status.value, np.round(r.x_final, 6), "Hessian-vector products:", r.counters.n_hv)
