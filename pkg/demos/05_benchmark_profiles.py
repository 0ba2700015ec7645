"""Benchmark against projected gradient and build performance profiles."""

# %%
import statistics
import tempfile
import warnings
from pathlib import Path

from asabcp.bench import MetricsTable, performance_profile, run_suite, write_profiles_csv
from asabcp.problems import default_suite

# Small sizes keep this quick; the CLI's `bench --suite default` uses n = 50 and 200.
problems = default_suite(sizes=(20,))
table = run_suite(["asa-bcp", "pg"], problems)
for s in ("asa-bcp", "pg"):
    rows = [r for r in table.rows if r.solver == s]
    print(f"{s:8s} converged {sum(r.converged for r in rows)}/{len(rows)}  "
          f"median f evals {statistics.median(r.n_f for r in rows):g}")
print("excluded (solvers disagree on f):", sorted({r.problem for r in table.rows if r.excluded}))

# %%
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    curves = performance_profile(table, "fevals")
for tau in (1, 2, 4, 8, 16, 64):
    print(f"tau={tau:3d} " + "  ".join(f"{c.solver}={c.rho(tau):.2f}" for c in curves))

# %%
out = Path(tempfile.mkdtemp())
table.to_csv(out / "metrics.csv")
write_profiles_csv(curves, out / "profile.csv")
print(MetricsTable.from_csv(out / "metrics.csv") == table, out)
