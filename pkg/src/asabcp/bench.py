"""Projected-gradient baseline, suite runner and Dolan-More performance profiles."""

from __future__ import annotations

import csv
import dataclasses
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .activeset import stationarity_measure
from .driver import SolveReport, SolverConfig, Status, TraceRecord, check_termination, solve
from .problem import CountingEvaluator, ProblemInstance, project

METRIC_COLUMNS = {"time": "wall_time", "fevals": "n_f", "cg_iters": "cg_iters", "cg-iters": "cg_iters"}
TABLE_HEADER = ("problem", "solver", "status", "wall_time_s", "n_f", "n_g", "cg_iters",
                "f_final", "stationarity", "excluded")


def projected_gradient_solve(problem: ProblemInstance, config: SolverConfig = SolverConfig(),
                             x0=None) -> SolveReport:
    """Projected gradient with monotone Armijo backtracking along the projection arc.

    Each iteration tries ``t = 1, delta, delta**2, ...`` until
    ``f(P(x - t g)) <= f(x) + gamma * g'(P(x - t g) - x)``.
    Uses the tolerance and budgets of ``config``.
    """
    bounds = problem.bounds
    ev = CountingEvaluator(problem.model)
    t0 = time.perf_counter()
    x = project(problem.start() if x0 is None else np.asarray(x0, dtype=float), bounds)
    fx = ev.f(x)
    g = ev.g(x)
    it = 0
    trace = []
    message = ""
    while True:
        status = check_termination(x, g, bounds, config, it, ev.counters, time.perf_counter() - t0)
        if status is not None:
            break
        stat = stationarity_measure(x, g, bounds)
        t = 1.0
        for _ in range(config.max_backtracks + 1):
            x_new = project(x - t * g, bounds)
            f_new = ev.f(x_new)
            if f_new <= fx + config.gamma * float(g @ (x_new - x)):
                break
            t *= config.delta
        else:
            status, message = Status.LINE_SEARCH_FAILURE, "backtracking budget exhausted"
            break
        if not math.isfinite(f_new):
            status, message = Status.DIVERGED, "non-finite objective"
            break
        x, fx = x_new, f_new
        g = ev.g(x)
        if config.trace:
            trace.append(TraceRecord(it, fx, fx, stat, 0, 0, bounds.n, t, 0, "projected_gradient"))
        it += 1
    return SolveReport(
        x_final=x, f_final=fx, stationarity=stationarity_measure(x, g, bounds), status=status,
        counters=dataclasses.replace(ev.counters), iterations=it, trace=trace,
        wall_time=time.perf_counter() - t0, message=message,
    )


SOLVERS = {
    "asa-bcp": solve,
    "pg": projected_gradient_solve,
}


@dataclass
class MetricsRow:
    problem: str
    solver: str
    status: str
    wall_time: float
    n_f: int
    n_g: int
    cg_iters: int
    f_final: float
    stationarity: float
    excluded: bool = False

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED.value

    def cost(self, metric: str) -> float:
        """Cost for profiling; failed runs cost infinity."""
        if not self.converged:
            return math.inf
        return float(getattr(self, METRIC_COLUMNS[metric]))


@dataclass
class MetricsTable:
    rows: list = field(default_factory=list)

    def problems(self) -> list:
        seen = []
        for r in self.rows:
            if r.problem not in seen:
                seen.append(r.problem)
        return seen

    def solvers(self) -> list:
        seen = []
        for r in self.rows:
            if r.solver not in seen:
                seen.append(r.solver)
        return seen

    def get(self, problem, solver) -> MetricsRow:
        for r in self.rows:
            if r.problem == problem and r.solver == solver:
                return r
        raise KeyError((problem, solver))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TABLE_HEADER)
            for r in self.rows:
                w.writerow([r.problem, r.solver, r.status, repr(r.wall_time), r.n_f, r.n_g,
                            r.cg_iters, repr(r.f_final), repr(r.stationarity), int(r.excluded)])

    @classmethod
    def from_csv(cls, path) -> "MetricsTable":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(TABLE_HEADER) - set(reader.fieldnames or ())
            if missing:
                raise ValueError(f"metrics CSV lacks columns: {', '.join(sorted(missing))}")
            for rec in reader:
                rows.append(MetricsRow(
                    problem=rec["problem"], solver=rec["solver"], status=rec["status"],
                    wall_time=float(rec["wall_time_s"]), n_f=int(rec["n_f"]), n_g=int(rec["n_g"]),
                    cg_iters=int(rec["cg_iters"]), f_final=float(rec["f_final"]),
                    stationarity=float(rec["stationarity"]),
                    excluded=rec["excluded"].strip().lower() in ("1", "true", "yes"),
                ))
        return cls(rows)


def _threads() -> int:
    env = os.environ.get("ASABCP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _row(problem: ProblemInstance, solver_name: str, solver: Callable, config) -> MetricsRow:
    try:
        rep = solver(problem, config)
    except Exception as exc:  # solver failures are recorded, not raised
        return MetricsRow(problem.name, solver_name, f"error: {exc}", math.nan, 0, 0, 0, math.nan, math.nan)
    return MetricsRow(problem.name, solver_name, rep.status.value, rep.wall_time, rep.counters.n_f,
                      rep.counters.n_g, rep.counters.cg_iters, rep.f_final, rep.stationarity)


def flag_exclusions(table: MetricsTable, f_rtol: float = 1e-3, min_time: float = 0.0) -> MetricsTable:
    """Mark problems where converged solvers disagree on ``f_final`` or all runs were quick.

    Disagreement means ``|f_a - f_b| > f_rtol * max(1, |f_a|, |f_b|)``. With
    ``min_time > 0``, problems every solver finished faster than ``min_time``
    seconds are excluded too.
    """
    for p in table.problems():
        rows = [r for r in table.rows if r.problem == p]
        fs = [r.f_final for r in rows if r.converged]
        differ = any(
            abs(a - b) > f_rtol * max(1.0, abs(a), abs(b)) for i, a in enumerate(fs) for b in fs[i + 1:]
        )
        quick = min_time > 0 and all(r.converged and r.wall_time < min_time for r in rows)
        for r in rows:
            r.excluded = differ or quick
    return table


def run_suite(solvers: Sequence, problems: Sequence[ProblemInstance], tol: float = 1e-5,
              config: Optional[SolverConfig] = None, f_rtol: float = 1e-3, min_time: float = 0.0,
              threads: Optional[int] = None) -> MetricsTable:
    """Run every solver on every problem; rows come back in (problem, solver) order.

    ``solvers`` holds registered names or ``(name, callable)`` pairs.
    """
    if not solvers or not problems:
        raise ValueError("need at least one solver and one problem")
    config = dataclasses.replace(config or SolverConfig(), tol=tol, trace=False)
    pairs = []
    for s in solvers:
        if isinstance(s, str):
            if s not in SOLVERS:
                raise KeyError(f"unknown solver {s!r}; known: {', '.join(SOLVERS)}")
            pairs.append((s, SOLVERS[s]))
        else:
            pairs.append(tuple(s))
    jobs = [(p, name, fn) for p in problems for name, fn in pairs]
    n_threads = threads or _threads()
    if n_threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            rows = list(pool.map(lambda job: _row(job[0], job[1], job[2], config), jobs))
    else:
        rows = [_row(p, name, fn, config) for p, name, fn in jobs]
    return flag_exclusions(MetricsTable(rows), f_rtol, min_time)


@dataclass
class ProfileCurve:
    """Right-continuous step function ``rho(tau)`` given by its breakpoints."""

    solver: str
    breakpoints: list
    n_problems: int = 0
    n_dropped: int = 0

    def rho(self, tau: float) -> float:
        val = 0.0
        for t, r in self.breakpoints:
            if t <= tau:
                val = r
            else:
                break
        return val


def performance_profile(table: MetricsTable, metric: str = "fevals") -> list:
    """Dolan-More profiles: ``rho_s(tau) = |{p : cost_ps / min_s cost_ps <= tau}| / |P|``.

    Excluded rows are ignored. Problems no solver converged on are dropped
    (counted in ``n_dropped``). Zero costs are floored at 1 (counts) or
    1e-9 s (time) so ratios stay defined.
    """
    if metric not in METRIC_COLUMNS:
        raise ValueError(f"unknown metric {metric!r}; use time, fevals or cg_iters")
    rows = [r for r in table.rows if not r.excluded]
    if not rows:
        raise ValueError("no rows left after exclusions")
    solvers = []
    for r in rows:
        if r.solver not in solvers:
            solvers.append(r.solver)
    problems = []
    for r in rows:
        if r.problem not in problems:
            problems.append(r.problem)
    floor = 1e-9 if metric == "time" else 1.0
    cost = np.full((len(problems), len(solvers)), np.inf)
    for r in rows:
        c = r.cost(metric)
        cost[problems.index(r.problem), solvers.index(r.solver)] = max(c, floor) if math.isfinite(c) else math.inf
    best = cost.min(axis=1)
    keep = np.isfinite(best)
    n_dropped = int(np.count_nonzero(~keep))
    if n_dropped:
        warnings.warn(f"{n_dropped} problem(s) unsolved by every solver were dropped", stacklevel=2)
    cost, best = cost[keep], best[keep]
    n_p = cost.shape[0]
    if n_p == 0:
        raise ValueError("every problem failed for every solver")
    ratios = cost / best[:, None]
    ratios[cost == best[:, None]] = 1.0
    curves = []
    for s, name in enumerate(solvers):
        r = np.sort(ratios[:, s][np.isfinite(ratios[:, s])])
        taus = np.unique(np.concatenate([[1.0], r]))
        bps = [(float(t), float(np.count_nonzero(r <= t)) / n_p) for t in taus]
        curves.append(ProfileCurve(name, bps, n_p, n_dropped))
    return curves


def write_profiles_csv(curves, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("solver", "tau", "rho"))
        for c in curves:
            for tau, rho in c.breakpoints:
                w.writerow((c.solver, repr(tau), repr(rho)))


def read_profiles_csv(path) -> list:
    curves = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            curves.setdefault(rec["solver"], []).append((float(rec["tau"]), float(rec["rho"])))
    return [ProfileCurve(s, bps) for s, bps in curves.items()]
