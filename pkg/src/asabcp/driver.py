"""Two-stage active-set solver for bound-constrained minimization."""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .activeset import (
    ActiveSetPartition,
    EpsilonState,
    active_set_step,
    epsilon_safeguard,
    estimate,
    stationarity_measure,
)
from .direction import DirectionInfo, ForcingSchedule, reduced_newton
from .nonmonotone import (
    DivergenceError,
    LineSearchError,
    ReferenceMemory,
    armijo_nonmonotone,
    init_memory,
)
from .problem import BoxBounds, CountingEvaluator, DimensionError, EvalCounters, ProblemInstance, project

TRACE_COLUMNS = (
    "iter", "f", "f_R", "stationarity", "n_lower", "n_upper", "n_nonactive",
    "alpha", "cg_iters", "channel",
)


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    MAX_FEVALS = "max_fevals"
    MAX_TIME = "max_time"
    LINE_SEARCH_FAILURE = "line_search_failure"
    DIVERGED = "diverged"


class Channel(str, enum.Enum):
    """How ``x^{k+1}`` was produced."""

    UNIT_STEP = "unit_step"
    LINE_SEARCH = "line_search"
    BACKTRACK = "backtrack"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class SolverConfig:
    """Solver tunables.

    ``delta0_unit`` / ``delta0_prox`` default to ``max(1, stationarity(x0))``.
    ``Z`` is the watchdog length and ``M`` the reference-value memory.
    """

    eps0: float = 1e-6
    gamma: float = 1e-4
    delta: float = 0.5
    beta: float = 0.5
    delta0_unit: Optional[float] = None
    delta0_prox: Optional[float] = None
    M: int = 99
    Z: int = 20
    sigma1: float = 1e-9
    sigma2: float = 1e9
    forcing_cap: float = 0.5
    max_cg: int = 100
    tol: float = 1e-5
    max_iters: int = 10_000
    max_fevals: int = 1_000_000
    max_time: float = math.inf
    max_backtracks: int = 60
    trace: bool = True

    def __post_init__(self):
        checks = [
            (self.eps0 > 0, "eps0 must be positive"),
            (0 < self.gamma < 0.5, "gamma must lie in (0, 1/2)"),
            (0 < self.delta < 1, "delta must lie in (0, 1)"),
            (0 < self.beta < 1, "beta must lie in (0, 1)"),
            (self.delta0_unit is None or self.delta0_unit >= 0, "delta0_unit must be >= 0"),
            (self.delta0_prox is None or self.delta0_prox >= 0, "delta0_prox must be >= 0"),
            (self.M >= 0, "M must be >= 0"),
            (self.Z >= 1, "Z must be >= 1"),
            (0 < self.sigma1 <= 1 <= self.sigma2, "need 0 < sigma1 <= 1 <= sigma2"),
            (0 < self.forcing_cap < 1, "forcing_cap must lie in (0, 1)"),
            (self.max_cg >= 1, "max_cg must be >= 1"),
            (self.tol >= 0, "tol must be >= 0"),
            (self.max_iters >= 0 and self.max_fevals >= 0, "budgets must be >= 0"),
            (self.max_time > 0, "max_time must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)


@dataclass
class TraceRecord:
    iter: int
    f: float
    f_R: float
    stationarity: float
    n_lower: int
    n_upper: int
    n_nonactive: int
    alpha: float
    cg_iters: int
    channel: str


def _arr_eq(a, b):
    if a is None or b is None:
        return a is b
    return np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)


def _float_eq(a, b):
    return a == b or (math.isnan(a) and math.isnan(b))


@dataclass(eq=False)
class SolveReport:
    x_final: np.ndarray
    f_final: float
    stationarity: float
    status: Status
    counters: EvalCounters
    iterations: int
    trace: list = field(default_factory=list)
    wall_time: float = 0.0
    epsilon: float = math.nan
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED

    def to_dict(self) -> dict:
        return {
            "x_final": [float(v) for v in self.x_final],
            "f_final": float(self.f_final),
            "stationarity": float(self.stationarity),
            "status": self.status.value,
            "counters": self.counters.as_dict(),
            "iterations": int(self.iterations),
            "wall_time": float(self.wall_time),
            "epsilon": float(self.epsilon),
            "message": self.message,
            "trace": [dataclasses.asdict(r) for r in self.trace],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        return cls(
            x_final=np.array(d["x_final"], dtype=float),
            f_final=float(d["f_final"]),
            stationarity=float(d["stationarity"]),
            status=Status(d["status"]),
            counters=EvalCounters(**d["counters"]),
            iterations=int(d["iterations"]),
            trace=[TraceRecord(**r) for r in d.get("trace", [])],
            wall_time=float(d.get("wall_time", 0.0)),
            epsilon=float(d.get("epsilon", math.nan)),
            message=d.get("message", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SolveReport":
        return cls.from_dict(json.loads(text))

    def same_result(self, other: "SolveReport", ignore_time: bool = True) -> bool:
        """Field-wise equality; ``wall_time`` is skipped unless ``ignore_time`` is False."""
        return (
            _arr_eq(self.x_final, other.x_final)
            and _float_eq(self.f_final, other.f_final)
            and _float_eq(self.stationarity, other.stationarity)
            and self.status == other.status
            and self.counters == other.counters
            and self.iterations == other.iterations
            and _float_eq(self.epsilon, other.epsilon)
            and self.message == other.message
            and len(self.trace) == len(other.trace)
            and all(
                all(_float_eq(x, y) if isinstance(x, float) else x == y
                    for x, y in zip(dataclasses.astuple(a), dataclasses.astuple(b)))
                for a, b in zip(self.trace, other.trace)
            )
            and (ignore_time or self.wall_time == other.wall_time)
        )

    def __eq__(self, other):
        if not isinstance(other, SolveReport):
            return NotImplemented
        return self.same_result(other, ignore_time=False)


def write_trace_csv(report: SolveReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in report.trace:
            w.writerow([repr(v) if isinstance(v, float) else v for v in dataclasses.astuple(r)])


def read_trace_csv(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TraceRecord(
                iter=int(row["iter"]), f=float(row["f"]), f_R=float(row["f_R"]),
                stationarity=float(row["stationarity"]), n_lower=int(row["n_lower"]),
                n_upper=int(row["n_upper"]), n_nonactive=int(row["n_nonactive"]),
                alpha=float(row["alpha"]), cg_iters=int(row["cg_iters"]), channel=row["channel"],
            ))
    return out


@dataclass(eq=False)
class DriverState:
    """Mutable per-solve state: current point, Stage-1 point, thresholds, memory."""

    x: np.ndarray
    x_tilde: np.ndarray
    direction: Optional[np.ndarray]
    gradient_tilde: Optional[np.ndarray]
    k: int
    Delta: float
    Delta_tilde: float
    checkpoint: bool
    mem: ReferenceMemory
    eps: EpsilonState


def backtrack_to_checkpoint(state: DriverState, mem: ReferenceMemory) -> DriverState:
    """Restore the stored checkpoint point, direction and iteration index."""
    if mem.checkpoint_point is None:
        raise RuntimeError("no checkpoint stored")
    return dataclasses.replace(
        state,
        x_tilde=mem.checkpoint_point.copy(),
        direction=None if mem.checkpoint_direction is None else mem.checkpoint_direction.copy(),
        gradient_tilde=None if mem.checkpoint_gradient is None else mem.checkpoint_gradient.copy(),
        k=mem.l_j,
    )


def check_termination(x, g, bounds: BoxBounds, config: SolverConfig, iterations: int,
                      counters: EvalCounters, elapsed: float) -> Optional[Status]:
    """Return a terminal status, or None to keep iterating."""
    if stationarity_measure(x, g, bounds) <= config.tol:
        return Status.CONVERGED
    if iterations >= config.max_iters:
        return Status.MAX_ITERS
    if counters.n_f >= config.max_fevals:
        return Status.MAX_FEVALS
    if elapsed >= config.max_time:
        return Status.MAX_TIME
    return None


@dataclass(eq=False)
class IterationInfo:
    """Everything a callback may want to audit about one outer iteration."""

    iteration: int
    k: int
    x: np.ndarray
    x_tilde: np.ndarray
    partition_x: ActiveSetPartition
    partition_tilde: Optional[ActiveSetPartition]
    direction: Optional[DirectionInfo]
    channel: Channel
    alpha: float
    x_new: np.ndarray
    f_new: float
    f_R: float
    epsilon: float
    line_search_start: Optional[np.ndarray] = None
    line_search_direction: Optional[np.ndarray] = None
    line_search_gradient: Optional[np.ndarray] = None


def _finite_below(val, ref):
    return np.isfinite(val) and val < ref


def solve(problem: ProblemInstance, config: SolverConfig = SolverConfig(), x0=None,
          callback: Optional[Callable[[IterationInfo], None]] = None) -> SolveReport:
    """Minimize ``problem`` over its box starting from ``x0`` (projected first)."""
    bounds = problem.bounds
    x0 = problem.start() if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (bounds.n,):
        raise DimensionError(f"x0 must have length {bounds.n}")
    ev = CountingEvaluator(problem.model)
    counters = ev.counters
    schedule = ForcingSchedule(config.forcing_cap)
    t_start = time.perf_counter()

    x = project(x0, bounds)
    gx = ev.g(x)
    fx = ev.f(x)
    trace = []
    if not (np.isfinite(fx) and np.all(np.isfinite(gx))):
        return _report(ev, x, fx, gx, bounds, Status.DIVERGED, 0, trace, t_start, config.eps0,
                       "non-finite objective at the starting point")
    stat0 = stationarity_measure(x, gx, bounds)
    d0 = max(1.0, stat0)
    st = DriverState(
        x=x, x_tilde=x.copy(), direction=None, gradient_tilde=None, k=0,
        Delta=d0 if config.delta0_unit is None else config.delta0_unit,
        Delta_tilde=d0 if config.delta0_prox is None else config.delta0_prox,
        checkpoint=True,
        mem=init_memory(fx, config.M, point=x, gradient=gx),
        eps=EpsilonState(config.eps0),
    )
    fx_known: Optional[float] = fx  # f(x^k) if already evaluated
    iterations = 0
    message = ""

    while True:
        status = check_termination(st.x, gx, bounds, config, iterations, counters,
                                   time.perf_counter() - t_start)
        if status is not None:
            break
        stat = stationarity_measure(st.x, gx, bounds)
        mem = st.mem
        try:
            # Stage 1: fix estimated active variables at their bounds.
            part_x = estimate(st.x, gx, bounds, st.eps)
            xt = active_set_step(st.x, part_x, bounds)
            step_sq = float(np.sum((xt - st.x) ** 2))
            delta_tilde_before = st.Delta_tilde
            do_backtrack = False
            if math.sqrt(step_sq) <= st.Delta_tilde:
                st.Delta_tilde *= config.beta
            else:
                if fx_known is None:
                    fx_known = ev.f(st.x)
                # before the first checkpoint f_R is f(x0) itself; nothing to return to
                if mem.j >= 0 and not _finite_below(fx_known, mem.f_R):
                    do_backtrack = True

            part_t = None
            dinfo = None
            channel = None
            f_new = math.nan
            alpha = math.nan
            x_new = None
            restart = False

            if not do_backtrack:
                st.x_tilde = xt
                gt = gx if step_sq == 0 else ev.g(xt)
                if not np.all(np.isfinite(gt)):
                    raise DivergenceError("non-finite gradient")
                part_t = estimate(xt, gt, bounds, st.eps)
                g_free = gt[part_t.nonactive]
                if part_t.nonactive.any() and np.any(g_free != 0):
                    ft = None
                    if st.checkpoint:
                        ft = ev.f(xt)
                        if step_sq > 0 and (fx_known is not None or not _finite_below(ft, mem.f_R)):
                            if fx_known is None:
                                fx_known = ev.f(st.x)
                            new_eps = epsilon_safeguard(st.eps, fx_known, ft, step_sq)
                            if new_eps is not st.eps:
                                # Stage-1 move did not decrease f enough: redo it with smaller epsilon
                                st.eps = new_eps
                                st.Delta_tilde = delta_tilde_before
                                restart = True
                        if not restart:
                            mem.push(ft, st.k, xt, None, gt)
                            st.checkpoint = False
                    if not restart:
                        dinfo = reduced_newton(xt, gt, part_t, lambda v: ev.hessvec(xt, v, g_x=gt),
                                               schedule, config.max_cg, config.sigma1, config.sigma2)
                        counters.cg_iters += dinfo.cg_iterations
                        d = dinfo.direction
                        if mem.l_j == st.k and mem.checkpoint_direction is None:
                            mem.set_direction(d)
                        st.direction = d
                        st.gradient_tilde = gt
                        if st.k >= mem.l_j + config.Z:
                            if ft is None:
                                ft = ev.f(xt)
                                st.eps = _opportunistic(st.eps, fx_known, ft, step_sq)
                            if not _finite_below(ft, mem.f_R):
                                do_backtrack = True
                            else:
                                mem.push(ft, st.k, xt, d, gt)
                        if not do_backtrack:
                            if np.linalg.norm(d[part_t.nonactive]) <= st.Delta:
                                alpha = 1.0
                                x_new = project(xt + d, bounds)
                                st.Delta *= config.beta
                                channel = Channel.UNIT_STEP
                            else:
                                if st.k != mem.l_j:
                                    if ft is None:
                                        ft = ev.f(xt)
                                        st.eps = _opportunistic(st.eps, fx_known, ft, step_sq)
                                    if not _finite_below(ft, mem.f_R):
                                        do_backtrack = True
                                    else:
                                        mem.push(ft, st.k, xt, d, gt)
                                if not do_backtrack:
                                    ls = armijo_nonmonotone(ev, bounds, xt, d, gt, mem.f_R,
                                                            config.gamma, config.delta, config.max_backtracks)
                                    alpha, x_new, f_new = ls.alpha, ls.x_new, ls.f_new
                                    st.checkpoint = True
                                    channel = Channel.LINE_SEARCH
                                    ls_start, ls_dir, ls_grad = xt, d, gt
                else:
                    alpha = 0.0
                    x_new = xt
                    channel = Channel.DEGENERATE
                    st.direction = np.zeros(bounds.n)

            if restart:
                continue

            if do_backtrack:
                st = backtrack_to_checkpoint(st, mem)
                ls = armijo_nonmonotone(ev, bounds, st.x_tilde, st.direction, st.gradient_tilde,
                                        mem.f_R, config.gamma, config.delta, config.max_backtracks)
                alpha, x_new, f_new = ls.alpha, ls.x_new, ls.f_new
                st.checkpoint = True
                channel = Channel.BACKTRACK
                ls_start, ls_dir, ls_grad = st.x_tilde, st.direction, st.gradient_tilde
                part_t = None
                dinfo = None
        except LineSearchError as exc:
            status, message = Status.LINE_SEARCH_FAILURE, str(exc)
            break
        except DivergenceError as exc:
            status, message = Status.DIVERGED, str(exc)
            break

        if config.trace:
            trace.append(TraceRecord(
                iter=iterations, f=float(f_new), f_R=float(mem.f_R), stationarity=stat,
                n_lower=(part_t or part_x).n_lower, n_upper=(part_t or part_x).n_upper,
                n_nonactive=(part_t or part_x).n_nonactive, alpha=float(alpha),
                cg_iters=0 if dinfo is None else dinfo.cg_iterations, channel=channel.value,
            ))
        if callback is not None:
            in_ls = channel in (Channel.LINE_SEARCH, Channel.BACKTRACK)
            callback(IterationInfo(
                iteration=iterations, k=st.k, x=st.x, x_tilde=st.x_tilde, partition_x=part_x,
                partition_tilde=part_t, direction=dinfo, channel=channel, alpha=float(alpha),
                x_new=x_new, f_new=float(f_new), f_R=float(mem.f_R), epsilon=st.eps.epsilon,
                line_search_start=ls_start if in_ls else None,
                line_search_direction=ls_dir if in_ls else None,
                line_search_gradient=ls_grad if in_ls else None,
            ))

        if channel == Channel.DEGENERATE:
            gx = gt
        else:
            gx = ev.g(x_new)
        if not np.all(np.isfinite(gx)):
            st.x = x_new
            status, message = Status.DIVERGED, "non-finite gradient"
            break
        st.x = x_new
        fx_known = None if math.isnan(f_new) else f_new
        st.k += 1
        iterations += 1

    return _report(ev, st.x, fx_known, gx, bounds, status, iterations, trace, t_start,
                   st.eps.epsilon, message)


def _opportunistic(eps, fx_known, ft, step_sq):
    if fx_known is None or step_sq == 0 or not np.isfinite(ft):
        return eps
    return epsilon_safeguard(eps, fx_known, ft, step_sq)


def _report(ev, x, fx, gx, bounds, status, iterations, trace, t_start, epsilon, message):
    f_final = ev.f(x) if fx is None else fx
    return SolveReport(
        x_final=np.array(x, dtype=float),
        f_final=float(f_final),
        stationarity=stationarity_measure(x, gx, bounds) if np.all(np.isfinite(gx)) else math.inf,
        status=status,
        counters=dataclasses.replace(ev.counters),
        iterations=iterations,
        trace=trace,
        wall_time=time.perf_counter() - t_start,
        epsilon=float(epsilon),
        message=message,
    )
