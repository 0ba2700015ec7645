"""Command-line interface: ``asabcp solve|bench|profile|list-problems``."""

from __future__ import annotations

import argparse
import os
import sys
import warnings

from . import bench, problems
from .driver import SolverConfig, Status, solve, write_trace_csv

EXIT_OK, EXIT_USAGE, EXIT_NOCONV = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="asabcp", description="Two-stage active-set solver for bound-constrained problems.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="solve one problem", formatter_class=fmt)
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", help="registered problem name (see list-problems)")
    src.add_argument("--qp-file", help="QP text file")
    s.add_argument("--n", type=int, default=10, help="dimension for built-in problems")
    s.add_argument("--seed", type=int, default=0, help="seed for generated problems")
    s.add_argument("--cond", type=float, default=None, help="condition number for qp-random")
    s.add_argument("--tol", type=float, default=1e-5, help="sup-norm projected-gradient tolerance")
    s.add_argument("--max-iters", type=int, default=10_000, help="outer iteration budget")
    s.add_argument("--Z", type=int, default=20, help="watchdog length (iterations between objective checks)")
    s.add_argument("--M", type=int, default=99, help="reference-value memory (checkpoints kept)")
    s.add_argument("--json", dest="json_out", default=None, help="write the report as JSON")
    s.add_argument("--trace", default=None, help="write the iteration trace as CSV")

    b = sub.add_parser("bench", help="run solvers over a problem suite", formatter_class=fmt)
    bsrc = b.add_mutually_exclusive_group(required=True)
    bsrc.add_argument("--suite", choices=["default"], help="built-in suite")
    bsrc.add_argument("--qp-dir", help="directory of .qp files")
    b.add_argument("--solvers", default="asa-bcp,pg", help="comma-separated solver names")
    b.add_argument("--tol", type=float, default=1e-5, help="stopping tolerance")
    b.add_argument("--max-iters", type=int, default=10_000, help="iteration budget per run")
    b.add_argument("--out", required=True, help="metrics CSV")

    pr = sub.add_parser("profile", help="performance profiles from a metrics CSV", formatter_class=fmt)
    pr.add_argument("--metrics", required=True, help="metrics CSV written by bench")
    pr.add_argument("--metric", choices=["time", "fevals", "cg-iters"], default="fevals")
    pr.add_argument("--out", required=True, help="profile CSV (solver,tau,rho)")

    sub.add_parser("list-problems", help="print the problem registry")
    return p


def _cmd_solve(a) -> int:
    if a.problem is not None:
        try:
            prob = problems.builtin(a.problem, a.n, seed=a.seed, cond=a.cond)
        except KeyError as exc:
            raise UsageError(f"--problem: {exc.args[0]}") from None
        except ValueError as exc:
            raise UsageError(f"--n/--cond: {exc}") from None
    else:
        if not os.path.isfile(a.qp_file):
            raise UsageError(f"--qp-file: cannot read {a.qp_file!r}")
        try:
            prob = problems.load_qp(a.qp_file)
        except problems.QpFormatError as exc:
            raise UsageError(f"--qp-file {a.qp_file}: {exc}") from None
    try:
        cfg = SolverConfig(tol=a.tol, max_iters=a.max_iters, Z=a.Z, M=a.M)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep = solve(prob, cfg)
    print(f"{prob.name}: status={rep.status.value} f_final={rep.f_final:.10g} "
          f"stationarity={rep.stationarity:.3e} iters={rep.iterations} n_f={rep.counters.n_f}")
    if a.json_out:
        with open(a.json_out, "w") as fh:
            fh.write(rep.to_json())
    if a.trace:
        write_trace_csv(rep, a.trace)
    return EXIT_OK if rep.status == Status.CONVERGED else EXIT_NOCONV


def _cmd_bench(a) -> int:
    names = [s.strip() for s in a.solvers.split(",") if s.strip()]
    unknown = [s for s in names if s not in bench.SOLVERS]
    if not names or unknown:
        raise UsageError(f"--solvers: unknown solver(s) {unknown}; known: {', '.join(bench.SOLVERS)}")
    if a.suite:
        probs = problems.default_suite()
    else:
        if not os.path.isdir(a.qp_dir):
            raise UsageError(f"--qp-dir: not a directory: {a.qp_dir!r}")
        files = sorted(f for f in os.listdir(a.qp_dir) if f.endswith(".qp"))
        if not files:
            raise UsageError(f"--qp-dir: no .qp files in {a.qp_dir!r}")
        try:
            probs = [problems.load_qp(os.path.join(a.qp_dir, f)) for f in files]
        except problems.QpFormatError as exc:
            raise UsageError(f"--qp-dir: {exc}") from None
    table = bench.run_suite(names, probs, tol=a.tol, config=SolverConfig(max_iters=a.max_iters))
    table.to_csv(a.out)
    n_conv = sum(r.converged for r in table.rows)
    print(f"{len(table.rows)} runs, {n_conv} converged, "
          f"{sum(r.excluded for r in table.rows)} excluded -> {a.out}")
    return EXIT_OK


def _cmd_profile(a) -> int:
    if not os.path.isfile(a.metrics):
        raise UsageError(f"--metrics: cannot read {a.metrics!r}")
    try:
        table = bench.MetricsTable.from_csv(a.metrics)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"--metrics: {exc}") from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            curves = bench.performance_profile(table, a.metric)
        except ValueError as exc:
            raise UsageError(f"--metrics: {exc}") from None
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    bench.write_profiles_csv(curves, a.out)
    for c in curves:
        print(f"{c.solver}: rho(1)={c.rho(1.0):.3f} rho(2)={c.rho(2.0):.3f}")
    return EXIT_OK


def _cmd_list(_a) -> int:
    for name, e in sorted(problems.REGISTRY.items()):
        print(f"{name:16s} {e.family:22s} params={','.join(e.params)}  {e.description}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        a = parser.parse_args(argv)
        return {"solve": _cmd_solve, "bench": _cmd_bench, "profile": _cmd_profile,
                "list-problems": _cmd_list}[a.command](a)
    except UsageError as exc:
        print(f"asabcp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
