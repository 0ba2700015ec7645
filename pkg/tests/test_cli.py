import json
import subprocess
import sys

import numpy as np
import pytest

from asabcp.bench import MetricsRow, MetricsTable, read_profiles_csv
from asabcp.cli import main
from asabcp.driver import SolveReport, read_trace_csv
from asabcp.problems import QpData, generate_random_qp, write_qp


def test_solve_builtin(capsys):
    assert main(["solve", "--problem", "sphere-shifted", "--n", "10"]) == 0
    out = capsys.readouterr().out
    for key in ("status=converged", "f_final=", "stationarity=", "iters=", "n_f="):
        assert key in out


def test_solve_missing_file(capsys):
    assert main(["solve", "--qp-file", "missing.qp"]) == 1
    assert "missing.qp" in capsys.readouterr().err


def test_solve_outputs(tmp_path):
    js, tr = tmp_path / "r.json", tmp_path / "t.csv"
    code = main(["solve", "--problem", "rosenbrock", "--n", "4", "--json", str(js), "--trace", str(tr)])
    assert code == 0
    rep = SolveReport.from_json(js.read_text())
    assert rep.status.value == "converged"
    np.testing.assert_allclose(rep.x_final, np.ones(4), atol=1e-4)
    assert len(read_trace_csv(tr)) == rep.iterations
    assert tr.read_text().splitlines()[0] == \
        "iter,f,f_R,stationarity,n_lower,n_upper,n_nonactive,alpha,cg_iters,channel"
    assert json.loads(js.read_text())["status"] == "converged"


def test_solve_qp_file(tmp_path):
    p = generate_random_qp(8, 3, 1e2)
    path = tmp_path / "a.qp"
    write_qp(p.meta["qp"], path)
    assert main(["solve", "--qp-file", str(path)]) == 0


def test_solve_bad_qp_file(tmp_path, capsys):
    path = tmp_path / "bad.qp"
    path.write_text("n 2\nQ 0 0 1\nQ 9 0 1\n")
    assert main(["solve", "--qp-file", str(path)]) == 1
    assert "line" in capsys.readouterr().err


def test_non_convergence_exit():
    assert main(["solve", "--problem", "qp-random", "--n", "50", "--cond", "1e4", "--max-iters", "2"]) == 2


def test_usage_errors(capsys):
    assert main(["solve", "--problem", "sphere-shifted", "--bogus"]) == 1
    assert "--bogus" in capsys.readouterr().err
    assert main(["solve", "--problem", "nope"]) == 1
    assert "nope" in capsys.readouterr().err
    assert main(["solve", "--problem", "sphere-shifted", "--qp-file", "x.qp"]) == 1
    assert main([]) == 1


def test_help_defaults(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--help"])
    assert exc.value.code == 0
    out = " ".join(capsys.readouterr().out.split())
    assert "default: 1e-05" in out and "default: 20" in out and "default: 99" in out


def test_profile_two_by_two(tmp_path):
    rows = [MetricsRow("p1", "A", "converged", 0.1, 1, 1, 0, 0.0, 0.0),
            MetricsRow("p1", "B", "converged", 0.1, 2, 2, 0, 0.0, 0.0),
            MetricsRow("p2", "A", "converged", 0.1, 2, 2, 0, 0.0, 0.0),
            MetricsRow("p2", "B", "converged", 0.1, 1, 1, 0, 0.0, 0.0)]
    m, p = tmp_path / "m.csv", tmp_path / "p.csv"
    MetricsTable(rows).to_csv(m)
    assert main(["profile", "--metrics", str(m), "--metric", "fevals", "--out", str(p)]) == 0
    for c in read_profiles_csv(p):
        assert c.rho(1.0) == 0.5 and c.rho(2.0) == 1.0


def test_profile_missing_metrics(tmp_path, capsys):
    assert main(["profile", "--metrics", str(tmp_path / "no.csv"), "--out", str(tmp_path / "p.csv")]) == 1
    assert "no.csv" in capsys.readouterr().err


def test_bench_qp_dir(tmp_path):
    for s in range(2):
        write_qp(generate_random_qp(6, s, 10.0).meta["qp"], tmp_path / f"q{s}.qp")
    out = tmp_path / "m.csv"
    assert main(["bench", "--qp-dir", str(tmp_path), "--solvers", "asa-bcp,pg", "--out", str(out)]) == 0
    t = MetricsTable.from_csv(out)
    assert len(t.rows) == 4 and all(r.converged for r in t.rows)


def test_bench_unknown_solver(tmp_path, capsys):
    assert main(["bench", "--qp-dir", str(tmp_path), "--solvers", "lbfgsb", "--out", "x.csv"]) == 1
    assert "--solvers" in capsys.readouterr().err


def test_list_problems(capsys):
    assert main(["list-problems"]) == 0
    out = capsys.readouterr().out
    for name in ("rosenbrock", "nonconvex-quad", "sphere-shifted", "qp-random"):
        assert name in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "asabcp", "list-problems"], capture_output=True, text=True)
    assert r.returncode == 0 and "qp-random" in r.stdout
