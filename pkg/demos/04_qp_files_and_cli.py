"""Writing QPs to the text format and driving the solver from the command line."""

# %%
import json
import subprocess
import sys
import tempfile
from pathlib import Path

from asabcp.problems import format_qp, generate_random_qp, load_qp, write_qp

p = generate_random_qp(4, seed=1, cond=10.0)
print(format_qp(p.meta["qp"]))

# %%
work = Path(tempfile.mkdtemp())
path = work / "small.qp"
write_qp(p.meta["qp"], path)
print("round trip equal:", load_qp(path).meta["qp"] == p.meta["qp"])

# %%
def asabcp(*args):
    r = subprocess.run([sys.executable, "-m", "asabcp", *args], capture_output=True, text=True)
    print("$ asabcp", " ".join(args), f"  (exit {r.returncode})")
    print(r.stdout + r.stderr)
    return r

asabcp("solve", "--qp-file", str(path), "--json", str(work / "r.json"), "--trace", str(work / "t.csv"))
print(json.loads((work / "r.json").read_text())["status"])
print((work / "t.csv").read_text().splitlines()[0])

# %%
asabcp("solve", "--qp-file", str(work / "missing.qp"))       # exit 1, names the path
asabcp("solve", "--problem", "rosenbrock", "--n", "30", "--max-iters", "3")  # exit 2
asabcp("list-problems")
