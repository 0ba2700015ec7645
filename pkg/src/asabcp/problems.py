"""Built-in test problems, seeded QP generators and the QP text format."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .problem import BoxBounds, KnownOptimum, ObjectiveModel, ProblemInstance


class QpFormatError(ValueError):
    """Malformed QP file; the message names the offending line."""

    def __init__(self, lineno, msg):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(eq=False)
class QpData:
    """``f(x) = 0.5 x'Qx + c'x`` over a box; ``Q`` is given by upper-triangle triplets."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    c: np.ndarray
    bounds: BoxBounds

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.vals = np.asarray(self.vals, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.c.shape != (self.n,) or self.bounds.n != self.n:
            raise ValueError("c and bounds must have length n")
        if np.any(self.rows > self.cols):
            raise ValueError("triplets must satisfy i <= j")
        if self.rows.size and (self.rows.min() < 0 or self.cols.max() >= self.n):
            raise ValueError("triplet index out of range")

    def matrix(self) -> np.ndarray:
        Q = np.zeros((self.n, self.n))
        np.add.at(Q, (self.rows, self.cols), self.vals)
        off = self.rows != self.cols
        np.add.at(Q, (self.cols[off], self.rows[off]), self.vals[off])
        return Q

    def __eq__(self, other):
        if not isinstance(other, QpData):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.vals, other.vals)
            and np.array_equal(self.c, other.c)
            and self.bounds == other.bounds
        )

    @classmethod
    def from_matrix(cls, Q, c, bounds: BoxBounds) -> "QpData":
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        r, s = np.triu_indices(n)
        keep = Q[r, s] != 0
        return cls(n, r[keep], s[keep], Q[r, s][keep], c, bounds)


def qp_model(Q, c) -> ObjectiveModel:
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    return ObjectiveModel(
        f=lambda x: float(0.5 * x @ (Q @ x) + c @ x),
        grad=lambda x: Q @ x + c,
        dimension=c.size,
        hessvec=lambda x, v: Q @ v,
    )


def qp_instance(data: QpData, name="qp", **kw) -> ProblemInstance:
    inst = ProblemInstance(qp_model(data.matrix(), data.c), data.bounds, name, **kw)
    inst.meta["qp"] = data
    return inst


# ---------------------------------------------------------------- file format

def _parse_float(tok, lineno):
    low = tok.lower()
    if low in ("inf", "+inf"):
        return math.inf
    if low == "-inf":
        return -math.inf
    try:
        v = float(tok)
    except ValueError:
        raise QpFormatError(lineno, f"not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise QpFormatError(lineno, f"non-finite value {tok!r}")
    return v


def parse_qp(text: str) -> QpData:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if toks:
            lines.append((lineno, toks))
    it = iter(lines)

    def take(key, what):
        try:
            lineno, toks = next(it)
        except StopIteration:
            raise QpFormatError(len(text.splitlines()) + 1, f"missing {what}") from None
        if toks[0] != key:
            raise QpFormatError(lineno, f"expected {what}, found {toks[0]!r}")
        return lineno, toks[1:]

    lineno, rest = take("qp", "header 'qp 1'")
    if rest != ["1"]:
        raise QpFormatError(lineno, "unsupported version (expected 'qp 1')")
    lineno, rest = take("n", "'n <int>'")
    if len(rest) != 1 or not rest[0].isdigit() or int(rest[0]) < 1:
        raise QpFormatError(lineno, "n must be a positive integer")
    n = int(rest[0])
    lineno, rest = take("Q", "'Q <nnz>'")
    if len(rest) != 1 or not rest[0].isdigit():
        raise QpFormatError(lineno, "nnz must be a nonnegative integer")
    nnz = int(rest[0])
    rows, cols, vals, seen = [], [], [], set()
    for _ in range(nnz):
        try:
            lineno, toks = next(it)
        except StopIteration:
            raise QpFormatError(len(text.splitlines()) + 1, "fewer triplets than declared") from None
        if len(toks) != 3:
            raise QpFormatError(lineno, "triplet must be '<i> <j> <val>'")
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError:
            raise QpFormatError(lineno, "triplet indices must be integers") from None
        if not (0 <= i < n and 0 <= j < n):
            raise QpFormatError(lineno, f"index ({i}, {j}) out of range for n={n}")
        if i > j:
            raise QpFormatError(lineno, f"triplet ({i}, {j}) is below the diagonal (need i <= j)")
        if (i, j) in seen:
            raise QpFormatError(lineno, f"duplicate triplet ({i}, {j})")
        seen.add((i, j))
        v = _parse_float(toks[2], lineno)
        rows.append(i)
        cols.append(j)
        vals.append(v)

    vecs = {}
    for key in ("c", "l", "u"):
        lineno, rest = take(key, f"'{key}' vector")
        if len(rest) != n:
            raise QpFormatError(lineno, f"'{key}' needs {n} values, got {len(rest)}")
        vecs[key] = np.array([_parse_float(t, lineno) for t in rest])
        if key == "c" and not np.all(np.isfinite(vecs[key])):
            raise QpFormatError(lineno, "c must be finite")
    extra = next(it, None)
    if extra is not None:
        raise QpFormatError(extra[0], "unexpected trailing content")
    if np.any(vecs["l"] == math.inf) or np.any(vecs["u"] == -math.inf):
        raise QpFormatError(lineno, "lower bounds cannot be +inf nor upper bounds -inf")
    try:
        bounds = BoxBounds(vecs["l"], vecs["u"])
    except ValueError as exc:
        raise QpFormatError(lineno, str(exc)) from None
    return QpData(n, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                  np.array(vals, dtype=float), vecs["c"], bounds)


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def format_qp(data: QpData) -> str:
    out = io.StringIO()
    out.write("qp 1\n")
    out.write(f"n {data.n}\n")
    out.write(f"Q {data.rows.size}\n")
    for i, j, v in zip(data.rows, data.cols, data.vals):
        out.write(f"{int(i)} {int(j)} {_fmt(v)}\n")
    for key, vec in (("c", data.c), ("l", data.bounds.lower), ("u", data.bounds.upper)):
        out.write(key + " " + " ".join(_fmt(v) for v in vec) + "\n")
    return out.getvalue()


def write_qp(data: QpData, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_qp(data))


def load_qp(source, name=None) -> ProblemInstance:
    """Load a QP from a path, a text/byte stream, or raw bytes."""
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with open(source) as fh:
            text = fh.read()
        name = name or os.path.splitext(os.path.basename(os.fspath(source)))[0]
    data = parse_qp(text)
    return qp_instance(data, name=name or "qp")


# ---------------------------------------------------------------- oracles

def enumerate_box_qp(Q, c, lower, upper, tol=1e-9):
    """Global minimizer of a box QP by enumerating lower/upper/free assignments.

    Assignments are grouped by their free set so each group is one
    multi-right-hand-side solve; every KKT point found is a candidate and the
    lowest objective wins. Returns ``(x, f)``.
    """
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = c.size
    best_x, best_f = None, math.inf
    idx = np.arange(n)
    for mask in range(1 << n):
        free = ((mask >> idx) & 1).astype(bool)
        fixed = idx[~free]
        m = fixed.size
        # columns enumerate lower (0) / upper (1) for each fixed index
        choice = ((np.arange(1 << m)[None, :] >> np.arange(m)[:, None]) & 1).astype(bool)
        XB = np.where(choice, upper[fixed, None], lower[fixed, None])
        ok = np.all(np.isfinite(XB), axis=0)
        if not ok.any():
            continue
        XB = XB[:, ok]
        is_up = choice[:, ok]
        X = np.empty((n, XB.shape[1]))
        X[fixed] = XB
        if free.any():
            F = idx[free]
            rhs = -(c[F, None] + Q[np.ix_(F, fixed)] @ XB)
            try:
                X[F] = np.linalg.solve(Q[np.ix_(F, F)], rhs)
            except np.linalg.LinAlgError:
                continue
            feas = np.all((X[F] >= lower[F, None] - tol) & (X[F] <= upper[F, None] + tol), axis=0)
        else:
            feas = np.ones(X.shape[1], dtype=bool)
        G = Q @ X + c[:, None]
        gB = G[fixed]
        sign_ok = np.all(np.where(is_up, gB <= tol, gB >= -tol), axis=0)
        good = feas & sign_ok
        if not good.any():
            continue
        Xg = np.clip(X[:, good], lower[:, None], upper[:, None])
        fv = 0.5 * np.einsum("ik,ij,jk->k", Xg, Q, Xg) + c @ Xg
        kbest = int(np.argmin(fv))
        if fv[kbest] < best_f:
            best_f = float(fv[kbest])
            best_x = Xg[:, kbest].copy()
    if best_x is None:
        raise RuntimeError("no KKT point found")
    return best_x, best_f


def projected_gradient_oracle(Q, c, lower, upper, x0=None, tol=1e-10, max_iter=200_000):
    """Accelerated projected gradient with restarts, run to a tight stationarity tolerance."""
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    L = float(np.linalg.eigvalsh(Q)[-1])
    x = np.clip(np.zeros_like(c) if x0 is None else np.asarray(x0, float), lower, upper)
    y, t = x.copy(), 1.0
    for _ in range(max_iter):
        g = Q @ y + c
        x_new = np.clip(y - g / L, lower, upper)
        if (y - x_new) @ (x_new - x) > 0:
            # momentum points uphill: restart from the last iterate
            y, t = x.copy(), 1.0
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + ((t - 1) / t_new) * (x_new - x)
        x, t = x_new, t_new
        gx = Q @ x + c
        if np.max(np.abs(x - np.clip(x - gx, lower, upper))) <= tol:
            break
    return x, float(0.5 * x @ Q @ x + c @ x)


# ---------------------------------------------------------------- generators

def _orthogonal(rng, n):
    A = rng.standard_normal((n, n))
    R, T = np.linalg.qr(A)
    return R * np.sign(np.diag(T))


def random_spd(rng, n, cond):
    D = np.logspace(0.0, math.log10(cond), n) if n > 1 else np.array([1.0])
    R = _orthogonal(rng, n)
    Q = R.T @ (D[:, None] * R)
    return 0.5 * (Q + Q.T)


def generate_random_qp(n: int, seed: int = 0, cond: float = 10.0) -> ProblemInstance:
    """Strictly convex box QP whose solution is planted through its KKT conditions.

    About a third of the coordinates sit at a bound at the solution (split
    between lower and upper), each with a multiplier in ``[0.5, 1.5]``, so
    strict complementarity holds.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (cond >= 1 and math.isfinite(cond)):
        raise ValueError("cond must be a finite number >= 1")
    rng = np.random.default_rng([int(seed), n, int(round(math.log10(cond) * 1000))])
    Q = random_spd(rng, n, cond)
    x_star = rng.uniform(-1.0, 1.0, n)
    status = np.zeros(n, dtype=int)  # 0 free, 1 lower, 2 upper
    n_act = int(round(n / 3))
    perm = rng.permutation(n)
    status[perm[: (n_act + 1) // 2]] = 1
    status[perm[(n_act + 1) // 2: n_act]] = 2
    width_a = rng.uniform(0.5, 2.0, n)
    width_b = rng.uniform(0.2, 1.5, n)
    lower = np.where(status == 1, x_star, x_star - np.where(status == 2, width_a, width_b))
    upper = np.where(status == 2, x_star, x_star + np.where(status == 1, width_a, width_b))
    mult = rng.uniform(0.5, 1.5, n)
    g_star = np.where(status == 1, mult, np.where(status == 2, -mult, 0.0))
    c = g_star - Q @ x_star
    bounds = BoxBounds(lower, upper)
    data = QpData.from_matrix(Q, c, bounds)
    # objective from the stored (triplet) matrix so f* is consistent with the model
    Qm = data.matrix()
    f_star = float(0.5 * x_star @ Qm @ x_star + c @ x_star)
    inst = qp_instance(
        data,
        name=f"qp-random-n{n}-s{seed}-c{cond:g}",
        x0=0.5 * (lower + upper),
        known_optimum=KnownOptimum(x_star, f_star),
    )
    inst.meta.update(family="qp_random", n=n, seed=seed, cond=cond,
                     lower_active=status == 1, upper_active=status == 2,
                     lambda_max=float(np.linalg.eigvalsh(Qm)[-1]))
    return inst


def rosenbrock(n: int = 2) -> ProblemInstance:
    """Chained Rosenbrock on ``[-2, 2]^n``; minimizer is all ones."""
    if n < 2:
        raise ValueError("rosenbrock needs n >= 2")

    def f(x):
        return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))

    def grad(x):
        g = np.zeros_like(x)
        t = x[1:] - x[:-1] ** 2
        g[:-1] += -400.0 * x[:-1] * t - 2.0 * (1.0 - x[:-1])
        g[1:] += 200.0 * t
        return g

    def hessvec(x, v):
        diag = np.zeros_like(x)
        diag[:-1] += 1200.0 * x[:-1] ** 2 - 400.0 * x[1:] + 2.0
        diag[1:] += 200.0
        off = -400.0 * x[:-1]
        hv = diag * v
        hv[:-1] += off * v[1:]
        hv[1:] += off * v[:-1]
        return hv

    x0 = np.tile([-1.2, 1.0], (n + 1) // 2)[:n]
    inst = ProblemInstance(
        ObjectiveModel(f, grad, n, hessvec), BoxBounds(-2.0 * np.ones(n), 2.0 * np.ones(n)),
        f"rosenbrock-n{n}", x0=x0, known_optimum=KnownOptimum(np.ones(n), 0.0),
    )
    inst.meta.update(family="rosenbrock", n=n)
    return inst


def nonconvex_quad(n: int, seed: int = 0) -> ProblemInstance:
    """Indefinite quadratic on ``[-1, 1]^n`` (about a quarter of the curvature negative)."""
    rng = np.random.default_rng([int(seed), n, 7])
    D = np.linspace(-1.0, 3.0, n) if n > 1 else np.array([-1.0])
    R = _orthogonal(rng, n)
    Q = R.T @ (D[:, None] * R)
    Q = 0.5 * (Q + Q.T)
    c = rng.uniform(-1.0, 1.0, n)
    bounds = BoxBounds(-np.ones(n), np.ones(n))
    data = QpData.from_matrix(Q, c, bounds)
    inst = qp_instance(data, name=f"nonconvex-quad-n{n}-s{seed}", x0=rng.uniform(-0.5, 0.5, n))
    inst.meta.update(family="nonconvex_quadratic", n=n, seed=seed)
    return inst


def sphere_shifted(n: int, seed: int = 0) -> ProblemInstance:
    """``0.5 ||x - s||^2`` on ``[-1, 1]^n`` with a seeded shift partly outside the box."""
    rng = np.random.default_rng([int(seed), n, 11])
    s = rng.uniform(-2.0, 2.0, n)
    bounds = BoxBounds(-np.ones(n), np.ones(n))
    x_star = np.clip(s, -1.0, 1.0)
    model = ObjectiveModel(
        f=lambda x: float(0.5 * np.sum((x - s) ** 2)),
        grad=lambda x: x - s,
        dimension=n,
        hessvec=lambda x, v: np.array(v, dtype=float),
    )
    f_star = float(0.5 * np.sum((x_star - s) ** 2))
    inst = ProblemInstance(model, bounds, f"sphere-shifted-n{n}-s{seed}", x0=np.zeros(n),
                           known_optimum=KnownOptimum(x_star, f_star))
    inst.meta.update(family="sphere_shifted", n=n, seed=seed, shift=s)
    return inst


@dataclass(frozen=True)
class ProblemRegistryEntry:
    name: str
    family: str
    factory: Callable
    description: str
    params: tuple = field(default=())


REGISTRY = {
    e.name: e
    for e in (
        ProblemRegistryEntry("rosenbrock", "rosenbrock", lambda n, seed=0, cond=None: rosenbrock(n),
                             "chained Rosenbrock on [-2,2]^n, minimizer all ones", ("n",)),
        ProblemRegistryEntry("nonconvex-quad", "nonconvex_quadratic",
                             lambda n, seed=0, cond=None: nonconvex_quad(n, seed),
                             "indefinite quadratic on [-1,1]^n", ("n", "seed")),
        ProblemRegistryEntry("sphere-shifted", "sphere_shifted",
                             lambda n, seed=0, cond=None: sphere_shifted(n, seed),
                             "0.5||x-s||^2 on [-1,1]^n, minimizer clip(s)", ("n", "seed")),
        ProblemRegistryEntry("qp-random", "qp_random",
                             lambda n, seed=0, cond=None: generate_random_qp(n, seed, 10.0 if cond is None else cond),
                             "strictly convex QP with planted solution", ("n", "seed", "cond")),
    )
}


def builtin(name: str, n: int = 2, seed: int = 0, cond=None) -> ProblemInstance:
    try:
        entry = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; registered: {', '.join(sorted(REGISTRY))}") from None
    return entry.factory(n, seed=seed, cond=cond)


def default_suite(sizes=(50, 200)) -> list:
    """Fifteen problems per size: eight convex QPs, three nonconvex, sphere, Rosenbrock."""
    out = []
    for n in sizes:
        out.append(generate_random_qp(n, 0, 1.0))
        for cond in (10.0, 1e2, 1e3, 1e4):
            for seed in (0, 1):
                out.append(generate_random_qp(n, seed, cond))
        for seed in (0, 1, 2):
            out.append(nonconvex_quad(n, seed))
        for seed in (0, 1):
            out.append(sphere_shifted(n, seed))
        out.append(rosenbrock(n))
    return out
