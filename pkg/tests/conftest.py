import numpy as np
import pytest

from asabcp.problem import BoxBounds, ObjectiveModel, ProblemInstance


def quadratic_instance(Q, c, lower, upper, name="quad", exact_hv=True):
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    model = ObjectiveModel(
        f=lambda x: float(0.5 * x @ Q @ x + c @ x),
        grad=lambda x: Q @ x + c,
        dimension=c.size,
        hessvec=(lambda x, v: Q @ v) if exact_hv else None,
    )
    return ProblemInstance(model, BoxBounds(lower, upper), name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class Auditor:
    """Solve callback that checks per-iteration invariants and keeps the iterates."""

    def __init__(self, problem, config):
        self.problem = problem
        self.config = config
        self.records = []
        self.failures = []

    def _fail(self, it, msg):
        self.failures.append(f"iter {it}: {msg}")

    def __call__(self, info):
        b = self.problem.bounds
        self.records.append(info)
        it = info.iteration
        for label, pt in (("x", info.x), ("x_tilde", info.x_tilde), ("x_new", info.x_new)):
            if not b.contains(pt):
                self._fail(it, f"{label} infeasible")
        d = info.direction
        if d is not None:
            part = info.partition_tilde
            if np.any(d.direction[part.active] != 0.0):
                self._fail(it, "nonzero active direction component")
            g = self.problem.model.grad(info.x_tilde)
            gN, dN = g[part.nonactive], d.direction[part.nonactive]
            if not dN @ gN <= -self.config.sigma1 * (gN @ gN):
                self._fail(it, "slope condition violated")
            if not np.linalg.norm(dN) <= self.config.sigma2 * np.linalg.norm(gN):
                self._fail(it, "norm condition violated")
        if info.line_search_start is not None:
            slope = info.line_search_gradient @ info.line_search_direction
            if not info.f_new <= info.f_R + self.config.gamma * info.alpha * slope:
                self._fail(it, "accepted step violates the sufficient-decrease test")

    def check_reference(self, report):
        hist = [r.f_R for r in report.trace]
        return all(b <= a for a, b in zip(hist, hist[1:]))


ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
