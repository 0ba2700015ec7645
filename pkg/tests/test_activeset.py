import numpy as np
import pytest

from asabcp.activeset import (
    ActiveSetPartition,
    EpsilonState,
    active_set_step,
    epsilon_safeguard,
    estimate,
    multipliers,
    partition_stationarity_check,
    stationarity_measure,
)
from asabcp.problem import BoxBounds
from asabcp.problems import generate_random_qp

B02 = BoxBounds([0.0], [2.0])


class TestMultipliers:
    def test_closed_form(self):
        # weights (u-x)^2 = 2.25, (l-x)^2 = 0.25 over 2.5
        m = multipliers([0.5], [1.0], B02)
        assert m.lam[0] == pytest.approx(0.9, abs=1e-15)
        assert m.mu[0] == pytest.approx(-0.1, abs=1e-15)

    def test_zero_gradient(self):
        m = multipliers([0.3, 1.7], [0.0, 0.0], BoxBounds([0, 0], [2, 2]))
        assert np.all(m.lam == 0) and np.all(m.mu == 0)

    def test_at_lower_bound(self):
        m = multipliers([0.0], [2.0], B02)
        assert m.lam[0] == 2.0 and m.mu[0] == 0.0

    def test_infinite_bounds(self):
        b = BoxBounds([0.0, -np.inf, -np.inf], [np.inf, 1.0, np.inf])
        g = np.array([3.0, -2.0, 4.0])
        m = multipliers([1.0, 0.0, 5.0], g, b)
        np.testing.assert_array_equal(m.lam, [3.0, 0.0, 2.0])
        np.testing.assert_array_equal(m.mu, [0.0, 2.0, -2.0])

    def test_identity_and_complementarity(self, rng):
        for _ in range(200):
            n = 7
            lo = rng.uniform(-5, 0, n)
            up = lo + rng.uniform(1e-3, 5, n)
            b = BoxBounds(lo, up)
            x = rng.uniform(lo, up)
            x[0], x[1] = lo[0], up[1]
            g = rng.standard_normal(n) * 10.0 ** rng.uniform(-3, 3)
            m = multipliers(x, g, b)
            np.testing.assert_allclose(g - m.lam + m.mu, 0.0, atol=1e-12 * np.max(np.abs(g)))
            assert m.mu[0] == 0.0
            assert m.lam[1] == 0.0


class TestEstimate:
    def test_lower_active(self):
        p = estimate([0.0], [2.0], B02, EpsilonState(0.1))
        assert p.lower_active[0] and not p.nonactive[0]

    def test_nonactive(self):
        p = estimate([1.0], [5.0], B02, EpsilonState(0.1))
        assert p.nonactive[0]

    def test_upper_active(self):
        p = estimate([1.99], [-3.0], B02, EpsilonState(0.1))
        assert p.upper_active[0]

    def test_partition_disjoint_exhaustive(self, rng):
        for trial in range(100):
            n = 100
            lo = rng.uniform(-2, 0, n)
            up = lo + rng.uniform(0.01, 3, n)
            b = BoxBounds(lo, up)
            eps = EpsilonState(10.0 ** rng.uniform(-6, 0))
            x = rng.uniform(lo, up)
            snap = rng.random(n)
            x = np.where(snap < 0.2, lo, np.where(snap > 0.8, up, x))
            g = rng.standard_normal(n)
            p = estimate(x, g, b, eps)
            total = p.lower_active.astype(int) + p.upper_active.astype(int) + p.nonactive.astype(int)
            assert np.all(total == 1)

    def test_infinite_bound_never_active(self):
        b = BoxBounds([-np.inf], [np.inf])
        p = estimate([0.0], [1.0], b, EpsilonState(1e6))
        assert p.nonactive[0]


class TestActiveSetStep:
    def test_lower(self):
        b = BoxBounds([0, 0], [2, 2])
        p = ActiveSetPartition.from_indices(2, lower=[0])
        np.testing.assert_array_equal(active_set_step([0.3, 1.0], p, b), [0.0, 1.0])

    def test_identity(self):
        b = BoxBounds([0, 0], [2, 2])
        p = ActiveSetPartition.from_indices(2)
        np.testing.assert_array_equal(active_set_step([0.3, 1.0], p, b), [0.3, 1.0])

    def test_both(self):
        b = BoxBounds([0, 0], [2, 2])
        p = ActiveSetPartition.from_indices(2, lower=[1], upper=[0])
        np.testing.assert_array_equal(active_set_step([1.99, 0.05], p, b), [2.0, 0.0])


class TestStationarity:
    box = BoxBounds([0, 0], [2, 2])

    def test_stationary_corner(self):
        assert stationarity_measure([0, 1], [1, 0], self.box) == 0.0

    def test_interior(self):
        assert stationarity_measure([1, 1], [0.5, 0], self.box) == 0.5

    def test_zero_gradient(self):
        assert stationarity_measure([1, 1], [0, 0], self.box) == 0.0

    def test_partition_check_stationary(self):
        x, g = np.array([0.0, 1.0]), np.array([1.0, 0.0])
        p = estimate(x, g, self.box, EpsilonState(1e-6))
        assert partition_stationarity_check(x, g, p, self.box, 0.0)

    def test_partition_check_interior_gradient(self):
        x, g = np.array([1.0, 1.0]), np.array([0.5, 0.0])
        p = estimate(x, g, self.box, EpsilonState(1e-6))
        assert p.nonactive[0]
        assert not partition_stationarity_check(x, g, p, self.box, 1e-8)

    def test_lower_clause(self):
        x, g = np.array([0.0]), np.array([2.0])
        p = ActiveSetPartition.from_indices(1, lower=[0])
        assert partition_stationarity_check(x, g, p, B02, 0.0)


class TestEpsilonSafeguard:
    def test_halves(self):
        # bound is -1/(2*0.01) = -50; actual decrease is -1
        e = epsilon_safeguard(EpsilonState(1e-2), 10.0, 9.0, 1.0)
        assert e.epsilon == 5e-3 and e.halvings == 1

    def test_no_move(self):
        e0 = EpsilonState(1e-2)
        assert epsilon_safeguard(e0, 10.0, 11.0, 0.0) is e0

    def test_boundary(self):
        e0 = EpsilonState(0.25)
        # -step^2/(2 eps) = -2 exactly
        assert epsilon_safeguard(e0, 10.0, 8.0, 1.0, abs_tol=0.0) == e0

    def test_negative_step(self):
        with pytest.raises(ValueError):
            epsilon_safeguard(EpsilonState(), 0.0, 0.0, -1.0)


def test_descent_inequality_strictly_convex(rng):
    """Moving estimated-active variables to their bounds decreases f by ||x - x~||^2 / (2 eps)."""
    violations = 0
    moved = 0
    for seed in range(10):
        p = generate_random_qp(10, seed=seed, cond=100.0)
        Q = p.meta["qp"].matrix()
        eps = EpsilonState(1.0 / p.meta["lambda_max"])
        b = p.bounds
        for _ in range(100):
            x = rng.uniform(b.lower, b.upper)
            g = p.model.grad(x)
            part = estimate(x, g, b, eps)
            xt = active_set_step(x, part, b)
            s2 = float(np.sum((x - xt) ** 2))
            moved += s2 > 0
            if p.model.f(xt) - p.model.f(x) > -s2 / (2 * eps.epsilon) + 1e-10:
                violations += 1
    assert violations == 0
    assert moved > 100


def test_identification_near_solution(rng):
    p = generate_random_qp(12, seed=3, cond=10.0)
    x_star = p.known_optimum.x
    eps = EpsilonState(1.0 / p.meta["lambda_max"])
    for _ in range(500):
        dx = rng.standard_normal(12)
        x = np.clip(x_star + 1e-6 * rng.uniform() * dx / np.linalg.norm(dx), p.bounds.lower, p.bounds.upper)
        part = estimate(x, p.model.grad(x), p.bounds, eps)
        np.testing.assert_array_equal(part.lower_active, p.meta["lower_active"])
        np.testing.assert_array_equal(part.upper_active, p.meta["upper_active"])
