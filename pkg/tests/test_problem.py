import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from asabcp.problem import (
    BoxBounds,
    CountingEvaluator,
    DimensionError,
    EvalCounters,
    ObjectiveModel,
    ProblemInstance,
    hessvec_fd,
    project,
)

from conftest import quadratic_instance


class TestBoxBounds:
    def test_equal_bounds_rejected(self):
        with pytest.raises(ValueError):
            BoxBounds([0.0, 1.0], [0.0, 2.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            BoxBounds([], [])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            BoxBounds([0.0], [1.0, 2.0])

    def test_infinite_allowed(self):
        b = BoxBounds([-np.inf, 0.0], [np.inf, np.inf])
        assert b.n == 2

    def test_instance_dimension_checked(self):
        model = ObjectiveModel(lambda x: 0.0, lambda x: x, 3)
        with pytest.raises(DimensionError):
            ProblemInstance(model, BoxBounds([0, 0], [1, 1]), "bad")


class TestProject:
    def test_clamps(self):
        b = BoxBounds([0, 0], [2, 2])
        np.testing.assert_array_equal(project([3, -1], b), [2, 0])

    def test_interior_fixed(self):
        b = BoxBounds([0, 0], [2, 2])
        np.testing.assert_array_equal(project([1, 1], b), [1, 1])

    def test_one_sided(self):
        b = BoxBounds([0], [np.inf])
        np.testing.assert_array_equal(project([0.5], b), [0.5])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            project([1.0, 2.0, 3.0], BoxBounds([0, 0], [1, 1]))

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, 5, elements=st.floats(-1e6, 1e6)))
    def test_idempotent_and_feasible(self, x):
        b = BoxBounds([-1, 0, -np.inf, 2, -3], [1, np.inf, 0, 5, -2])
        p = project(x, b)
        assert b.contains(p)
        assert np.array_equal(project(p, b), p)

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, 3, elements=st.floats(-3, 3)))
    def test_fixed_iff_feasible(self, x):
        b = BoxBounds([-1, -1, -1], [1, 1, 1])
        assert np.array_equal(project(x, b), x) == b.contains(x)


class TestHessvecFD:
    def test_scalar_quadratic(self):
        model = ObjectiveModel(lambda x: 0.5 * x[0] ** 2, lambda x: x.copy(), 1)
        hv = hessvec_fd(model, np.array([1.0]), np.array([1.0]))
        assert hv[0] == pytest.approx(1.0, abs=1e-6)

    def test_diag_quadratic(self):
        model = ObjectiveModel(
            lambda x: 0.5 * (2 * x[0] ** 2 + 4 * x[1] ** 2),
            lambda x: np.array([2 * x[0], 4 * x[1]]),
            2,
        )
        hv = hessvec_fd(model, np.array([0.3, -0.7]), np.array([1.0, 0.0]))
        np.testing.assert_allclose(hv, [2.0, 0.0], atol=1e-6)

    def test_zero_direction(self):
        model = ObjectiveModel(lambda x: 0.0, lambda x: x, 1)
        with pytest.raises(ValueError):
            hessvec_fd(model, np.array([1.0]), np.array([0.0]))

    def test_counts(self):
        model = ObjectiveModel(lambda x: 0.0, lambda x: x.copy(), 2)
        c = EvalCounters()
        hessvec_fd(model, np.zeros(2), np.ones(2), c)
        assert (c.n_g, c.n_hv) == (2, 1)
        hessvec_fd(model, np.zeros(2), np.ones(2), c, g_x=np.zeros(2))
        assert (c.n_g, c.n_hv) == (3, 2)

    def test_agrees_with_exact(self, rng):
        n = 6
        A = rng.standard_normal((n, n))
        Q = A @ A.T + np.eye(n)
        inst = quadratic_instance(Q, rng.standard_normal(n), -np.ones(n), np.ones(n))
        for _ in range(20):
            x = rng.uniform(-1, 1, n)
            v = rng.standard_normal(n)
            exact = inst.model.hessvec(x, v)
            fd = hessvec_fd(inst.model, x, v)
            np.testing.assert_allclose(fd, exact, rtol=1e-5, atol=1e-5 * np.max(np.abs(exact)))


def test_counting_evaluator_falls_back_to_fd():
    model = ObjectiveModel(lambda x: float(x @ x), lambda x: 2 * x, 2)
    ev = CountingEvaluator(model)
    hv = ev.hessvec(np.ones(2), np.array([1.0, 0.0]))
    np.testing.assert_allclose(hv, [2.0, 0.0], atol=1e-6)
    assert ev.counters.n_hv == 1 and ev.counters.n_g == 2
