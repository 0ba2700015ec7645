"""Reference-value memory and the non-monotone projected Armijo search."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .problem import BoxBounds, CountingEvaluator, project


class DivergenceError(ArithmeticError):
    """A checkpoint objective value was not finite."""


class LineSearchError(RuntimeError):
    """No acceptable step within the backtracking budget."""


@dataclass(eq=False)
class ReferenceMemory:
    """Checkpoint bookkeeping for the non-monotone acceptance test.

    ``window`` holds the last ``min(j, M) + 1`` checkpoint values and
    ``f_R`` is their maximum. Before the first checkpoint the window holds
    only the starting value.
    """

    M: int
    window: deque
    j: int = -1
    l_j: int = -1
    f_R: float = np.inf
    checkpoint_point: Optional[np.ndarray] = None
    checkpoint_direction: Optional[np.ndarray] = None
    checkpoint_gradient: Optional[np.ndarray] = None
    f_R_history: list = field(default_factory=list)

    def push(self, f_val: float, k: int, point, direction=None, gradient=None) -> "ReferenceMemory":
        f_val = float(f_val)
        if not np.isfinite(f_val):
            raise DivergenceError(f"non-finite objective value {f_val} at checkpoint")
        if self.j < 0:
            # the starting value f(x0) is not one of the f^j entries
            self.window.clear()
        self.j += 1
        self.l_j = int(k)
        self.window.append(f_val)
        self.f_R = max(self.window)
        self.f_R_history.append(self.f_R)
        self.checkpoint_point = np.array(point, dtype=float)
        self.checkpoint_direction = None if direction is None else np.array(direction, dtype=float)
        self.checkpoint_gradient = None if gradient is None else np.array(gradient, dtype=float)
        return self

    def set_direction(self, direction) -> None:
        self.checkpoint_direction = np.array(direction, dtype=float)


def init_memory(f0: float, M: int, point=None, gradient=None) -> ReferenceMemory:
    if M < 0:
        raise ValueError("M must be nonnegative")
    mem = ReferenceMemory(M=int(M), window=deque([float(f0)], maxlen=int(M) + 1), f_R=float(f0))
    if point is not None:
        mem.checkpoint_point = np.array(point, dtype=float)
    if gradient is not None:
        mem.checkpoint_gradient = np.array(gradient, dtype=float)
    return mem


def push_checkpoint(mem: ReferenceMemory, f_val, k, point, direction=None, gradient=None) -> ReferenceMemory:
    return mem.push(f_val, k, point, direction, gradient)


@dataclass(eq=False)
class LineSearchResult:
    alpha: float
    x_new: np.ndarray
    f_new: float
    n_backtracks: int


def armijo_nonmonotone(
    evaluator: CountingEvaluator,
    bounds: BoxBounds,
    x_tilde,
    d,
    g,
    f_R: float,
    gamma: float = 1e-4,
    delta: float = 0.5,
    max_backtracks: int = 60,
) -> LineSearchResult:
    """Largest ``alpha = delta**nu`` with ``f(P(x + alpha d)) <= f_R + gamma alpha g'd``."""
    x_tilde = np.asarray(x_tilde, dtype=float)
    d = np.asarray(d, dtype=float)
    slope = float(np.dot(g, d))
    if not slope < 0:
        raise ValueError(f"not a descent direction (g'd = {slope})")
    if not 0 < gamma < 0.5 or not 0 < delta < 1:
        raise ValueError("need gamma in (0, 1/2) and delta in (0, 1)")
    alpha = 1.0
    for nu in range(max_backtracks + 1):
        trial = project(x_tilde + alpha * d, bounds)
        f_trial = evaluator.f(trial)
        if f_trial <= f_R + gamma * alpha * slope:
            return LineSearchResult(alpha, trial, f_trial, nu)
        alpha *= delta
    raise LineSearchError(
        f"no acceptable step after {max_backtracks} backtracks (f_R={f_R}, g'd={slope})"
    )
