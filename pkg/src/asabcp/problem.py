"""Objective models, box bounds, projection and evaluation counting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

EPS = np.finfo(float).eps


class DimensionError(ValueError):
    """Raised when vector lengths disagree with the problem dimension."""


@dataclass(frozen=True, eq=False)
class BoxBounds:
    """Box ``lower <= x <= upper``; entries may be infinite."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).ravel()
        upper = np.array(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise DimensionError(
                f"lower has {lower.size} entries but upper has {upper.size}"
            )
        if lower.size < 1:
            raise ValueError("bounds must have at least one entry")
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise ValueError("bounds contain NaN")
        if not np.all(lower < upper):
            bad = int(np.flatnonzero(~(lower < upper))[0])
            raise ValueError(
                f"lower[{bad}]={lower[bad]} is not strictly below upper[{bad}]={upper[bad]}"
            )
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lower <= x) and np.all(x <= self.upper))

    def __eq__(self, other):
        if not isinstance(other, BoxBounds):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )


def project(x, bounds: BoxBounds) -> np.ndarray:
    """Componentwise median of ``(lower, x, upper)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (bounds.n,):
        raise DimensionError(f"expected a vector of length {bounds.n}, got shape {x.shape}")
    return np.minimum(np.maximum(x, bounds.lower), bounds.upper)


@dataclass
class ObjectiveModel:
    """Smooth objective given by value and gradient callables.

    ``hessvec(x, v)`` is optional; without it Hessian-vector products fall
    back to forward differences of the gradient.
    """

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    dimension: int
    hessvec: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise ValueError("dimension must be positive")
        self.dimension = int(self.dimension)


@dataclass
class EvalCounters:
    n_f: int = 0
    n_g: int = 0
    n_hv: int = 0
    cg_iters: int = 0

    def as_dict(self) -> dict:
        return {"n_f": self.n_f, "n_g": self.n_g, "n_hv": self.n_hv, "cg_iters": self.cg_iters}


@dataclass(frozen=True, eq=False)
class KnownOptimum:
    x: np.ndarray
    f: float


@dataclass(eq=False)
class ProblemInstance:
    model: ObjectiveModel
    bounds: BoxBounds
    name: str
    x0: Optional[np.ndarray] = None
    known_optimum: Optional[KnownOptimum] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model.dimension != self.bounds.n:
            raise DimensionError(
                f"model dimension {self.model.dimension} != bounds dimension {self.bounds.n}"
            )
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float).copy()
            if self.x0.shape != (self.bounds.n,):
                raise DimensionError("x0 has the wrong length")

    @property
    def n(self) -> int:
        return self.bounds.n

    def start(self) -> np.ndarray:
        """Default starting point: ``x0`` if given, else a box-interior guess."""
        if self.x0 is not None:
            return project(self.x0, self.bounds)
        lo, hi = self.bounds.lower, self.bounds.upper
        mid = np.where(
            np.isfinite(lo) & np.isfinite(hi),
            0.5 * (lo + hi),
            np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0)),
        )
        return project(mid, self.bounds)


def hessvec_fd(model: ObjectiveModel, x, v, counters: Optional[EvalCounters] = None, g_x=None):
    """Forward-difference Hessian-vector product ``(g(x + h v) - g(x)) / h``.

    The step is ``h = sqrt(eps) * (1 + ||x||_inf) / ||v||_inf``. Pass ``g_x``
    to reuse an already computed gradient at ``x``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    vmax = np.max(np.abs(v)) if v.size else 0.0
    if vmax == 0.0:
        raise ValueError("finite-difference Hessian product needs a nonzero direction")
    h = np.sqrt(EPS) * (1.0 + np.max(np.abs(x))) / vmax
    g_plus = np.asarray(model.grad(x + h * v), dtype=float)
    n_grad = 1
    if g_x is None:
        g_x = np.asarray(model.grad(x), dtype=float)
        n_grad += 1
    if counters is not None:
        counters.n_g += n_grad
        counters.n_hv += 1
    return (g_plus - g_x) / h


class CountingEvaluator:
    """Evaluates a model while charging every call to one ``EvalCounters``."""

    def __init__(self, model: ObjectiveModel, counters: Optional[EvalCounters] = None):
        self.model = model
        self.counters = counters if counters is not None else EvalCounters()

    def f(self, x) -> float:
        self.counters.n_f += 1
        return float(self.model.f(x))

    def g(self, x) -> np.ndarray:
        self.counters.n_g += 1
        return np.array(self.model.grad(x), dtype=float)

    def hessvec(self, x, v, g_x=None) -> np.ndarray:
        if self.model.hessvec is not None:
            self.counters.n_hv += 1
            return np.asarray(self.model.hessvec(x, v), dtype=float)
        return hessvec_fd(self.model, x, v, self.counters, g_x=g_x)
