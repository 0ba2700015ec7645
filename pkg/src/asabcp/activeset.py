"""Multiplier functions, active-set estimates and stationarity measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import BoxBounds, DimensionError, project


@dataclass(frozen=True, eq=False)
class MultiplierEstimates:
    lam: np.ndarray
    mu: np.ndarray


@dataclass(frozen=True, eq=False)
class ActiveSetPartition:
    """Boolean masks of the estimated lower-active, upper-active and free indices."""

    lower_active: np.ndarray
    upper_active: np.ndarray
    nonactive: np.ndarray

    @property
    def n_lower(self) -> int:
        return int(np.count_nonzero(self.lower_active))

    @property
    def n_upper(self) -> int:
        return int(np.count_nonzero(self.upper_active))

    @property
    def n_nonactive(self) -> int:
        return int(np.count_nonzero(self.nonactive))

    @property
    def active(self) -> np.ndarray:
        return self.lower_active | self.upper_active

    def __eq__(self, other):
        if not isinstance(other, ActiveSetPartition):
            return NotImplemented
        return (
            np.array_equal(self.lower_active, other.lower_active)
            and np.array_equal(self.upper_active, other.upper_active)
            and np.array_equal(self.nonactive, other.nonactive)
        )

    @classmethod
    def from_indices(cls, n, lower=(), upper=()):
        lo = np.zeros(n, dtype=bool)
        up = np.zeros(n, dtype=bool)
        lo[list(lower)] = True
        up[list(upper)] = True
        if np.any(lo & up):
            raise ValueError("an index cannot be active at both bounds")
        return cls(lo, up, ~(lo | up))


@dataclass(frozen=True)
class EpsilonState:
    epsilon: float = 1e-6
    halvings: int = 0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


def _check(x, g, bounds):
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    if x.shape != (bounds.n,) or g.shape != (bounds.n,):
        raise DimensionError(
            f"x {x.shape} and g {g.shape} must both have length {bounds.n}"
        )
    return x, g


def multipliers(x, g, bounds: BoxBounds) -> MultiplierEstimates:
    """Closed-form multiplier estimates built from ``g`` and the bound distances.

    Infinite bounds use the limit of the weight ratio: an infinite upper bound
    gives ``lam = g, mu = 0``; an infinite lower bound gives ``lam = 0,
    mu = -g``; a free variable splits ``g`` evenly.
    """
    x, g = _check(x, g, bounds)
    lo, up = bounds.lower, bounds.upper
    fin_lo = np.isfinite(lo)
    fin_up = np.isfinite(up)
    both = fin_lo & fin_up
    with np.errstate(invalid="ignore"):
        a = np.where(both, (up - x) ** 2, 0.0)
        b = np.where(both, (lo - x) ** 2, 0.0)
        denom = np.where(both, a + b, 1.0)
        w_lam = np.where(both, a / denom, 0.0)
        w_mu = np.where(both, b / denom, 0.0)
    w_lam = np.where(fin_lo & ~fin_up, 1.0, w_lam)
    w_mu = np.where(~fin_lo & fin_up, 1.0, w_mu)
    neither = ~fin_lo & ~fin_up
    w_lam = np.where(neither, 0.5, w_lam)
    w_mu = np.where(neither, 0.5, w_mu)
    return MultiplierEstimates(lam=w_lam * g, mu=-w_mu * g)


def estimate(x, g, bounds: BoxBounds, eps: EpsilonState) -> ActiveSetPartition:
    """Estimate which variables sit at their lower/upper bound at a solution."""
    x, g = _check(x, g, bounds)
    m = multipliers(x, g, bounds)
    e = eps.epsilon
    lo, up = bounds.lower, bounds.upper
    lower = (lo <= x) & (x <= lo + e * m.lam) & (g > 0)
    upper = (up - e * m.mu <= x) & (x <= up) & (g < 0)
    return ActiveSetPartition(lower, upper, ~(lower | upper))


def active_set_step(x, partition: ActiveSetPartition, bounds: BoxBounds) -> np.ndarray:
    """Move the estimated active variables onto their bounds."""
    xt = np.array(x, dtype=float)
    xt[partition.lower_active] = bounds.lower[partition.lower_active]
    xt[partition.upper_active] = bounds.upper[partition.upper_active]
    return xt


def stationarity_measure(x, g, bounds: BoxBounds) -> float:
    """Sup-norm of the projected-gradient step ``x - P(x - g)``."""
    x, g = _check(x, g, bounds)
    return float(np.max(np.abs(x - project(x - g, bounds))))


def partition_stationarity_check(x, g, partition: ActiveSetPartition, bounds: BoxBounds, tol: float) -> bool:
    """Stationarity test phrased through an active-set partition.

    Each of the three clauses is accepted when it holds to within ``tol``.
    """
    x, g = _check(x, g, bounds)
    lo_i = partition.lower_active
    up_i = partition.upper_active
    free = partition.nonactive
    ok_lower = np.all(np.abs(np.maximum(bounds.lower[lo_i] - x[lo_i], -g[lo_i])) <= tol)
    ok_upper = np.all(np.abs(np.maximum(x[up_i] - bounds.upper[up_i], g[up_i])) <= tol)
    ok_free = np.all(np.abs(g[free]) <= tol)
    return bool(ok_lower and ok_upper and ok_free)


def epsilon_safeguard(eps: EpsilonState, f_x: float, f_xtilde: float, step_norm_sq: float, abs_tol=None) -> EpsilonState:
    """Halve epsilon when the active-set move missed its guaranteed decrease.

    The move from ``x`` to ``x~`` must satisfy
    ``f(x~) - f(x) <= -||x - x~||^2 / (2 epsilon)``; ``abs_tol`` absorbs
    round-off and defaults to ``1e-12 * (1 + |f(x)|)``.
    """
    if step_norm_sq < 0:
        raise ValueError("step_norm_sq must be nonnegative")
    if step_norm_sq == 0:
        return eps
    if abs_tol is None:
        abs_tol = 1e-12 * (1.0 + abs(f_x))
    if f_xtilde - f_x > -step_norm_sq / (2.0 * eps.epsilon) + abs_tol:
        return EpsilonState(eps.epsilon / 2.0, eps.halvings + 1)
    return eps
