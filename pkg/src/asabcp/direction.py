"""Truncated-Newton directions on the estimated non-active subspace."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .activeset import ActiveSetPartition


class Truncation(str, enum.Enum):
    RESIDUAL_MET = "residual_met"
    MAX_ITERS = "max_iters"
    NEGATIVE_CURVATURE = "negative_curvature"
    ZERO_GRADIENT = "zero_gradient"


@dataclass(frozen=True)
class ForcingSchedule:
    """Relative CG residual target ``eta = min(cap, sqrt(||g_N||))``."""

    cap: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.cap < 1.0:
            raise ValueError("forcing cap must lie in (0, 1)")

    def eta(self, gnorm: float) -> float:
        return min(self.cap, float(np.sqrt(gnorm)))


@dataclass(eq=False)
class DirectionInfo:
    direction: np.ndarray
    cg_iterations: int
    final_residual_norm: float
    fallback_used: bool
    truncation_reason: Truncation
    eta: float
    gnorm: float


def enforce_gradient_related(d_N, g_N, sigma1: float, sigma2: float) -> np.ndarray:
    """Return ``d_N`` if it is a sufficiently steep, bounded descent direction, else ``-g_N``."""
    d_N = np.asarray(d_N, dtype=float)
    g_N = np.asarray(g_N, dtype=float)
    gn2 = float(g_N @ g_N)
    if gn2 == 0.0:
        raise ValueError("reduced gradient is zero")
    if d_N @ g_N <= -sigma1 * gn2 and np.linalg.norm(d_N) <= sigma2 * np.sqrt(gn2):
        return d_N
    return -g_N


def _cg(hv_N, g_N, tol_abs, max_iter):
    """CG on ``H d = -g`` from ``d = 0``; stops on residual, iteration cap or curvature <= 0."""
    d = np.zeros_like(g_N)
    r = g_N.copy()  # residual H d + g
    p = -r
    rr = float(r @ r)
    for it in range(max_iter):
        if np.sqrt(rr) <= tol_abs:
            return d, it, np.sqrt(rr), Truncation.RESIDUAL_MET
        hp = hv_N(p)
        curv = float(p @ hp)
        if curv <= 0.0:
            return d, it, np.sqrt(rr), Truncation.NEGATIVE_CURVATURE
        alpha = rr / curv
        d = d + alpha * p
        r = r + alpha * hp
        rr_new = float(r @ r)
        p = -r + (rr_new / rr) * p
        rr = rr_new
    reason = Truncation.RESIDUAL_MET if np.sqrt(rr) <= tol_abs else Truncation.MAX_ITERS
    return d, max_iter, np.sqrt(rr), reason


def reduced_newton(
    x_tilde,
    g,
    partition: ActiveSetPartition,
    hessvec: Callable[[np.ndarray], np.ndarray],
    schedule: ForcingSchedule = ForcingSchedule(),
    max_cg: int = 100,
    sigma1: float = 1e-9,
    sigma2: float = 1e9,
) -> DirectionInfo:
    """Truncated-Newton step restricted to the non-active variables.

    ``hessvec`` maps a full-length vector ``v`` to ``H(x_tilde) v``. Active
    components of the returned direction are exactly zero.
    """
    g = np.asarray(g, dtype=float)
    free = partition.nonactive
    if not free.any():
        raise ValueError("no non-active variables; no direction to compute")
    g_N = g[free]
    gnorm = float(np.linalg.norm(g_N))
    if gnorm == 0.0:
        raise ValueError("reduced gradient is zero; no direction to compute")
    n = g.size
    buf = np.zeros(n)

    def hv_N(p_N):
        buf[:] = 0.0
        buf[free] = p_N
        return np.asarray(hessvec(buf.copy()), dtype=float)[free]

    eta = schedule.eta(gnorm)
    # no |N| cap: in floating point CG may need a few extra sweeps on ill-conditioned blocks
    limit = max(1, int(max_cg))
    d_N, iters, res, reason = _cg(hv_N, g_N, eta * gnorm, limit)
    fallback = False
    if not np.any(d_N):
        d_N = -g_N
        fallback = True
    safe = enforce_gradient_related(d_N, g_N, sigma1, sigma2)
    if safe is not d_N:
        fallback = True
        d_N = safe
    direction = np.zeros(n)
    direction[free] = d_N
    return DirectionInfo(
        direction=direction,
        cg_iterations=iters,
        final_residual_norm=float(res),
        fallback_used=fallback,
        truncation_reason=reason,
        eta=eta,
        gnorm=gnorm,
    )
