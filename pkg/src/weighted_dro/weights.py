"""Observation weightings for weighted empirical distributions.

Weights are plain 1-D numpy arrays indexed by time ``t = 1..T`` (position
``T - 1`` holds the most recent observation). The quality of a weighting is
measured by the concentration objective

    N_eff(w) * (eps/rho - D_p(w))_+^(2p)

where ``N_eff`` is the effective sample size and ``D_p`` the normalized
weighted drift (the L_p norm of the look-back index under ``w``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .search import bisect_sign, golden_section

WEIGHT_TOL = 1e-12
GRID_POINTS = 64


def as_weights(w) -> np.ndarray:
    """Validate a weight vector and return it as a float array."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size == 0:
        raise ValueError("weight vector must be nonempty")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    total = math.fsum(w)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(f"weights sum to {total!r}, not 1")
    return w


def lookback(T: int) -> np.ndarray:
    """Look-back index ``T - t + 1`` for ``t = 1..T``, i.e. ``T, ..., 1``."""
    return np.arange(T, 0, -1, dtype=float)


@dataclass(frozen=True)
class TradeoffInstance:
    """History length, Wasserstein order and radius-to-drift ratio."""

    T: int
    p: float
    eps_over_rho: float

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.eps_over_rho > 0:
            raise ValueError(f"eps_over_rho must be positive, got {self.eps_over_rho}")

    @classmethod
    def from_radii(cls, T: int, p: float, eps: float, rho: float) -> "TradeoffInstance":
        return cls(T, p, eps / rho)


def effective_sample_size(w) -> float:
    w = as_weights(w)
    return 1.0 / math.fsum(w * w)


def weighted_drift(w, p: float) -> float:
    w = as_weights(w)
    return math.fsum(w * lookback(w.size) ** p) ** (1.0 / p)


def concentration_objective(w, inst: TradeoffInstance) -> float:
    w = as_weights(w)
    if w.size != inst.T:
        raise ValueError(f"weight vector has length {w.size}, instance has T={inst.T}")
    gap = max(inst.eps_over_rho - weighted_drift(w, inst.p), 0.0)
    return effective_sample_size(w) * gap ** (2 * inst.p)


def window_weights(T: int, s: int) -> np.ndarray:
    """Equal weights on the ``s`` most recent observations."""
    if not 1 <= s <= T:
        raise ValueError(f"window size must lie in [1, {T}], got {s}")
    w = np.zeros(T)
    w[T - s:] = 1.0 / s
    return w


def smoothing_weights(T: int, alpha: float) -> np.ndarray:
    """Geometric decay ``w_{T-k} ~ alpha (1 - alpha)^k``, renormalized.

    ``alpha = 0`` is read as its limit, the uniform weighting.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return np.full(T, 1.0 / T)
    raw = (1.0 - alpha) ** (lookback(T) - 1.0)
    return raw / math.fsum(raw)


def optimal_weights_p1(inst: TradeoffInstance) -> np.ndarray:
    """Closed-form optimal weights for p = 1: affine in recency ("triangular").

    The support has ``s = min(floor(eps/rho), T)`` observations.
    """
    if inst.p != 1:
        raise ValueError("closed form holds for p = 1 only")
    r = inst.eps_over_rho
    if not r > 1:
        raise ValueError(f"closed form needs eps_over_rho > 1, got {r}")
    T = inst.T
    s = min(math.floor(r), T)
    k = np.arange(s, 0, -1, dtype=float)  # look-back of the supported slots, oldest first
    w = np.zeros(T)
    w[T - s:] = 2.0 * (r - k) / (s * (2.0 * r - s - 1.0))
    return w


def triangular_weights(T: int, s: int) -> np.ndarray:
    """The p = 1 optimal weights supported on exactly ``s`` slots (ratio s + 1)."""
    return optimal_weights_p1(TradeoffInstance(T, 1, s + 1.0))


@dataclass(frozen=True)
class WeightSearchResult:
    w: np.ndarray
    objective: float
    support: int
    c1: float
    c2: float
    degenerate: bool = False


class _Support:
    """Objective of the truncated-polynomial family on a fixed support ``S``.

    On support ``S`` the weights ``w_k = c1 - c2 k^p`` (k = look-back) are
    affine in ``c2`` once ``c1`` is fixed by normalization, so both
    ``sum w^2 = 1/S + V c2^2`` and ``D_p^p = M/S - V c2`` are explicit.
    """

    def __init__(self, S: int, T: int, p: float, r: float):
        k = np.arange(1, S + 1, dtype=float)
        kp = k ** p
        self.S, self.p, self.r = S, p, r
        self.M = math.fsum(kp)
        self.V = math.fsum((kp - self.M / S) ** 2)
        self.kp = kp
        self.lo = 0.0 if S == T else 1.0 / (S * (S + 1.0) ** p - self.M)
        self.hi = 1.0 / (S * S ** p - self.M) if S > 1 else 0.0

    def value(self, c2: float) -> float:
        dpp = self.M / self.S - self.V * c2
        gap = self.r - max(dpp, 1.0) ** (1.0 / self.p)
        if gap <= 0:
            return 0.0
        return gap ** (2 * self.p) / (1.0 / self.S + self.V * c2 * c2)

    def values(self, c2: np.ndarray) -> np.ndarray:
        dpp = np.maximum(self.M / self.S - self.V * c2, 1.0)
        gap = np.maximum(self.r - dpp ** (1.0 / self.p), 0.0)
        return gap ** (2 * self.p) / (1.0 / self.S + self.V * c2 * c2)

    def slope(self, c2: float) -> float:
        # sign of d/dc2 log(value), scaled by 1/(2V)
        dpp = max(self.M / self.S - self.V * c2, 1.0)
        gap = self.r - dpp ** (1.0 / self.p)
        return dpp ** (1.0 / self.p - 1.0) / gap - c2 / (1.0 / self.S + self.V * c2 * c2)

    def weights(self, c2: float) -> np.ndarray:
        c1 = (1.0 + c2 * self.M) / self.S
        return np.maximum(c1 - c2 * self.kp, 0.0), c1

    def maximize(self):
        if self.S == 1 or self.hi <= self.lo:
            return self.value(self.lo), self.lo
        grid = self.lo + (self.hi - self.lo) * np.linspace(0.0, 1.0, GRID_POINTS)
        vals = self.values(grid)
        i = int(np.argmax(vals))
        if vals[i] <= 0:
            return 0.0, grid[i]
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
        width = b - a
        found = golden_section(lambda c: -self.value(c), a, b, xtol=1e-12 * width)
        c2, best = found.x, -found.fx
        # derivative polish: the golden bracket is only accurate to ~sqrt(machine eps)
        if a < c2 < b and self.value(a) > 0 and self.value(b) > 0:
            sa, sb = self.slope(a), self.slope(b)
            if sa > 0 > sb:
                root = bisect_sign(self.slope, a, b)
                v = self.value(root)
                if v >= best * (1 - 1e-14):
                    c2, best = root, v
        return best, c2


def weight_search(inst: TradeoffInstance) -> WeightSearchResult:
    """Optimal weights via exhaustive support sizes and per-support line searches.

    Every optimal weighting has the form ``(c1 - c2 (T-t+1)^p)_+``; for each
    support size ``S`` the admissible ``c2`` form one interval, searched on a
    64-point grid and refined by golden section. Ties between support sizes
    go to the smallest ``S``.
    """
    T, p, r = inst.T, inst.p, inst.eps_over_rho
    if r <= 1:
        w = np.zeros(T)
        w[-1] = 1.0
        return WeightSearchResult(w, 0.0, 1, 1.0, 0.0, degenerate=True)
    best = None
    for S in range(1, T + 1):
        sup = _Support(S, T, p, r)
        val, c2 = sup.maximize()
        if best is None or val > best[0]:
            best = (val, c2, sup)
    val, c2, sup = best
    tail, c1 = sup.weights(c2)
    w = np.zeros(T)
    w[T - sup.S:] = tail[::-1]
    w /= math.fsum(w)
    return WeightSearchResult(w, val, sup.S, c1, c2)


def optimal_weights(inst: TradeoffInstance) -> np.ndarray:
    return weight_search(inst).w


def window_objective(s: int, eps_over_rho: float) -> float:
    """Concentration objective of a size-``s`` window for p = 1."""
    return s * max(eps_over_rho - (s + 1) / 2.0, 0.0) ** 2


def optimal_window_size(inst: TradeoffInstance) -> int:
    """Best window for p = 1: one of the two integers around (2 eps/rho - 1)/3."""
    if inst.p != 1:
        raise ValueError("window tuning rule holds for p = 1 only")
    x = (2.0 * inst.eps_over_rho - 1.0) / 3.0
    cands = sorted({min(max(math.floor(x), 1), inst.T), min(max(math.ceil(x), 1), inst.T)})
    return max(cands, key=lambda s: (window_objective(s, inst.eps_over_rho), -s))


def smoothing_objective(alpha: float, eps_over_rho: float) -> float:
    """Long-history (T -> inf) concentration objective of smoothing at rate ``alpha``, p = 1."""
    return (2.0 / alpha - 1.0) * max(eps_over_rho - 1.0 / alpha, 0.0) ** 2


def optimal_smoothing_rate(eps_over_rho: float) -> float:
    """Long-history optimal decay rate ``3/(eps/rho + 1)`` projected onto ``[min(rho/eps, 1), 1]``."""
    if not eps_over_rho > 0:
        raise ValueError(f"eps_over_rho must be positive, got {eps_over_rho}")
    floor_ = min(max(1.0 / eps_over_rho, 0.0), 1.0)
    return min(max(3.0 / (eps_over_rho + 1.0), floor_), 1.0)
