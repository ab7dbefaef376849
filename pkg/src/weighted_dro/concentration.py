"""Finite-sample concentration bounds for weighted empirical distributions.

The constants of the bounds are configuration (``BoundParams``); nothing here
assumes particular numeric values for them. The Monte-Carlo helpers check
decay rates and coverage empirically on drifting families whose per-step
W_inf drift is exactly ``rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binom

from .empirical import DiscreteDistribution1D, make_weighted_empirical, wasserstein_p
from .rng import stream
from .weights import as_weights, effective_sample_size, weighted_drift

FAMILIES = ("shifted-binomial", "shifted-uniform-atoms")


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BoundParams:
    """Order, dimension and constants of the concentration bounds.

    ``c0`` scales the expectation bound, ``c1`` is the exponent rate and
    ``c2`` the mean offset of the tail bounds. When ``c1`` is omitted it is
    ``2 diam^(-2p)`` if a diameter is given, else 1. The exponent is
    ``q = min(p/m, 1/2) - delta`` with ``delta`` defaulting to 1e-3 at the
    boundary ``p/m >= 1/2`` and 0 otherwise.
    """

    p: float = 1.0
    m: int = 1
    delta: float | None = None
    c0: float = 1.0
    c1: float | None = None
    c2: float = 1.0
    c3: float = 1.0
    diam: float | None = None

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be nonnegative")
        for name in ("c0", "c2", "c3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.c1 is not None and not self.c1 > 0:
            raise ValueError("c1 must be positive")
        if self.diam is not None and not self.diam > 0:
            raise ValueError("diam must be positive")
        if not 0 < self.q < 0.5:
            raise ValueError(f"q = {self.q} must lie in (0, 1/2)")

    @property
    def q(self) -> float:
        base = min(self.p / self.m, 0.5)
        delta = self.delta if self.delta is not None else (1e-3 if self.p / self.m >= 0.5 else 0.0)
        return base - delta

    @property
    def rate(self) -> float:
        if self.c1 is not None:
            return self.c1
        if self.diam is not None:
            return 2.0 * self.diam ** (-2.0 * self.p)
        return 1.0


def expectation_bound(n_eff: float, bp: BoundParams) -> float:
    """Bound ``c0 N_eff^-q`` on the mean of ``W_p^p``."""
    return bp.c0 * n_eff ** (-bp.q)


def _tail(n_eff: float, x: float, bp: BoundParams) -> float:
    excess = max(x ** bp.p - bp.c2 * n_eff ** (-bp.q), 0.0)
    return min(1.0, math.exp(-bp.rate * n_eff * excess * excess))


def stationary_tail_bound(n_eff: float, eps: float, bp: BoundParams) -> float:
    if n_eff < 1:
        raise ValueError(f"effective sample size must be >= 1, got {n_eff}")
    return _tail(n_eff, max(eps, 0.0), bp)


def stationary_tail_bound_clean(n_eff: float, eps: float, bp: BoundParams) -> float:
    """Simplified tail ``exp(-(c1/4) N_eff eps^(2p))``, valid for ``eps >= 2 (c2 N_eff^-q)^(1/p)``."""
    threshold = 2.0 * (bp.c2 * n_eff ** (-bp.q)) ** (1.0 / bp.p)
    if eps < threshold:
        raise ValueError(f"simplified tail needs eps >= {threshold!r}")
    return math.exp(-bp.rate / 4.0 * n_eff * eps ** (2 * bp.p))


def drift_tail_bound(w, eps: float, rho: float, bp: BoundParams) -> float:
    """Tail bound for a weighted empirical of drifting samples.

    The radius is first reduced by the weighted drift ``D_p(w) rho``; with
    ``rho = 0`` this is the stationary bound evaluated at ``N_eff(w)``.
    """
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    w = as_weights(w)
    shrunk = max(eps - weighted_drift(w, bp.p) * rho, 0.0)
    return _tail(effective_sample_size(w), shrunk, bp)


def drift_tail_bound_clean(w, eps: float, rho: float, bp: BoundParams) -> float:
    w = as_weights(w)
    n_eff = effective_sample_size(w)
    drift = weighted_drift(w, bp.p) * rho
    threshold = drift + 2.0 * (bp.c2 * n_eff ** (-bp.q)) ** (1.0 / bp.p)
    if eps < threshold:
        raise ValueError(f"simplified tail needs eps >= {threshold!r}")
    return math.exp(-bp.rate / 4.0 * n_eff * max(eps - drift, 0.0) ** (2 * bp.p))


def single_sample_radius(beta: float, bp: BoundParams) -> float:
    """Smallest radius at which the stationary bound with ``N_eff = 1`` is <= beta."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    return (bp.c2 + math.sqrt(math.log(1.0 / beta) / bp.rate)) ** (1.0 / bp.p)


@dataclass(frozen=True)
class RadiusResult:
    radius: float
    regime: str  # "small-drift" | "large-drift"
    s: int
    threshold: float


def confidence_radius(beta: float, rho: float, T: int, bp: BoundParams) -> RadiusResult:
    """Achievable (1 - beta) confidence radius with triangular weights, p = 1.

    Constants are read from ``bp`` by role: ``bp.rate`` is the exponent rate
    and ``bp.c2`` the mean offset of the drifting tail bound. Below the
    drift threshold the weights are triangular on
    ``s = ceil((12/rate rho^-2 log(1/beta))^(1/3))`` slots; at or above it all
    weight goes to the newest observation.
    """
    if bp.p != 1:
        raise ValueError("the radius scaling rule is stated for p = 1")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    rate, offset, q = bp.rate, bp.c2, bp.q
    L = math.log(1.0 / beta)
    threshold = math.sqrt(12.0 / rate * L)
    if rho >= threshold:
        return RadiusResult(rho + math.sqrt(L / rate) + offset, "large-drift", 1, threshold)
    s_star = (12.0 / rate * L / (rho * rho)) ** (1.0 / 3.0) if rho > 0 else math.inf
    if T < s_star:
        raise PreconditionError(f"history too short: need T >= {s_star:.6g}, got T={T}")
    c3 = 4.0 / 3.0 * (12.0 / rate) ** (1.0 / 3.0) + 2.0 / math.sqrt(3.0) * (1.0 / (math.sqrt(12.0) * rate)) ** (1.0 / 3.0)
    c4 = offset * (4.0 / 3.0) ** q * (12.0 / rate) ** (-q / 3.0)
    radius = c3 * (rho * L) ** (1.0 / 3.0) + c4 * (rho ** (2 * q) * L ** (-q)) ** (1.0 / 3.0)
    return RadiusResult(radius, "small-drift", math.ceil(s_star), threshold)


@dataclass(frozen=True)
class IntersectionRadii:
    radii: np.ndarray
    min_radius: float
    floor: float  # eps_single(sum of betas); min_radius never drops below it


def intersection_radii(T: int, rho: float, eps_single: Callable[[float], float], betas: Sequence[float]) -> IntersectionRadii:
    """Per-observation radii ``eps_single(beta_t) + (T - t + 1) rho`` of the intersection baseline."""
    betas = np.asarray(betas, dtype=float)
    if betas.shape != (T,):
        raise ValueError(f"need {T} violation levels, got {betas.size}")
    if np.any(betas < 0) or not math.fsum(betas) < 1:
        raise ValueError("violation levels must be nonnegative and sum below 1")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    look = np.arange(T, 0, -1, dtype=float)
    radii = np.array([eps_single(b) for b in betas]) + look * rho
    return IntersectionRadii(radii, float(radii.min()), eps_single(math.fsum(betas)))


@dataclass(frozen=True)
class DriftSequenceSpec:
    """A sequence ``P_1, ..., P_{T+1}`` with ``P_t = base + (t - 1) rho``.

    Consecutive laws are translates by ``rho``, so their W_inf distance is
    exactly ``rho``. ``base`` is Binomial(n, theta) on {0..n} or the uniform
    law on ``atoms``.
    """

    family: str
    rho: float
    T: int
    n: int = 100
    theta: float = 1.0 / 3.0
    atoms: tuple = (0.0, 1.0)
    _base: DiscreteDistribution1D = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.rho < 0 or self.T < 1:
            raise ValueError("need rho >= 0 and T >= 1")
        if self.family == "shifted-binomial":
            k = np.arange(self.n + 1)
            base = DiscreteDistribution1D(k, binom.pmf(k, self.n, self.theta))
        else:
            base = DiscreteDistribution1D.uniform(self.atoms)
        object.__setattr__(self, "_base", base)

    @property
    def diam(self) -> float:
        return float(self._base.atoms[-1] - self._base.atoms[0]) + self.T * self.rho

    def law(self, t: int) -> DiscreteDistribution1D:
        if not 1 <= t <= self.T + 1:
            raise ValueError(f"t must lie in [1, {self.T + 1}]")
        return self._base.shift((t - 1) * self.rho)

    def target(self) -> DiscreteDistribution1D:
        return self.law(self.T + 1)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One draw of ``xi_1, ..., xi_T`` (independent, ``xi_t ~ P_t``)."""
        shifts = np.arange(self.T) * self.rho
        if self.family == "shifted-binomial":
            return rng.binomial(self.n, self.theta, size=self.T) + shifts
        return rng.choice(np.asarray(self.atoms, dtype=float), size=self.T) + shifts


def _distances(spec: DriftSequenceSpec, w, p: float, trials: int, seed: int) -> np.ndarray:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    w = as_weights(w)
    if w.size != spec.T:
        raise ValueError(f"weights have length {w.size}, spec has T={spec.T}")
    target = spec.target()
    out = np.empty(trials)
    for i in range(trials):
        obs = spec.sample(stream(seed, i))
        out[i] = wasserstein_p(make_weighted_empirical(obs, w), target, p)
    return out


def _mean_se(x: np.ndarray):
    n = x.size
    mean = float(np.sum(x) / n)
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


@dataclass(frozen=True)
class MonteCarloResult:
    frequency: float
    frequency_stderr: float
    mean_wp: float
    mean_wp_stderr: float
    mean_wpp: float
    mean_wpp_stderr: float
    trials: int


def monte_carlo_tail(spec: DriftSequenceSpec, w, p: float, eps: float, trials: int, seed: int) -> MonteCarloResult:
    """Empirical frequency of ``W_p(sum w_t delta_xi_t, P_{T+1}) >= eps`` and mean distances."""
    d = _distances(spec, w, p, trials, seed)
    hits = (d >= eps).astype(float)
    f = float(np.sum(hits) / trials)
    mean_wp, se_wp = _mean_se(d)
    mean_wpp, se_wpp = _mean_se(d ** p)
    return MonteCarloResult(f, math.sqrt(f * (1 - f) / trials), mean_wp, se_wp, mean_wpp, se_wpp, trials)


def coverage_radius(spec: DriftSequenceSpec, w, p: float, beta: float, trials: int, seed: int):
    """Empirical (1 - beta)-quantile of the distance, with an order-statistic standard error."""
    d = np.sort(_distances(spec, w, p, trials, seed))
    n = d.size
    k = min(max(math.ceil((1 - beta) * n) - 1, 0), n - 1)
    spread = math.sqrt(n * beta * (1 - beta))
    lo = d[max(int(math.floor(k - spread)), 0)]
    hi = d[min(int(math.ceil(k + spread)), n - 1)]
    return float(d[k]), float(hi - lo) / 2.0


def calibrate(
    spec: DriftSequenceSpec,
    sizes: Sequence[int],
    eps_grid: Sequence[float],
    trials: int,
    seed: int,
    p: float = 1.0,
    m: int = 1,
    safety: float = 0.5,
) -> BoundParams:
    """Fit bound constants conservatively from stationary Monte-Carlo runs.

    ``c0`` (and the tail offset ``c2``) is the largest upper-confidence value
    of ``E W_p^p * N^q`` over ``sizes``; ``c1`` is ``safety`` times the
    largest rate for which every upper-confidence empirical tail on
    ``sizes x eps_grid`` stays below the bound. Uniform weights throughout.
    """
    if spec.rho != 0:
        raise ValueError("calibration uses a stationary family (rho = 0)")
    q = BoundParams(p=p, m=m).q
    runs = []
    c0 = 0.0
    for i, N in enumerate(sizes):
        d = _distances(replace(spec, T=int(N)), np.full(N, 1.0 / N), p, trials, seed + i)
        mean, se = _mean_se(d ** p)
        c0 = max(c0, (mean + 3 * se) * N ** q)
        runs.append((N, d))
    c1 = math.inf
    for N, d in runs:
        for eps in eps_grid:
            f = float(np.mean(d >= eps))
            f_up = min(f + 3 * math.sqrt(f * (1 - f) / d.size) + 1.0 / d.size, 1.0 - 1e-12)
            x = max(eps ** p - c0 * N ** (-q), 0.0)
            if x > 0:
                c1 = min(c1, -math.log(f_up) / (N * x * x))
    diam = spec.diam
    c1 = 2.0 * diam ** (-2 * p) if math.isinf(c1) else safety * c1
    return BoundParams(p=p, m=m, c0=c0, c1=c1, c2=c0, diam=diam)
