"""Newsvendor experiment with Binomial demand whose success probability drifts.

Each simulation draws a random-walk path ``theta_1..theta_T``, demands
``xi_t ~ Binomial(n, theta_t)`` and a set of one-step jumps ``theta_{T+1}``.
Every method/parameter cell turns the demand history into an order and is
scored by its exact expected cost under next-period demand, averaged over
the jumps. Means and standard errors are taken across simulations, and each
method's ex-post optimum is the cell with the lowest mean.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .dro import AmbiguitySpec, newsvendor_order
from .empirical import DiscreteDistribution1D
from .lp import LPError
from .rng import stream
from .weights import TradeoffInstance, lookback, optimal_weights, smoothing_weights

METHODS = ("saa", "smoothing", "weighted", "intersection")


def lin_range(a: float, b: float, n: int) -> list:
    """``n`` equally spaced values from ``a`` to ``b`` inclusive."""
    if not a <= b:
        raise ValueError(f"need a <= b, got {a}, {b}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        if a != b:
            raise ValueError("a single point needs a == b")
        return [float(a)]
    return np.linspace(a, b, n).tolist()


def log_range(a: float, b: float, n: int) -> list:
    """``n`` geometrically spaced values from ``a`` to ``b`` inclusive."""
    if not 0 < a <= b:
        raise ValueError(f"need 0 < a <= b, got {a}, {b}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        if a != b:
            raise ValueError("a single point needs a == b")
        return [float(a)]
    return np.geomspace(a, b, n).tolist()


def _union(*parts) -> tuple:
    out = []
    for part in parts:
        for v in part:
            if not any(math.isclose(v, u, rel_tol=1e-12, abs_tol=0.0) for u in out):
                out.append(float(v))
    return tuple(out)


@dataclass(frozen=True)
class DemandModel:
    n: int = 1000
    theta1: float = 1.0 / 3.0
    delta: float = 0.0
    T: int = 70

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not 0.0 <= self.theta1 <= 1.0:
            raise ValueError("theta1 must lie in [0, 1]")
        if not self.delta >= 0:
            raise ValueError("delta must be nonnegative")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError("T must be a positive integer")


def simulate_theta_path(model: DemandModel, horizon: int, seed=0) -> np.ndarray:
    """Random walk ``theta_{t+1} = clip(theta_t + U(-delta, delta), 0, 1)`` from ``theta1``.

    ``seed`` is an integer or a numpy Generator.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    steps = rng.uniform(-1.0, 1.0, horizon - 1) * model.delta
    theta = np.empty(horizon)
    theta[0] = model.theta1
    for t in range(1, horizon):
        theta[t] = min(max(theta[t - 1] + steps[t - 1], 0.0), 1.0)
    return theta


def _binom_pmf(n: int, theta) -> np.ndarray:
    """Binomial pmf on ``0..n``, one row per entry of ``theta``; stable for tiny ``theta``."""
    k = np.arange(n + 1, dtype=float)
    th = np.asarray(theta, dtype=float).reshape(-1, 1)
    logc = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
    return np.exp(logc + xlogy(k, th) + xlog1py(n - k, -th))


def _newsvendor_costs(orders, pmf, c_u, c_o) -> np.ndarray:
    """Expected cost of each order under the demand pmf on ``0..n``."""
    k = np.arange(pmf.size, dtype=float)
    gap = k[None, :] - np.asarray(orders, dtype=float).reshape(-1, 1)
    loss = c_u * np.maximum(gap, 0.0) + c_o * np.maximum(-gap, 0.0)
    return loss @ pmf


def expected_newsvendor_cost_binomial(x: float, n: int, theta: float, c_u: float, c_o: float) -> float:
    """``E[c_u (xi - x)_+ + c_o (x - xi)_+]`` for ``xi ~ Binomial(n, theta)``."""
    if not 0 <= x <= n:
        raise ValueError(f"order must lie in [0, {n}], got {x}")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    pmf = _binom_pmf(n, theta)[0]
    return float(_newsvendor_costs([x], pmf, c_u, c_o)[0])


@dataclass(frozen=True)
class SweepConfig:
    """Method parameter grids and Monte-Carlo sizes."""

    simulations: int = 20
    jumps: int = 200
    seed: int = 0
    c_u: float = 4.0
    c_o: float = 1.0
    p: float = 2.0
    epsilons: tuple = ()
    ratios: tuple = ()
    alphas: tuple = ()
    deltas: Optional[tuple] = None
    methods: tuple = METHODS
    grid_size: Optional[int] = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.simulations < 1 or self.jumps < 1:
            raise ValueError("simulation and jump counts must be >= 1")
        if not (self.epsilons and self.ratios and self.alphas):
            raise ValueError("parameter grids must be nonempty")
        if any(e < 0 for e in self.epsilons) or any(r < 0 for r in self.ratios):
            raise ValueError("radii and drift ratios must be nonnegative")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")

    @classmethod
    def preset(cls, name: str, **overrides) -> "SweepConfig":
        """``desk``: reduced grids and counts; ``paper``: the full experiment."""
        if name == "desk":
            base = dict(
                simulations=20,
                jumps=200,
                epsilons=_union([0.0], *(lin_range(10.0 ** i, 10.0 ** (i + 1), 4) for i in (-1, 0, 1))),
                ratios=_union([0.0], log_range(1e-4, 1.0, 10)),
                alphas=_union([0.0], log_range(1e-4, 1.0, 30)),
            )
        elif name == "paper":
            base = dict(
                simulations=100,
                jumps=1000,
                epsilons=_union([0.0], *(lin_range(10.0 ** i, 10.0 ** (i + 1), 10) for i in (-1, 0, 1))),
                ratios=_union([0.0], log_range(1e-4, 1.0, 30)),
                alphas=_union([0.0], log_range(1e-4, 1.0, 30)),
            )
        else:
            raise ValueError(f"unknown preset {name!r}")
        base.update(overrides)
        return cls(**base)


DEFAULT_DELTAS = _union([0.0], log_range(1e-4, 1e-1, 7))


@dataclass
class CellResult:
    method: str
    delta: float
    epsilon: Optional[float]
    rho_over_eps: Optional[float]
    alpha: Optional[float]
    mean_cost: float
    stderr: float
    failures: int


@dataclass
class SweepResult:
    cells: list = field(default_factory=list)
    optima: dict = field(default_factory=dict)

    def optimum(self, method: str, delta: float) -> CellResult:
        return self.optima[(method, float(delta))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = list(CellResult.__dataclass_fields__)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for cell in self.cells:
            writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in asdict(cell).values()])
        return buf.getvalue()

    def summary(self) -> dict:
        out = []
        for (method, delta), cell in sorted(self.optima.items(), key=lambda kv: (kv[0][1], METHODS.index(kv[0][0]))):
            out.append(asdict(cell))
        return {"optima": out}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, allow_nan=False) + "\n"


def _weighted_quantile_order(atoms, w, level):
    d = DiscreteDistribution1D(atoms, w)
    return float(d.quantile(level))


class _Cells:
    """The parameter cells of each method, in a fixed order."""

    def __init__(self, cfg: SweepConfig):
        self.list = []
        if "saa" in cfg.methods:
            self.list.append(("saa", None, None, None))
        if "smoothing" in cfg.methods:
            self.list += [("smoothing", None, None, a) for a in cfg.alphas]
        for m in ("weighted", "intersection"):
            if m in cfg.methods:
                self.list += [(m, e, r, None) for e in cfg.epsilons for r in cfg.ratios]


_WEIGHTS_CACHE: dict = {}


def _dro_weights(T: int, p: float, ratio: float) -> np.ndarray:
    key = (T, p, ratio)
    if key not in _WEIGHTS_CACHE:
        if ratio == 0:
            w = np.full(T, 1.0 / T)
        else:
            w = optimal_weights(TradeoffInstance(T, p, 1.0 / ratio))
        _WEIGHTS_CACHE[key] = w
    return _WEIGHTS_CACHE[key]


def _order(cell, demands, model: DemandModel, cfg: SweepConfig) -> float:
    method, eps, ratio, alpha = cell
    T, n = model.T, model.n
    level = cfg.c_u / (cfg.c_u + cfg.c_o)
    support = (0.0, float(n))
    if method == "saa":
        return _weighted_quantile_order(demands, np.full(T, 1.0 / T), level)
    if method == "smoothing":
        return _weighted_quantile_order(demands, smoothing_weights(T, alpha), level)
    if method == "weighted":
        center = DiscreteDistribution1D(demands, _dro_weights(T, cfg.p, ratio))
        spec = AmbiguitySpec.weighted_ball(center, eps, cfg.p, support)
        return newsvendor_order(spec, cfg.c_u, cfg.c_o, method="dual")[0]
    radii = eps + lookback(T) * (ratio * eps)
    spec = AmbiguitySpec.intersection(demands, radii, cfg.p, support)
    return newsvendor_order(spec, cfg.c_u, cfg.c_o, method="grid", grid_size=cfg.grid_size or n + 1)[0]


def _simulate(args):
    """Costs of every cell for one (delta, simulation); failed cells are NaN."""
    model, cfg, sim = args
    rng_path = stream(cfg.seed, sim, 0)
    rng_demand = stream(cfg.seed, sim, 1)
    rng_jump = stream(cfg.seed, sim, 2)
    theta = simulate_theta_path(model, model.T, rng_path)
    demands = rng_demand.binomial(model.n, theta).astype(float)
    nxt = np.clip(theta[-1] + rng_jump.uniform(-1.0, 1.0, cfg.jumps) * model.delta, 0.0, 1.0)
    pmf = _binom_pmf(model.n, nxt).mean(axis=0)
    orders = []
    for cell in _Cells(cfg).list:
        try:
            orders.append(_order(cell, demands, model, cfg))
        except LPError:
            orders.append(math.nan)
    orders = np.asarray(orders)
    costs = np.full(orders.size, math.nan)
    ok = np.isfinite(orders)
    costs[ok] = _newsvendor_costs(orders[ok], pmf, cfg.c_u, cfg.c_o)
    return costs


def expost_sweep(model: DemandModel, cfg: SweepConfig) -> SweepResult:
    """Ex-post performance of every method cell, for each drift level.

    Drift levels are ``cfg.deltas`` if given, else ``model.delta``. All cells
    of one simulation see the same demand history, so method comparisons use
    common random numbers. A cell that fails in any simulation is reported
    with its failure count and a NaN mean and is excluded from the optima.
    """
    deltas = cfg.deltas if cfg.deltas is not None else (model.delta,)
    cells = _Cells(cfg).list
    result = SweepResult()
    for delta in deltas:
        m = DemandModel(model.n, model.theta1, float(delta), model.T)
        jobs = [(m, cfg, s) for s in range(cfg.simulations)]
        if cfg.n_jobs > 1:
            with ProcessPoolExecutor(cfg.n_jobs) as pool:
                costs = np.array(list(pool.map(_simulate, jobs)))
        else:
            costs = np.array([_simulate(j) for j in jobs])
        S = cfg.simulations
        for i, (method, eps, ratio, alpha) in enumerate(cells):
            col = costs[:, i]
            fails = int(np.sum(~np.isfinite(col)))
            if fails:
                mean, se = math.nan, math.nan
            else:
                mean = math.fsum(col) / S
                se = float(np.std(col, ddof=1) / math.sqrt(S)) if S > 1 else 0.0
            cell = CellResult(method, float(delta), eps, ratio, alpha, mean, se, fails)
            result.cells.append(cell)
            key = (method, float(delta))
            best = result.optima.get(key)
            if not fails and (best is None or mean < best.mean_cost):
                result.optima[key] = cell
    return result


__all__ = [
    "CellResult",
    "DEFAULT_DELTAS",
    "DemandModel",
    "SweepConfig",
    "SweepResult",
    "expected_newsvendor_cost_binomial",
    "expost_sweep",
    "lin_range",
    "log_range",
    "simulate_theta_path",
]
