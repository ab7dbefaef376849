"""Worst-case expected loss over 1-D Wasserstein ambiguity sets.

Two ambiguity sets are supported on a bounded support ``[lo, hi]``:

* a p-Wasserstein ball around a weighted empirical distribution, solved
  through its Lagrangian dual in the single multiplier ``lam``,

      inf_{lam >= 0}  lam eps^p + sum_t w_t sup_xi ( l(xi) - lam |xi - xi_t|^p ),

  with the inner supremum in closed form, and independently as a transport
  LP on a grid;
* an intersection of balls around point masses, solved as an LP over a
  single distribution on a grid (the distance to a point mass is a moment,
  so every ball is one linear constraint).

Losses are pointwise maxima of affine functions of ``xi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .empirical import DiscreteDistribution1D
from .lp import Infeasible, LPError, solve_standard
from .search import golden_section

MAX_DOUBLINGS = 64
DEFAULT_GRID = 2001
X_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class PiecewiseAffineLoss:
    """``l(xi) = max_k (slopes[k] xi + intercepts[k])``."""

    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.slopes, dtype=float))
        b = np.atleast_1d(np.asarray(self.intercepts, dtype=float))
        if a.size == 0 or a.shape != b.shape:
            raise ValueError("need at least one piece and matching slopes/intercepts")
        object.__setattr__(self, "slopes", a)
        object.__setattr__(self, "intercepts", b)

    @classmethod
    def newsvendor(cls, x: float, c_u: float, c_o: float) -> "PiecewiseAffineLoss":
        """``c_u (xi - x)_+ + c_o (x - xi)_+`` for order quantity ``x``."""
        if not (c_u > 0 and c_o > 0):
            raise ValueError("underage and overage costs must be positive")
        return cls([c_u, -c_o], [-c_u * x, c_o * x])

    @classmethod
    def from_pieces(cls, pieces) -> "PiecewiseAffineLoss":
        pieces = np.asarray(pieces, dtype=float).reshape(-1, 2)
        return cls(pieces[:, 0], pieces[:, 1])

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        vals = self.slopes.reshape((-1,) + (1,) * xi.ndim) * xi + self.intercepts.reshape((-1,) + (1,) * xi.ndim)
        return vals.max(axis=0)

    def kinks(self) -> np.ndarray:
        """Locations where two pieces cross and the crossing is on the active envelope."""
        a, b = self.slopes, self.intercepts
        pts = []
        for i in range(a.size):
            for j in range(i + 1, a.size):
                if a[i] != a[j]:
                    z = (b[j] - b[i]) / (a[i] - a[j])
                    if np.isclose(self(z), a[i] * z + b[i], rtol=0, atol=1e-12 * (1 + abs(z))):
                        pts.append(z)
        return np.unique(np.asarray(pts, dtype=float))

    def to_dict(self) -> dict:
        return {"pieces": np.column_stack((self.slopes, self.intercepts)).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseAffineLoss":
        if "newsvendor" in d:
            nv = d["newsvendor"]
            return cls.newsvendor(nv["x"], nv["c_u"], nv["c_o"])
        return cls.from_pieces(d["pieces"])


@dataclass(frozen=True, eq=False)
class AmbiguitySpec:
    """Weighted Wasserstein ball or intersection of balls around point masses."""

    kind: str
    p: float
    support: tuple
    center: Optional[DiscreteDistribution1D] = None
    eps: Optional[float] = None
    points: Optional[np.ndarray] = None
    radii: Optional[np.ndarray] = None

    def __post_init__(self):
        lo, hi = map(float, self.support)
        object.__setattr__(self, "support", (lo, hi))
        if not lo < hi:
            raise ValueError(f"support bounds must satisfy lo < hi, got {self.support}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.kind == "weighted-ball":
            if self.center is None or self.eps is None:
                raise ValueError("a weighted ball needs a center and a radius")
            if not self.eps >= 0:
                raise ValueError(f"radius must be nonnegative, got {self.eps}")
            atoms = self.center.atoms
        elif self.kind == "intersection":
            pts = np.asarray(self.points, dtype=float).ravel()
            radii = np.asarray(self.radii, dtype=float).ravel()
            if pts.size == 0 or pts.shape != radii.shape:
                raise ValueError("need one radius per point")
            if np.any(radii < 0):
                raise ValueError("radii must be nonnegative")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "radii", radii)
            atoms = pts
        else:
            raise ValueError(f"unknown ambiguity kind {self.kind!r}")
        slack = 1e-9 * (1 + hi - lo)
        if atoms.min() < lo - slack or atoms.max() > hi + slack:
            raise ValueError("all atoms must lie inside the support")

    @classmethod
    def weighted_ball(cls, center: DiscreteDistribution1D, eps: float, p: float, support) -> "AmbiguitySpec":
        return cls("weighted-ball", p, tuple(support), center=center, eps=float(eps))

    @classmethod
    def intersection(cls, points, radii, p: float, support) -> "AmbiguitySpec":
        return cls("intersection", p, tuple(support), points=points, radii=radii)

    @property
    def diam(self) -> float:
        return self.support[1] - self.support[0]

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "p": self.p, "support": list(self.support)}
        if self.kind == "weighted-ball":
            d.update(center=self.center.to_dict(), eps=self.eps)
        else:
            d.update(points=self.points.tolist(), radii=self.radii.tolist())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AmbiguitySpec":
        if d["kind"] == "weighted-ball":
            return cls.weighted_ball(DiscreteDistribution1D.from_dict(d["center"]), d["eps"], d["p"], d["support"])
        return cls.intersection(d["points"], d["radii"], d["p"], d["support"])


def _piece_sups(slopes, atoms, lam, p, lo, hi):
    """``sup_{lo <= xi <= hi} a_k xi - lam |xi - xi_t|^p`` for every atom t and slope k."""
    a = slopes[None, :]
    x = atoms[:, None]
    cands = [np.full_like(x, lo), np.full_like(x, hi), x]
    if p > 1 and lam > 0:
        step = (np.abs(a) / (p * lam)) ** (1.0 / (p - 1.0))
        cands.append(np.clip(x + np.sign(a) * step, lo, hi))
    best = None
    for c in cands:
        val = a * c - lam * np.abs(c - x) ** p
        best = val if best is None else np.maximum(best, val)
    return best


def _require_ball(spec: AmbiguitySpec):
    if spec.kind != "weighted-ball":
        raise ValueError("this solver handles the weighted-ball ambiguity set")


def _lambda_bracket(phi, spec: AmbiguitySpec, slopes) -> float:
    L = float(np.max(np.abs(slopes))) * spec.diam ** (spec.p - 1.0) + 1.0
    for _ in range(200):
        if phi(2 * L) >= phi(L):
            break
        L *= 2
    return 2 * L


def _saa_value(loss: PiecewiseAffineLoss, center: DiscreteDistribution1D) -> float:
    return math.fsum(center.masses * loss(center.atoms))


def worst_case_dual(loss: PiecewiseAffineLoss, spec: AmbiguitySpec, return_multiplier: bool = False):
    """Worst-case expectation over the weighted ball via the one-dimensional dual.

    The dual objective is convex in ``lam``; it is minimized by golden
    section on ``[0, lam_max]``, where ``lam_max`` starts at
    ``max|a_k| diam^(p-1) + 1`` and is doubled until the objective turns up.
    """
    _require_ball(spec)
    center, p = spec.center, spec.p
    lo, hi = spec.support
    if spec.eps == 0:
        value = _saa_value(loss, center)
        return (value, math.inf) if return_multiplier else value
    budget = spec.eps ** p
    w, atoms = center.masses, center.atoms

    def phi(lam):
        inner = (_piece_sups(loss.slopes, atoms, lam, p, lo, hi) + loss.intercepts[None, :]).max(axis=1)
        return lam * budget + math.fsum(w * inner)

    top = _lambda_bracket(phi, spec, loss.slopes)
    found = golden_section(phi, 0.0, top, xtol=1e-15 * top)
    return (found.fx, found.x) if return_multiplier else found.fx


def _grid(spec: AmbiguitySpec, grid_size: int, atoms) -> np.ndarray:
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    lo, hi = spec.support
    return np.unique(np.concatenate((np.linspace(lo, hi, grid_size), atoms)))


def _inside(spec: AmbiguitySpec, pts) -> np.ndarray:
    lo, hi = spec.support
    pts = np.asarray(pts, dtype=float)
    return pts[(pts >= lo) & (pts <= hi)]


class _BallLP:
    """Transport LP ``max sum gamma_tj l(g_j)`` on a fixed grid plus movable extra points.

    Columns are ordered atom-major over the grid, then one budget slack, so
    column indices stay stable when only the extra points move (warm starts).
    """

    def __init__(self, spec: AmbiguitySpec, grid_size: int):
        _require_ball(spec)
        self.spec = spec
        self.atoms = spec.center.atoms
        self.w = spec.center.masses
        self.base = _grid(spec, grid_size, self.atoms)
        self.start = None
        self.basis = None

    def solve(self, loss: PiecewiseAffineLoss, extra=()):
        extra = np.asarray(extra, dtype=float)
        g = np.concatenate((self.base, extra))
        T, G = self.atoms.size, g.size
        cost = np.abs(g[None, :] - self.atoms[:, None]) ** self.spec.p
        A = np.zeros((T + 1, T * G + 1))
        for t in range(T):
            A[t, t * G:(t + 1) * G] = 1.0
        A[T, :-1] = cost.ravel()
        A[T, -1] = 1.0
        b = np.concatenate((self.w, [self.spec.eps ** self.spec.p]))
        c = np.concatenate((np.tile(loss(g), T), [0.0]))
        if self.start is None or len(self.start) != T + 1:
            idx = np.searchsorted(self.base, self.atoms)
            self.start = [t * G + int(j) for t, j in enumerate(idx)] + [T * G]
        # the atom basis is always feasible: no transport, full budget slack
        basis = self.basis if self.basis is not None else self.start
        try:
            res = solve_standard(c, A, b, basis=basis)
        except Infeasible:
            res = solve_standard(c, A, b, basis=self.start)
        self.basis = res.basis
        return res.value


def worst_case_grid_lp(loss: PiecewiseAffineLoss, spec: AmbiguitySpec, grid_size: int = DEFAULT_GRID) -> float:
    """Primal transport LP for the weighted ball on a uniform grid.

    The grid is augmented with the center atoms and the loss kinks; the value
    approaches ``worst_case_dual`` from below as the grid is refined.
    """
    return _BallLP(spec, grid_size).solve(loss, _inside(spec, loss.kinks()))


class _IntersectionLP:
    """``max sum_j q_j l(g_j)`` over distributions q on a grid inside every ball."""

    def __init__(self, spec: AmbiguitySpec, grid_size: int):
        if spec.kind != "intersection":
            raise ValueError("this solver handles the intersection ambiguity set")
        self.spec = spec
        self.base = _grid(spec, grid_size, spec.points)
        self.radii = spec.radii.copy()
        self.doublings = 0
        self.basis = None

    def _system(self, g):
        pts, p = self.spec.points, self.spec.p
        T, G = pts.size, g.size
        A = np.zeros((T + 1, G + T))
        A[0, :G] = 1.0
        A[1:, :G] = np.abs(g[None, :] - pts[:, None]) ** p
        A[1:, G:] = np.eye(T)
        b = np.concatenate(([1.0], self.radii ** p))
        return A, b

    def solve(self, loss: PiecewiseAffineLoss, extra=()):
        g = np.concatenate((self.base, np.asarray(extra, dtype=float)))
        c = np.concatenate((loss(g), np.zeros(self.spec.points.size)))
        while True:
            A, b = self._system(g)
            try:
                res = solve_standard(c, A, b, basis=self.basis)
                break
            except Infeasible:
                if self.radii.max() == 0 or self.doublings >= MAX_DOUBLINGS:
                    raise
                self.radii *= 2.0
                self.doublings += 1
                self.basis = None
        self.basis = res.basis if len(res.basis) == A.shape[0] else None
        return res.value


def worst_case_intersection(loss: PiecewiseAffineLoss, spec: AmbiguitySpec, grid_size: int = DEFAULT_GRID):
    """Worst case over the intersection of balls; returns ``(value, doublings)``.

    When the intersection is empty all radii are doubled until it is not;
    ``doublings`` counts how often. An empty intersection of zero-radius
    balls cannot be repaired and raises ``Infeasible``.
    """
    lp = _IntersectionLP(spec, grid_size)
    value = lp.solve(loss, _inside(spec, loss.kinks()))
    return value, lp.doublings


def _quantile_span(values, weights, level):
    """Ends of the minimizer interval of ``x -> sum w_t |pinball(values_t - x)|`` at ``level``.

    The left end is the lower weighted quantile; when the cumulative weight
    hits ``level`` exactly (within 1e-12) the interval extends to the next value.
    """
    order = np.argsort(values, kind="mergesort")
    v = values[order]
    cum = np.cumsum(weights[order])
    cum /= cum[-1]
    i = min(int(np.searchsorted(cum, level - 1e-12, side="left")), v.size - 1)
    j = i + 1 if (cum[i] <= level + 1e-12 and i + 1 < v.size) else i
    return float(v[i]), float(v[j])


def _lower_quantile(values, weights, level):
    return _quantile_span(values, weights, level)[0]


def _ball_order_dual(spec: AmbiguitySpec, c_u: float, c_o: float):
    center, p = spec.center, spec.p
    lo, hi = spec.support
    w, atoms = center.masses, center.atoms
    level = c_u / (c_u + c_o)
    if spec.eps == 0:
        x = min(max(_lower_quantile(atoms, w, level), lo), hi)
        return x, _saa_value(PiecewiseAffineLoss.newsvendor(x, c_u, c_o), center)
    budget = spec.eps ** p
    slopes = np.array([c_u, -c_o])

    # For fixed lam the dual is sum_t w_t max(A_t - c_u x, B_t + c_o x) in x,
    # minimized exactly at a weighted quantile of the crossing points.
    def inner(lam, central=False):
        S = _piece_sups(slopes, atoms, lam, p, lo, hi)
        A, B = S[:, 0], S[:, 1]
        left, right = _quantile_span((A - B) / (c_u + c_o), w, level)
        x = 0.5 * (left + right) if central else left
        x = min(max(x, lo), hi)
        return x, lam * budget + math.fsum(w * np.maximum(A - c_u * x, B + c_o * x))

    psi = lambda lam: inner(lam)[1]
    top = _lambda_bracket(psi, spec, slopes)
    found = golden_section(psi, 0.0, top, xtol=1e-15 * top)
    # every minimizer in x at the optimal multiplier is optimal; report the central one
    return inner(found.x, central=True)


def newsvendor_order(
    spec: AmbiguitySpec,
    c_u: float,
    c_o: float,
    method: str = "dual",
    grid_size: int = DEFAULT_GRID,
    tol: float = X_TOL,
):
    """DRO newsvendor order quantity on the support; returns ``(x_star, value)``.

    ``method="dual"`` (weighted ball only) minimizes jointly over the
    multiplier and the order: for fixed ``lam`` the best order is a weighted
    quantile of per-atom crossing points, and the outer problem is a convex
    search in ``lam``. ``method="grid"`` runs golden section over ``x`` on the
    grid LP (transport LP for the ball, moment LP for the intersection),
    warm-starting each LP from the previous basis.

    When the minimizer is not unique the central one is returned, except at
    ``eps = 0`` where the dual method returns the lower critical-fractile
    quantile of the center (the classical sample-average order).
    """
    if not (c_u > 0 and c_o > 0):
        raise ValueError("underage and overage costs must be positive")
    lo, hi = spec.support
    if method == "dual":
        if spec.kind != "weighted-ball":
            raise ValueError("the dual method is available for the weighted ball only; use method='grid'")
        return _ball_order_dual(spec, c_u, c_o)
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")
    lp = _BallLP(spec, grid_size) if spec.kind == "weighted-ball" else _IntersectionLP(spec, grid_size)

    def value(x):
        return lp.solve(PiecewiseAffineLoss.newsvendor(x, c_u, c_o), [x])

    scale = 1.0 + max(c_u, c_o) * (hi - lo)
    found = golden_section(value, lo, hi, xtol=tol, tie_tol=1e-10 * scale)
    return found.x, found.fx


__all__ = [
    "AmbiguitySpec",
    "Infeasible",
    "LPError",
    "PiecewiseAffineLoss",
    "newsvendor_order",
    "worst_case_dual",
    "worst_case_grid_lp",
    "worst_case_intersection",
]
