"""Scalar line searches shared by the weight optimizer and the DRO solvers."""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi ~ 0.618


class LineMin(NamedTuple):
    x: float
    fx: float
    evaluations: int


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-12,
    max_iter: int = 500,
    tie_tol: float = 0.0,
) -> LineMin:
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    The endpoints are evaluated as well, and the best point seen is
    returned, so boundary minima of convex functions are located exactly.
    Iteration stops once the bracket is narrower than ``xtol`` or cannot
    shrink any further in floating point.

    With ``tie_tol > 0``, interior values within ``tie_tol`` of each other
    count as a tie and the bracket shrinks to the span between them (for a
    convex ``f`` a minimizer lies there). On a flat stretch of minimizers
    this converges to a central point instead of an arbitrary end.
    """
    if hi < lo:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    best_x, best_f = lo, f(lo)
    fh = f(hi)
    n = 2
    if fh < best_f:
        best_x, best_f = hi, fh
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    n += 2
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if abs(f1 - f2) <= tie_tol:
            a, b = x1, x2
            x1 = b - INV_PHI * (b - a)
            x2 = a + INV_PHI * (b - a)
            if not a < x1 <= x2 < b:
                break
            f1, f2 = f(x1), f(x2)
            n += 2
            continue
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            if not a < x1 < b:
                break
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            if not a < x2 < b:
                break
            f2 = f(x2)
        n += 1
    for x, fx in ((x1, f1), (x2, f2)):
        if fx < best_f:
            best_x, best_f = x, fx
    return LineMin(best_x, best_f, n)


def bisect_sign(g: Callable[[float], float], lo: float, hi: float, max_iter: int = 200) -> float:
    """Root of ``g`` on ``[lo, hi]`` given ``g(lo) > 0 > g(hi)`` (or the reverse)."""
    glo = g(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)
