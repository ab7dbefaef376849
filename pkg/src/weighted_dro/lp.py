"""Self-contained dense revised simplex for small linear programs.

Problems are taken in standard form

    maximize c @ x  subject to  A @ x = b,  x >= 0.

Pricing uses the largest reduced cost and falls back to Bland's rule after a
run of degenerate pivots, which rules out cycling. The basis inverse is kept
explicitly and refactorized periodically.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

TOL = 1e-9
REFACTOR_EVERY = 64
DEGENERATE_RUN = 25


class LPError(RuntimeError):
    """Solver failure; ``trace`` holds the last pivots as (iter, enter, leave, objective)."""

    def __init__(self, message: str, trace=()):
        super().__init__(message)
        self.trace = list(trace)

    def __str__(self):
        msg = super().__str__()
        if self.trace:
            tail = "; ".join(f"it={i} in={e} out={l} obj={o:.10g}" for i, e, l, o in self.trace[-5:])
            msg = f"{msg} [last pivots: {tail}]"
        return msg


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    basis: list
    iterations: int
    duals: np.ndarray = field(repr=False, default=None)


def _iterate(c, A, b, basis, max_iter, trace, it0=0):
    m, n = A.shape
    basis = list(basis)
    Binv = np.linalg.inv(A[:, basis])
    it = it0
    degenerate = 0
    since_refactor = 0
    while True:
        xB = Binv @ b
        y = c[basis] @ Binv
        reduced = c - y @ A
        reduced[basis] = 0.0
        if degenerate >= DEGENERATE_RUN:
            candidates = np.flatnonzero(reduced > TOL)
            if candidates.size == 0:
                break
            enter = int(candidates[0])
        else:
            enter = int(np.argmax(reduced))
            if reduced[enter] <= TOL:
                break
        d = Binv @ A[:, enter]
        pos = d > TOL
        if not np.any(pos):
            raise Unbounded("objective unbounded above", trace)
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xB[pos], 0.0) / d[pos]
        step = ratios.min()
        ties = np.flatnonzero(ratios <= step + TOL * max(1.0, step))
        # among tied rows prefer the smallest basic index (Bland), else the largest pivot
        if degenerate >= DEGENERATE_RUN:
            r = int(ties[np.argmin([basis[i] for i in ties])])
        else:
            r = int(ties[np.argmax(d[ties])])
        degenerate = degenerate + 1 if step <= TOL else 0
        leave = basis[r]
        basis[r] = enter
        piv = d[r]
        row = Binv[r] / piv
        Binv -= np.outer(d, row)
        Binv[r] = row
        it += 1
        since_refactor += 1
        trace.append((it, enter, leave, float(c[basis] @ (Binv @ b))))
        if since_refactor >= REFACTOR_EVERY:
            Binv = np.linalg.inv(A[:, basis])
            since_refactor = 0
        if it - it0 >= max_iter:
            raise LPError(f"iteration limit {max_iter} reached", trace)
    return basis, Binv, it


def _finish(c, A, b, basis, Binv, it):
    xB = Binv @ b
    x = np.zeros(A.shape[1])
    x[basis] = np.maximum(xB, 0.0)
    y = c[basis] @ Binv
    return LPResult(x, float(c @ x), basis, it, y)


def _feasible_basis(A, b, basis):
    try:
        B = A[:, basis]
        xB = np.linalg.solve(B, b)
    except (np.linalg.LinAlgError, IndexError, ValueError):
        return False
    return bool(np.all(xB >= -1e-9 * max(1.0, float(np.abs(b).max(initial=0.0)))))


def solve_standard(c, A, b, basis=None, max_iter: int = 50_000) -> LPResult:
    """Solve ``max c@x, A@x = b, x >= 0``.

    ``basis`` (column indices, one per row) is used as a warm start when it
    is primal feasible; otherwise a phase-one problem is solved first.
    Raises ``Infeasible``, ``Unbounded`` or ``LPError``.
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    trace = deque(maxlen=50)
    if basis is not None and len(basis) == m and _feasible_basis(A, b, list(basis)):
        basis, Binv, it = _iterate(c, A, b, basis, max_iter, trace)
        return _finish(c, A, b, basis, Binv, it)

    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    # reuse unit columns as the starting basis, add artificials for the rest
    start = [-1] * m
    unit = (np.abs(A) <= 0).sum(axis=0) == m - 1
    for j in np.flatnonzero(unit):
        i = int(np.flatnonzero(A[:, j])[0])
        if A[i, j] == 1.0 and start[i] < 0:
            start[i] = int(j)
    missing = [i for i in range(m) if start[i] < 0]
    k = len(missing)
    A1 = np.hstack((A, np.zeros((m, k))))
    for a, i in enumerate(missing):
        A1[i, n + a] = 1.0
        start[i] = n + a
    it = 0
    basis = start
    if k:
        c1 = np.zeros(n + k)
        c1[n:] = -1.0
        basis, Binv, it = _iterate(c1, A1, b, basis, max_iter, trace)
        xB = Binv @ b
        infeas = sum(xB[i] for i, j in enumerate(basis) if j >= n)
        if infeas > 1e-8 * max(1.0, float(b.max(initial=0.0))):
            raise Infeasible(f"no feasible point (phase-one residual {infeas:.3g})", trace)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep_rows = list(range(m))
        for r in range(m):
            if basis[r] < n:
                continue
            row = Binv[r] @ A1
            row[basis[:r] + basis[r + 1:]] = 0.0
            cand = np.flatnonzero(np.abs(row[:n]) > 1e-9)
            if cand.size:
                basis[r] = int(cand[0])
                Binv = np.linalg.inv(A1[:, basis])
            else:
                keep_rows.remove(r)
        if len(keep_rows) < m:
            A, b = A[keep_rows], b[keep_rows]
            basis = [basis[r] for r in keep_rows]
    basis, Binv, it = _iterate(c, A, b, basis, max_iter, trace, it)
    res = _finish(c, A, b, basis, Binv, it)
    return res


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, maximize: bool = True) -> LPResult:
    """General-form wrapper: inequality rows get slack columns; ``x >= 0``.

    The returned ``x`` excludes slacks; ``value`` is the objective in the
    requested sense.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    blocks, rhs = [], []
    n_ub = 0
    if A_ub is not None:
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        n_ub = A_ub.shape[0]
    if A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
    if n_ub:
        blocks.append(np.hstack((A_ub, np.eye(n_ub))))
        rhs.append(np.asarray(b_ub, dtype=float))
    if A_eq is not None and A_eq.size:
        blocks.append(np.hstack((A_eq, np.zeros((A_eq.shape[0], n_ub)))))
        rhs.append(np.asarray(b_eq, dtype=float))
    A = np.vstack(blocks)
    b = np.concatenate(rhs)
    cc = np.concatenate((c if maximize else -c, np.zeros(n_ub)))
    res = solve_standard(cc, A, b)
    x = res.x[:n]
    value = float(c @ x)
    return LPResult(x, value, res.basis, res.iterations, res.duals)
