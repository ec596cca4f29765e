"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
per-variable bounds. Sized for a few hundred variables; used as an auditable
oracle, not as a general-purpose solver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL, ITERATION_LIMIT, INFEASIBLE, UNBOUNDED = 0, 1, 2, 3

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-10
_FEAS_TOL = 1e-9


class LPError(RuntimeError):
    pass


@dataclass
class LPResult:
    x: np.ndarray | None
    fun: float
    status: int
    nit: int
    eqlin: np.ndarray | None = None  # d fun / d b_eq
    ineqlin: np.ndarray | None = None  # d fun / d b_ub

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _pivot(T, row, col):
    T[row] /= T[row, col]
    f = T[:, col].copy()
    f[row] = 0.0
    T -= np.outer(f, T[row])


def _reinvert(T, basis, A, b, cost):
    """Rebuild the tableau from the original data for the current basis."""
    m = len(basis)
    B = A[:, basis]
    T[:m, :-1] = np.linalg.solve(B, A)
    T[:m, -1] = np.linalg.solve(B, b)
    cb = cost[basis]
    T[-1, :-1] = cost - cb @ T[:m, :-1]
    T[-1, -1] = -cb @ T[:m, -1]


def _run(T, basis, ncols, A, b, cost, max_iter, nit, refresh=50):
    """Iterate on tableau ``T`` (last row holds reduced costs, last column the rhs).

    ``A``, ``b`` and ``cost`` are the original data behind ``T``; the tableau
    is rebuilt from them every ``refresh`` pivots.
    """
    m = T.shape[0] - 1
    bland = False
    stall = 0
    since = 0
    while nit < max_iter:
        if since >= refresh:
            _reinvert(T, basis, A, b, cost)
            since = 0
        r = T[-1, :ncols]
        cand = np.flatnonzero(r < -_COST_TOL)
        if cand.size == 0:
            return OPTIMAL, nit
        col = int(cand[0]) if bland else int(cand[np.argmin(r[cand])])
        a = T[:m, col]
        rows = np.flatnonzero(a > _PIVOT_TOL * max(1.0, np.abs(a).max()))
        if rows.size == 0:
            return UNBOUNDED, nit
        rhs = np.clip(T[rows, -1], 0.0, None)
        # Harris two-pass ratio test: relaxed step, then the largest pivot.
        step = np.min((rhs + _FEAS_TOL) / a[rows])
        ties = rows[rhs / a[rows] <= step]
        if bland:
            row = int(ties[np.argmin(np.asarray(basis)[ties])])
        else:
            row = int(ties[np.argmax(a[ties])])
        if rhs[rows == row][0] <= 1e-12:
            stall += 1
            if stall > 50:
                bland = True
        else:
            stall = 0
        _pivot(T, row, col)
        np.clip(T[:m, -1], 0.0, None, out=T[:m, -1])
        basis[row] = col
        nit += 1
        since += 1
    return ITERATION_LIMIT, nit


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
            max_iter: int = 50_000) -> LPResult:
    """Minimize ``c @ x``.

    ``bounds`` is a list of ``(lo, hi)`` pairs (``None`` for unbounded), or a
    single pair applied to every variable; the default is ``(0, None)``.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if bounds is None:
        bounds = [(0.0, None)] * n
    elif len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        bounds = [tuple(bounds)] * n

    # Substitute x = lo + u (u >= 0), or x = u+ - u- for free variables.
    cols, shift = [], np.zeros(n)
    ub_rows, ub_rhs = [], []
    for j, (lo, hi) in enumerate(bounds):
        if lo is None or lo == -np.inf:
            if hi is not None and hi != np.inf:
                # x = hi - u
                cols.append((j, -1.0))
                shift[j] = hi
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            shift[j] = lo
            if hi is not None and hi != np.inf:
                if hi < lo:
                    return LPResult(None, np.nan, INFEASIBLE, 0)
                ub_rows.append(len(cols) - 1)
                ub_rhs.append(hi - lo)
    nu = len(cols)
    S = np.zeros((n, nu))
    for k, (j, s) in enumerate(cols):
        S[j, k] = s

    A1 = A_ub @ S
    b1 = b_ub - A_ub @ shift
    if ub_rows:
        extra = np.zeros((len(ub_rows), nu))
        extra[np.arange(len(ub_rows)), ub_rows] = 1.0
        A1 = np.vstack([A1, extra])
        b1 = np.concatenate([b1, ub_rhs])
    A2 = A_eq @ S
    b2 = b_eq - A_eq @ shift
    cu = c @ S
    m1, m2 = A1.shape[0], A2.shape[0]
    m = m1 + m2

    # Standard form: [A1 I; A2 0] z = b, z >= 0.
    A = np.zeros((m, nu + m1))
    A[:m1, :nu] = A1
    A[:m1, nu:] = np.eye(m1)
    A[m1:, :nu] = A2
    b = np.concatenate([b1, b2])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    cz = np.concatenate([cu, np.zeros(m1)])
    nz = nu + m1

    # Slack columns start basic where their row was not flipped.
    art_rows = [i for i in range(m) if i >= m1 or neg[i]]
    na = len(art_rows)
    T = np.zeros((m + 1, nz + na + 1))
    T[:m, :nz] = A
    T[:m, -1] = b
    basis = [0] * m
    for i in range(m1):
        if not neg[i]:
            basis[i] = nu + i
    for k, i in enumerate(art_rows):
        T[i, nz + k] = 1.0
        basis[i] = nz + k

    nit = 0
    keep = list(range(m))
    if na:
        T[-1, nz:nz + na] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        A_art = np.hstack([A, T[:m, nz:nz + na]])
        cost1 = np.concatenate([np.zeros(nz), np.ones(na)])
        status, nit = _run(T, basis, nz + na, A_art, b, cost1, max_iter, nit)
        if status != OPTIMAL:
            return LPResult(None, np.nan, status, nit)
        if -T[-1, -1] > 1e-9 * max(1.0, np.abs(b).max(initial=0.0)):
            return LPResult(None, np.nan, INFEASIBLE, nit)
        # Drive artificials out of the basis; drop redundant rows.
        keep = []
        for i in range(m):
            if basis[i] >= nz:
                j = int(np.argmax(np.abs(T[i, :nz])))
                if abs(T[i, j]) > _PIVOT_TOL:
                    _pivot(T, i, j)
                    basis[i] = j
                    keep.append(i)
            else:
                keep.append(i)
        T = np.vstack([T[keep][:, list(range(nz)) + [T.shape[1] - 1]],
                       np.zeros((1, nz + 1))])
        basis = [basis[i] for i in keep]
        A, b = A[keep], b[keep]
    else:
        T = np.delete(T, np.s_[nz:nz + na], axis=1)

    T[-1, :] = 0.0
    T[-1, :nz] = cz
    for i, j in enumerate(basis):
        T[-1] -= cz[j] * T[i]
    status, nit = _run(T, basis, nz, A, b, cz, max_iter, nit)
    if status != OPTIMAL:
        return LPResult(None, np.nan, status, nit)

    z = np.zeros(nz)
    y = np.zeros(m)
    if basis:
        yk = np.linalg.lstsq(A[:, basis].T, cz[basis], rcond=None)[0]
        y[keep] = yk
        y[neg] *= -1
        z[basis] = np.clip(T[:-1, -1], 0.0, None)
        # Re-solve the basic system on the original data to shed pivot drift.
        sol, *_ = np.linalg.lstsq(A[:, basis], b, rcond=None)
        refined = np.zeros(nz)
        refined[basis] = np.clip(sol, 0.0, None)
        if np.abs(A @ refined - b).max() <= np.abs(A @ z - b).max():
            z = refined
    x = shift + S @ z[:nu]
    return LPResult(x, float(c @ x), OPTIMAL, nit, eqlin=y[m1:], ineqlin=y[:A_ub.shape[0]])
