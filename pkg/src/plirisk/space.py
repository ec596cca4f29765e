"""Finite product probability spaces and conditional expectations.

The sample space is the grid ``[M] x [N]``. Random variables are plain
``(M, N)`` float arrays (row ``m``, column ``n``); the model-certain
sigma-algebra is generated by the column index, so a random variable is
measurable with respect to it exactly when it is constant down each column.

A general partition of the grid is described by an integer label array of the
same shape; :func:`column_partition` and :func:`row_partition` build the two
canonical ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_TOL = 1e-12
VALUE_TOL = 1e-10


@dataclass(frozen=True)
class FiniteSpace:
    """Positive probability matrix on ``[M] x [N]`` with uniform column mass."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise ValueError(f"p must be a non-empty 2-d array, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise ValueError("p: all probabilities must be finite and > 0")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"p: total mass {p.sum()!r} differs from 1")
        N = p.shape[1]
        cols = p.sum(axis=0)
        bad = np.flatnonzero(np.abs(cols - 1.0 / N) > PROB_TOL)
        if bad.size:
            raise ValueError(
                f"p: column {int(bad[0])} has mass {cols[bad[0]]!r}, expected 1/{N}"
            )
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, M: int, N: int) -> "FiniteSpace":
        if M < 1 or N < 1:
            raise ValueError("M and N must be >= 1")
        return cls(np.full((M, N), 1.0 / (M * N)))

    @classmethod
    def random(cls, M: int, N: int, rng: np.random.Generator) -> "FiniteSpace":
        """Random positive space; each column is rescaled to mass ``1/N``."""
        w = rng.uniform(0.2, 1.0, size=(M, N))
        return cls(w / w.sum(axis=0) / N)

    @property
    def M(self) -> int:
        return self.p.shape[0]

    @property
    def N(self) -> int:
        return self.p.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.p.shape

    def expect(self, X) -> float:
        return float(np.sum(self.p * self._check(X)))

    def column_probs(self) -> np.ndarray:
        """Conditional probabilities of the rows given each column."""
        return self.p / self.p.sum(axis=0)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape != self.shape:
            raise ValueError(f"shape mismatch: {X.shape} vs space {self.shape}")
        return X


@dataclass(frozen=True)
class DiscreteDist:
    """A finitely supported distribution with strictly increasing atoms."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        q = np.asarray(self.probs, dtype=float)
        if v.ndim != 1 or v.shape != q.shape or v.size == 0:
            raise ValueError("values and probs must be equal-length 1-d arrays")
        if np.any(np.diff(v) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(q < 0) or abs(q.sum() - 1.0) > PROB_TOL:
            raise ValueError("probs must be nonnegative and sum to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", q)

    @classmethod
    def from_samples(cls, values, probs=None, tol: float = VALUE_TOL) -> "DiscreteDist":
        """Aggregate weighted samples; values within ``tol`` of a group's first
        value are merged into it."""
        values = np.asarray(values, dtype=float).ravel()
        if probs is None:
            probs = np.full(values.size, 1.0 / values.size)
        probs = np.asarray(probs, dtype=float).ravel()
        order = np.argsort(values, kind="stable")
        v, q = values[order], probs[order]
        starts = [0]
        for i in range(1, v.size):
            if v[i] - v[starts[-1]] > tol:
                starts.append(i)
        starts = np.array(starts)
        return cls(v[starts], np.add.reduceat(q, starts))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def mean(self) -> float:
        return float(self.values @ self.probs)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)


def column_partition(space: FiniteSpace) -> np.ndarray:
    return np.broadcast_to(np.arange(space.N), space.shape).copy()


def row_partition(space: FiniteSpace) -> np.ndarray:
    return np.broadcast_to(np.arange(space.M)[:, None], space.shape).copy()


def cond_expectation(X, space: FiniteSpace, partition=None) -> np.ndarray:
    """Conditional expectation of ``X`` given the column sigma-algebra.

    With ``partition`` (an integer label array) the conditioning is on the
    sigma-algebra generated by those cells instead.
    """
    X = space._check(X)
    p = space.p
    if partition is None:
        col = np.sum(p * X, axis=0) / p.sum(axis=0)
        # keep measurable inputs bit-for-bit, so the projection is idempotent
        col = np.where(np.all(X == X[:1], axis=0), X[0], col)
        return np.broadcast_to(col, space.shape).copy()
    labels = np.asarray(partition)
    if labels.shape != space.shape:
        raise ValueError(f"partition shape {labels.shape} vs space {space.shape}")
    _, inv = np.unique(labels, return_inverse=True)
    inv = inv.reshape(space.shape)
    mass = np.bincount(inv.ravel(), weights=p.ravel())
    num = np.bincount(inv.ravel(), weights=(p * X).ravel())
    avg = num / mass
    lo = np.full(mass.size, np.inf)
    hi = np.full(mass.size, -np.inf)
    np.minimum.at(lo, inv.ravel(), X.ravel())
    np.maximum.at(hi, inv.ravel(), X.ravel())
    avg = np.where(lo == hi, lo, avg)
    return avg[inv]


def cell_masses(space: FiniteSpace, partition) -> np.ndarray:
    labels = np.asarray(partition)
    _, inv = np.unique(labels, return_inverse=True)
    return np.bincount(inv.ravel(), weights=space.p.ravel())


def distribution_of(X, space: FiniteSpace) -> DiscreteDist:
    X = space._check(X)
    return DiscreteDist.from_samples(X, space.p)


def same_distribution(X, Y, space: FiniteSpace, tol: float = VALUE_TOL) -> bool:
    """True iff ``X`` and ``Y`` have the same law under the space's measure."""
    dx, dy = distribution_of(X, space), distribution_of(Y, space)
    if dx.values.size != dy.values.size:
        return False
    return bool(
        np.all(np.abs(dx.values - dy.values) <= tol)
        and np.all(np.abs(dx.probs - dy.probs) <= PROB_TOL)
    )


def in_kernel(Z, space: FiniteSpace, tol: float = VALUE_TOL) -> bool:
    return bool(np.all(np.abs(cond_expectation(Z, space)) <= tol))


def is_column_constant(X, tol: float = VALUE_TOL) -> bool:
    X = np.asarray(X, dtype=float)
    return bool(np.all(np.abs(X - X[:1, :]) <= tol))


def from_columns(values, M: int) -> np.ndarray:
    """Column-constant field with the given per-column values."""
    values = np.asarray(values, dtype=float)
    return np.broadcast_to(values, (M, values.size)).copy()


def permute_columns(X, perm) -> np.ndarray:
    """Column ``n`` of the result is column ``perm[n]`` of ``X``."""
    return np.asarray(X)[:, np.asarray(perm)]


def validate_density(d, space: FiniteSpace, tol: float = 1e-10) -> np.ndarray:
    """Check ``d >= 0`` and ``E[d] = 1``; returns ``d`` as a float array."""
    d = space._check(d)
    if np.any(d < -tol):
        raise ValueError("density has negative entries")
    if abs(space.expect(d) - 1.0) > tol:
        raise ValueError(f"density has expectation {space.expect(d)!r}, expected 1")
    return np.clip(d, 0.0, None)
