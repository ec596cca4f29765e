"""Baseline risk measures on finite spaces and their conditional composites.

Losses are positive: a larger value of ``X`` is worse.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .space import (
    DiscreteDist,
    FiniteSpace,
    cond_expectation,
    distribution_of,
)

_CDF_TOL = 1e-12


def check_level(alpha: float, name: str = "alpha") -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"{name} must lie in [0, 1), got {alpha!r}")
    return alpha


def var_discrete(dist: DiscreteDist, alpha: float) -> float:
    """Left alpha-quantile ``inf{x : F(x) >= alpha}``.

    At ``alpha = 0`` the infimum is ``-inf``; the smallest atom is returned
    instead, which is the left quantile at every level in ``(0, p_min]``.
    """
    alpha = check_level(alpha)
    idx = int(np.searchsorted(dist.cdf(), alpha - _CDF_TOL, side="left"))
    return float(dist.values[min(idx, dist.values.size - 1)])


def _ru_objective(values, probs, x, alpha):
    return x + np.sum(probs * np.maximum(values - x, 0.0)) / (1.0 - alpha)


def es_discrete(dist: DiscreteDist, alpha: float) -> float:
    """Expected Shortfall via the minimization formula.

    The objective ``x + E[(X - x)^+] / (1 - alpha)`` is minimized by any
    alpha-quantile, so it is evaluated there and at the next atom up (guards
    against rounding in the cumulative sums).
    """
    alpha = check_level(alpha)
    v, q = dist.values, dist.probs
    idx = int(np.searchsorted(dist.cdf(), alpha, side="left"))
    cand = {min(idx, v.size - 1), min(idx + 1, v.size - 1), max(idx - 1, 0)}
    return float(min(_ru_objective(v, q, v[i], alpha) for i in cand))


def es_quantile_avg(dist: DiscreteDist, alpha: float) -> float:
    """Expected Shortfall as the average of the left quantile over [alpha, 1)."""
    alpha = check_level(alpha)
    upper = dist.cdf()
    upper[-1] = 1.0
    lower = np.concatenate(([0.0], upper[:-1]))
    overlap = np.clip(upper - np.maximum(lower, alpha), 0.0, None)
    return float(overlap @ dist.values / (1.0 - alpha))


def es_gaussian(m: float, sigma: float, alpha: float) -> float:
    """ES of ``Normal(m, sigma^2)``: ``m + sigma * phi(Phi^-1(alpha)) / (1 - alpha)``."""
    alpha = check_level(alpha)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0 or alpha == 0:
        return float(m)
    z = ndtri(alpha)
    return float(m + sigma * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi) / (1.0 - alpha))


def _entropic(values, probs, beta, axis=None):
    values = np.asarray(values, dtype=float)
    if beta == 0:
        return np.sum(probs * values, axis=axis)
    shift = np.max(values, axis=axis, keepdims=True)
    y = values - shift
    z = beta * y
    s = np.sum(probs * np.exp(z), axis=axis, keepdims=True)
    # near 1 the log loses the small-beta signal; use the expm1 sum instead
    s1 = np.sum(probs * np.expm1(z), axis=axis, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shift + np.where(s > 0.5, np.log1p(s1), np.log(s)) / beta
    # second-order expansion once beta * spread is tiny (or beta underflows)
    m1 = np.sum(probs * y, axis=axis, keepdims=True)
    var = np.sum(probs * (y - m1) ** 2, axis=axis, keepdims=True)
    small = beta * -np.min(y, axis=axis, keepdims=True) < 1e-6
    out = np.where(small, shift + m1 + 0.5 * beta * var, out)
    return out if axis is not None else float(out.squeeze())


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if beta < 0 or not np.isfinite(beta):
        raise ValueError(f"entropic parameter must be finite and >= 0, got {beta!r}")
    return beta


def er(X, space: FiniteSpace, beta: float) -> float:
    """Entropic risk ``log E[exp(beta X)] / beta``; the mean at ``beta = 0``."""
    beta = _check_beta(beta)
    return float(_entropic(space._check(X), space.p, beta))


def er_dist(dist: DiscreteDist, beta: float) -> float:
    return float(_entropic(dist.values, dist.probs, _check_beta(beta)))


def er_conditional(X, space: FiniteSpace, beta: float) -> np.ndarray:
    """Column-wise entropic risk under the conditional row probabilities."""
    beta = _check_beta(beta)
    X = space._check(X)
    col = _entropic(X, space.column_probs(), beta, axis=0)
    return np.broadcast_to(np.ravel(col), space.shape).copy()


def er_mean_of_cond(X, space: FiniteSpace, beta: float) -> float:
    """Mean of the conditional entropic risk."""
    return space.expect(er_conditional(X, space, beta))


def er_of_cond_mean(X, space: FiniteSpace, beta: float) -> float:
    """Entropic risk of the conditional mean."""
    return er(cond_expectation(X, space), space, beta)


@dataclass(frozen=True)
class KusuokaMixture:
    """Finitely many ES levels with positive weights summing to one."""

    levels: tuple
    weights: tuple

    def __post_init__(self):
        levels = tuple(check_level(a) for a in self.levels)
        weights = tuple(float(w) for w in self.weights)
        if len(levels) != len(weights) or not levels:
            raise ValueError("levels and weights must be non-empty and equal length")
        if len(set(levels)) != len(levels):
            raise ValueError("levels must be distinct")
        if any(w <= 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point(cls, alpha: float) -> "KusuokaMixture":
        return cls((alpha,), (1.0,))


def kusuoka_eval(X, space: FiniteSpace, Q: KusuokaMixture, tau_shift: float = 0.0) -> float:
    """Weighted ES of the conditional mean plus a fixed adjustment value."""
    dist = distribution_of(cond_expectation(X, space), space)
    total = sum(w * es_discrete(dist, a) for a, w in zip(Q.levels, Q.weights))
    return float(total + tau_shift)


def lift_conditional(rho_tilde: Callable[[DiscreteDist], float], X, space: FiniteSpace,
                     partition=None) -> float:
    """Apply a law-invariant functional to the law of ``E[X | G]``."""
    return float(rho_tilde(distribution_of(cond_expectation(X, space, partition), space)))


def max_combine(a: float, b: float) -> float:
    return max(float(a), float(b))


# Monotone loss transforms for the multi-source entropic measure.
def _exp_loss(gamma: float):
    if gamma <= 0:
        raise ValueError("exponential loss needs gamma > 0")
    return lambda x: np.expm1(gamma * np.asarray(x, dtype=float)) / gamma


def _pwl_loss(slope: float):
    if slope < 0:
        raise ValueError("piecewise-linear loss needs a nonnegative slope")
    return lambda x: np.where(np.asarray(x) > 0, slope * np.asarray(x), np.asarray(x))


def loss_map(name: str) -> Callable[[np.ndarray], np.ndarray]:
    """Look up a monotone loss map: ``identity``, ``exp:<gamma>`` or ``pwl:<slope>``.

    ``pwl:k`` is the identity on losses below zero and has slope ``k`` above.
    """
    kind, _, arg = name.partition(":")
    if kind in ("identity", "id"):
        return lambda x: np.asarray(x, dtype=float)
    if kind == "exp":
        return _exp_loss(float(arg))
    if kind == "pwl":
        return _pwl_loss(float(arg))
    raise KeyError(f"unknown loss map {name!r}")


def partitions_independent(space: FiniteSpace, partitions, tol: float = 1e-10) -> bool:
    """Pairwise independence of partitions under the space's measure."""
    p = space.p.ravel()
    inv = [np.unique(np.asarray(lab), return_inverse=True)[1].ravel() for lab in partitions]
    for i in range(len(inv)):
        for j in range(i + 1, len(inv)):
            a, b = inv[i], inv[j]
            joint = np.zeros((a.max() + 1, b.max() + 1))
            np.add.at(joint, (a, b), p)
            outer = np.outer(joint.sum(axis=1), joint.sum(axis=0))
            if np.max(np.abs(joint - outer)) > tol:
                return False
    return True


def multi_source_er(X, space: FiniteSpace, partitions: Sequence, thetas: Sequence[float],
                    loss: Callable | str = "identity") -> float:
    """``max_i ER_{theta_i}(E[loss(X) | G_i])`` over pairwise independent sources."""
    if len(partitions) != len(thetas) or not partitions:
        raise ValueError("need one entropic parameter per partition")
    if not partitions_independent(space, partitions):
        raise ValueError("partitions are not pairwise independent")
    if isinstance(loss, str):
        loss = loss_map(loss)
    LX = loss(space._check(X))
    return max(er(cond_expectation(LX, space, part), space, th)
               for part, th in zip(partitions, thetas))


# Law-invariant functionals keyed by name, acting on a DiscreteDist.
def law_invariant_functional(name: str) -> Callable[[DiscreteDist], float]:
    """``mean``, ``es:<alpha>``, ``var:<alpha>`` or ``er:<beta>``."""
    kind, _, arg = name.partition(":")
    if kind == "mean" and not arg:
        return DiscreteDist.mean
    if kind == "es":
        a = check_level(float(arg))
        return lambda d: es_discrete(d, a)
    if kind == "var":
        a = check_level(float(arg))
        return lambda d: var_discrete(d, a)
    if kind == "er":
        b = _check_beta(float(arg))
        return lambda d: er_dist(d, b)
    raise KeyError(f"unknown risk functional {name!r}")
