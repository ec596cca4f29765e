"""Worst-case Expected Shortfall over models that agree with P on G.

``rho_beta = sup ES_alpha^mu`` over measures ``mu`` whose restriction to G is P
and whose density is bounded by ``1 / (1 - beta)``. It is computed as

    min_x  x + E[ES_beta((X - x)^+ | G)] / (1 - alpha)

both for a bivariate Gaussian loss model (G generated by the first asset) and
on finite spaces (G generated by the column index). The finite case also has
a direct linear-programming formulation over the two densities, used as an
independent check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .lp import LPError, linprog
from .measures import check_level, es_gaussian
from .numerics import adaptive_simpson, golden_section
from .space import FiniteSpace

BETA_MAX = 0.999
_SQRT2PI = np.sqrt(2.0 * np.pi)


def check_uncertainty(beta: float) -> float:
    beta = check_level(beta, "beta")
    if beta > BETA_MAX:
        raise ValueError(f"beta must be <= {BETA_MAX}, got {beta!r}")
    return beta


@dataclass(frozen=True)
class GaussianPair:
    """Bivariate Gaussian losses with equicorrelation ``c``."""

    m1: float
    m2: float
    sigma1: float
    sigma2: float
    c: float

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("sigma1 and sigma2 must be > 0")
        if not -1.0 < self.c < 1.0:
            raise ValueError("c must lie in (-1, 1)")

    def portfolio_mean(self, pi1: float) -> float:
        return pi1 * self.m1 + (1.0 - pi1) * self.m2

    def portfolio_std(self, pi1: float) -> float:
        pi2 = 1.0 - pi1
        var = ((pi1 * self.sigma1) ** 2 + (pi2 * self.sigma2) ** 2
               + 2.0 * self.c * pi1 * pi2 * self.sigma1 * self.sigma2)
        return float(np.sqrt(max(var, 0.0)))

    def cond_mean(self, pi1: float, z):
        """Mean of the portfolio loss given ``X1 = z``."""
        pi2 = 1.0 - pi1
        return (pi1 * z + pi2 * self.m2
                + self.c * pi2 * self.sigma2 / self.sigma1 * (np.asarray(z) - self.m1))

    def cond_std(self, pi1: float) -> float:
        return (1.0 - pi1) * np.sqrt(1.0 - self.c ** 2) * self.sigma2


@dataclass(frozen=True)
class Weights:
    pi1: float
    pi2: float

    def __post_init__(self):
        if self.pi1 < 0 or self.pi2 < 0 or abs(self.pi1 + self.pi2 - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")

    @classmethod
    def of(cls, w) -> "Weights":
        if isinstance(w, Weights):
            return w
        return cls(float(w), 1.0 - float(w))


@dataclass(frozen=True)
class RiskConfig:
    """Numerical settings for the Gaussian computations."""

    quad_tol: float = 1e-9
    x_tol: float = 1e-8
    quad_halfwidth: float = 10.0  # in units of sigma1
    bracket_halfwidth: float = 12.0  # in units of the portfolio std

    def __post_init__(self):
        if min(self.quad_tol, self.x_tol, self.quad_halfwidth, self.bracket_halfwidth) <= 0:
            raise ValueError("tolerances and widths must be > 0")


def g_beta(r, sigma: float, x: float, beta: float):
    """``ES_beta((Z - x)^+)`` for ``Z ~ Normal(r, sigma^2)``, vectorized over ``r``."""
    beta = check_uncertainty(beta)
    r = np.asarray(r, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return np.maximum(r - x, 0.0)
    q = ndtri(beta)
    u = (x - r) / sigma
    phi_u = np.exp(-0.5 * u * u) / _SQRT2PI
    tail = ((r - x) * ndtr(-u) + sigma * phi_u) / (1.0 - beta)
    if beta == 0:
        return tail
    head = r - x + sigma * np.exp(-0.5 * q * q) / _SQRT2PI / (1.0 - beta)
    return np.where(u <= q, head, tail)


def f_beta(model: GaussianPair, w, x: float, beta: float, quad_tol: float = 1e-9,
           halfwidth: float = 10.0) -> float:
    """``E[ES_beta((pi1 X1 + pi2 X2 - x)^+ | X1)]`` by adaptive quadrature in X1.

    The X1 integral is truncated to ``m1 +- halfwidth * sigma1``; at the
    default width the neglected Gaussian mass is below 2e-23.
    """
    w = Weights.of(w)
    s = model.cond_std(w.pi1)

    def integrand(u):
        z = model.m1 + model.sigma1 * u
        return g_beta(model.cond_mean(w.pi1, z), s, x, beta) * np.exp(-0.5 * u * u) / _SQRT2PI

    return adaptive_simpson(integrand, -halfwidth, halfwidth, tol=quad_tol)


def rho_beta_gaussian(model: GaussianPair, w, alpha: float, beta: float,
                      cfg: RiskConfig | None = None) -> tuple[float, float]:
    """Worst-case ES of the portfolio; returns ``(value, argmin x)``."""
    cfg = cfg or RiskConfig()
    alpha = check_level(alpha)
    beta = check_uncertainty(beta)
    w = Weights.of(w)
    mp = model.portfolio_mean(w.pi1)
    scale = max(model.portfolio_std(w.pi1), model.cond_std(w.pi1), 1e-12)
    half = cfg.bracket_halfwidth * scale

    def objective(x):
        return x + f_beta(model, w, x, beta, cfg.quad_tol, cfg.quad_halfwidth) / (1.0 - alpha)

    x, val = golden_section(objective, mp - half, mp + half, xtol=cfg.x_tol)
    return float(val), float(x)


def es_gaussian_portfolio(model: GaussianPair, w, alpha: float) -> float:
    """Closed-form ES of the (Gaussian) portfolio under P."""
    w = Weights.of(w)
    return es_gaussian(model.portfolio_mean(w.pi1), model.portfolio_std(w.pi1), alpha)


def _cond_es_weights(X, space: FiniteSpace, beta: float) -> np.ndarray:
    """Density ``W`` with ``E[W X | G] = ES_beta(X | G)``.

    Per column, the top ``1 - beta`` of conditional mass (by value of ``X``)
    gets density ``1 / (1 - beta)``, the rest zero, with one split atom.
    """
    beta = check_uncertainty(beta)
    X = space._check(X)
    if beta == 0:
        return np.ones(space.shape)
    q = space.column_probs()
    order = np.argsort(-X, axis=0, kind="stable")
    qs = np.take_along_axis(q, order, axis=0)
    before = np.cumsum(qs, axis=0) - qs
    take = np.clip((1.0 - beta) - before, 0.0, qs)
    W = np.empty(space.shape)
    np.put_along_axis(W, order, take / qs / (1.0 - beta), axis=0)
    return W


def worst_case_density(X, space: FiniteSpace, beta: float) -> np.ndarray:
    """A density in the uncertainty set that attains the conditional ES of ``X``
    (and of every ``(X - x)^+``)."""
    return _cond_es_weights(X, space, beta)


def cond_es_discrete(X, space: FiniteSpace, beta: float) -> np.ndarray:
    """Column-wise ES at level ``beta`` under the conditional row probabilities."""
    W = _cond_es_weights(X, space, beta)
    col = np.sum(space.column_probs() * W * X, axis=0)
    return np.broadcast_to(col, space.shape).copy()


def rho_beta_discrete(X, space: FiniteSpace, alpha: float, beta: float) -> float:
    return rho_beta_discrete_argmin(X, space, alpha, beta)[0]


def rho_beta_discrete_argmin(X, space: FiniteSpace, alpha: float,
                             beta: float) -> tuple[float, float]:
    """Exact minimum (and a minimizing ``x``) of the piecewise-linear convex objective.

    ``(X - x)^+`` keeps the within-column ordering of ``X``, so the
    conditional-ES weights do not depend on ``x`` and the objective is
    ``x + E[W (X - x)^+] / (1 - alpha)``; it is evaluated at every value of
    ``X`` with suffix sums.
    """
    alpha = check_level(alpha)
    X = space._check(X)
    wq = (space.p * _cond_es_weights(X, space, beta)).ravel()
    v = X.ravel()
    order = np.argsort(v, kind="stable")
    v, wq = v[order], wq[order]
    s0 = np.concatenate((np.cumsum(wq[::-1])[::-1][1:], [0.0]))
    s1 = np.concatenate((np.cumsum((wq * v)[::-1])[::-1][1:], [0.0]))
    obj = v + (s1 - v * s0) / (1.0 - alpha)
    i = int(np.argmin(obj))
    return float(obj[i]), float(v[i])


def rho_beta_lp(X, space: FiniteSpace, alpha: float, beta: float) -> float:
    """Worst-case ES as a linear program over ``(d_nu, d_mu)``.

    maximize ``E[d_nu X]`` subject to ``(1 - alpha) d_nu <= d_mu``,
    ``E[d_nu] = 1``, ``0 <= d_mu <= 1 / (1 - beta)`` and ``E[d_mu | G] = 1``.
    """
    alpha = check_level(alpha)
    beta = check_uncertainty(beta)
    X = space._check(X)
    M, N = space.shape
    K = M * N
    if K > 400:
        raise ValueError(f"LP oracle limited to M*N <= 400, got {K}")
    p = space.p.ravel()
    A_ub = np.hstack([(1.0 - alpha) * np.eye(K), -np.eye(K)])
    b_ub = np.zeros(K)
    # Rows scaled by K so the coefficients are O(1).
    A_eq = np.zeros((1 + N, 2 * K))
    A_eq[0, :K] = K * p
    cols = np.tile(np.arange(N), M)
    for n in range(N):
        A_eq[1 + n, K:][cols == n] = K * p[cols == n]
    b_eq = np.concatenate(([K], K * space.p.sum(axis=0)))
    bounds = [(0.0, None)] * K + [(0.0, 1.0 / (1.0 - beta))] * K
    c = np.concatenate([-(p * X.ravel()), np.zeros(K)])
    res = linprog(c, A_ub, b_ub, A_eq, b_eq, bounds)
    if not res.success:
        raise LPError(f"worst-case ES LP failed with status {res.status}")
    return -res.fun


def discretize_gaussian_pair(model: GaussianPair, w, M: int, N: int):
    """Grid approximation of the portfolio loss on a uniform ``M x N`` space.

    Columns are equal-probability bins of X1 and rows equal-probability bins
    of the independent residual of X2 given X1; each bin is represented by its
    conditional mean. Returns ``(space, loss)``.
    """
    w = Weights.of(w)

    def bin_means(k):
        edges = ndtri(np.linspace(0.0, 1.0, k + 1))
        dens = np.exp(-0.5 * edges ** 2) / _SQRT2PI
        return (dens[:-1] - dens[1:]) * k

    u1 = bin_means(N)[None, :]
    u2 = bin_means(M)[:, None]
    x1 = model.m1 + model.sigma1 * u1
    x2 = model.m2 + model.sigma2 * (model.c * u1 + np.sqrt(1.0 - model.c ** 2) * u2)
    loss = w.pi1 * x1 + w.pi2 * x2
    return FiniteSpace.uniform(M, N), np.broadcast_to(loss, (M, N)).copy()
