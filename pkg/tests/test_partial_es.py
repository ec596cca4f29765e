import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from plirisk.measures import es_discrete, es_gaussian
from plirisk.partial_es import (
    GaussianPair,
    RiskConfig,
    Weights,
    cond_es_discrete,
    discretize_gaussian_pair,
    es_gaussian_portfolio,
    f_beta,
    g_beta,
    rho_beta_discrete,
    rho_beta_discrete_argmin,
    rho_beta_gaussian,
    rho_beta_lp,
    worst_case_density,
)
from plirisk.space import FiniteSpace, cond_expectation, distribution_of, from_columns

from conftest import spaces_and_fields

FIG = GaussianPair(0.0, 0.0, 0.1, 0.1, 0.5)
ALPHA = 0.95


def _mc_es(samples, beta):
    """Empirical ES: mean of the top (1 - beta) fraction."""
    s = np.sort(samples)
    return s[int(round(beta * s.size)):].mean()


def _partial_expectation(m, s, x):
    """E[(Z - x)^+] for Z ~ Normal(m, s^2)."""
    if s == 0:
        return max(m - x, 0.0)
    u = (m - x) / s
    return (m - x) * norm.cdf(u) + s * norm.pdf(u)


@pytest.fixture(scope="module")
def normals():
    return np.random.default_rng(2024).standard_normal(10_000_000)


def test_g_beta_monte_carlo(normals):
    frozen = 10.797884560802865  # 10 + phi(0) / 0.5
    assert g_beta(0.0, 1.0, -10.0, 0.5) == pytest.approx(frozen, abs=1e-12)
    mc = _mc_es(np.maximum(normals + 10.0, 0.0), 0.5)
    assert abs(g_beta(0.0, 1.0, -10.0, 0.5) - mc) <= 2e-3
    assert g_beta(0.0, 1.0, 8.0, 0.5) <= 1e-4
    assert _mc_es(np.maximum(normals - 8.0, 0.0), 0.5) <= 1e-4


@pytest.mark.parametrize("r, sigma, x, beta", [
    (0.3, 0.7, 0.1, 0.6),   # cutoff inside the Gaussian body
    (0.0, 1.0, 1.5, 0.5),   # cutoff in the tail
    (-0.2, 2.0, 0.4, 0.0),
    (1.0, 0.5, 1.2, 0.9),
])
def test_g_beta_branches_monte_carlo(normals, r, sigma, x, beta):
    mc = _mc_es(np.maximum(r + sigma * normals - x, 0.0), beta)
    assert abs(g_beta(r, sigma, x, beta) - mc) <= 2e-3 * max(1.0, sigma)


def test_g_beta_degenerate_and_vectorized():
    assert g_beta(1.0, 0.0, 0.0, 0.7) == 1.0
    assert g_beta(1.0, 0.0, 2.0, 0.7) == 0.0
    r = np.linspace(-3, 3, 7)
    assert np.allclose(g_beta(r, 0.8, 0.2, 0.4), [g_beta(v, 0.8, 0.2, 0.4) for v in r])
    with pytest.raises(ValueError):
        g_beta(0.0, 1.0, 0.0, 0.9995)


def test_g_beta_continuous_at_cutoff():
    q = norm.ppf(0.8)
    x = 0.5 + 1.3 * q
    lo = g_beta(0.5, 1.3, x - 1e-9, 0.8)
    hi = g_beta(0.5, 1.3, x + 1e-9, 0.8)
    assert abs(lo - hi) < 1e-8


def test_f_beta_single_asset():
    for x in (-0.2, 0.0, 0.15):
        for beta in (0.0, 0.5, 0.95):
            assert f_beta(FIG, 1.0, x, beta) == pytest.approx(_partial_expectation(0.0, 0.1, x), abs=1e-9)


def test_f_beta_reference_model():
    for pi1 in (0.0, 0.3, 0.5):
        m, s = FIG.portfolio_mean(pi1), FIG.portfolio_std(pi1)
        for x in (-0.1, 0.05, 0.2):
            assert f_beta(FIG, pi1, x, 0.0) == pytest.approx(_partial_expectation(m, s, x), abs=1e-9)


def test_f_beta_vanishing_tail():
    w = 0.4
    x = FIG.portfolio_mean(w) + 12 * FIG.portfolio_std(w)
    assert f_beta(FIG, w, x, 0.5) <= 1e-6


def test_rho_at_zero_uncertainty():
    v, _ = rho_beta_gaussian(FIG, 0.5, ALPHA, 0.0)
    assert v == pytest.approx(es_gaussian(0.0, 0.1 * math.sqrt(0.75), ALPHA), abs=1e-8)
    assert v == pytest.approx(0.17864, abs=1e-5)


@pytest.mark.parametrize("beta", [0.0, 0.3, 0.95, 0.999])
def test_rho_full_weight_on_first_asset(beta):
    v, x = rho_beta_gaussian(FIG, 1.0, ALPHA, beta)
    assert v == pytest.approx(es_gaussian(0.0, 0.1, ALPHA), abs=1e-8)
    assert x == pytest.approx(0.1 * norm.ppf(ALPHA), abs=1e-5)


def test_rho_nondecreasing_in_beta():
    for w in (0.0, 0.3, 0.7):
        vals = [rho_beta_gaussian(FIG, w, ALPHA, b)[0] for b in (0, 0.25, 0.5, 0.75, 0.9, 0.95)]
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


def test_rho_objective_is_convex():
    w, beta = 0.3, 0.7
    xs = np.linspace(-0.1, 0.4, 41)
    obj = np.array([x + f_beta(FIG, w, x, beta) / (1 - ALPHA) for x in xs])
    assert np.min(obj[2:] - 2 * obj[1:-1] + obj[:-2]) >= -1e-7


def test_rho_config_validation():
    with pytest.raises(ValueError):
        RiskConfig(quad_tol=0.0)
    with pytest.raises(ValueError):
        GaussianPair(0, 0, 0.1, 0.1, 1.0)
    with pytest.raises(ValueError):
        Weights(0.5, 0.6)


def test_es_gaussian_portfolio():
    assert es_gaussian_portfolio(FIG, 0.5, ALPHA) == pytest.approx(0.1 * math.sqrt(0.75) * 2.062712807507, abs=1e-9)


def test_cond_es_examples(rng):
    sp = FiniteSpace.random(3, 4, rng)
    X = rng.normal(size=(3, 4))
    assert np.allclose(cond_es_discrete(X, sp, 0.0), cond_expectation(X, sp))
    G = from_columns(rng.normal(size=4), 3)
    assert np.allclose(cond_es_discrete(G, sp, 0.8), G)
    two = FiniteSpace.uniform(2, 1)
    assert np.allclose(cond_es_discrete(np.array([[0.0], [1.0]]), two, 0.5), 1.0)


def test_worst_case_density_is_admissible(rng):
    sp = FiniteSpace.random(4, 3, rng)
    X = rng.normal(size=(4, 3))
    W = worst_case_density(X, sp, 0.6)
    assert W.max() <= 1 / 0.4 + 1e-12 and W.min() >= 0
    assert np.allclose(cond_expectation(W, sp), 1.0)
    assert sp.expect(W * X) == pytest.approx(sp.expect(cond_es_discrete(X, sp, 0.6)))


def test_rho_discrete_examples(rng):
    sp = FiniteSpace.random(3, 4, rng)
    X = rng.normal(size=(3, 4))
    d = distribution_of(X, sp)
    assert rho_beta_discrete(X, sp, 0.7, 0.0) == pytest.approx(es_discrete(d, 0.7), abs=1e-12)
    assert rho_beta_discrete(X, sp, 0.0, 0.6) == pytest.approx(sp.expect(cond_es_discrete(X, sp, 0.6)), abs=1e-12)
    G = from_columns(rng.normal(size=4), 3)
    for beta in (0.0, 0.5, 0.9):
        assert rho_beta_discrete(G, sp, 0.5, beta) == pytest.approx(es_discrete(distribution_of(G, sp), 0.5), abs=1e-12)


def test_rho_discrete_argmin_attains_value(rng):
    sp = FiniteSpace.random(3, 3, rng)
    X = rng.normal(size=(3, 3))
    v, x = rho_beta_discrete_argmin(X, sp, 0.8, 0.4)
    W = worst_case_density(X, sp, 0.4)
    assert v == pytest.approx(x + sp.expect(W * np.maximum(X - x, 0)) / 0.2, abs=1e-12)


def test_rho_lp_examples(rng):
    sp = FiniteSpace.random(3, 4, rng)
    X = rng.normal(size=(3, 4))
    assert rho_beta_lp(X, sp, 0.0, 0.0) == pytest.approx(sp.expect(X), abs=1e-9)
    G = from_columns(rng.normal(size=4), 3)
    assert rho_beta_lp(G, sp, 0.5, 0.7) == pytest.approx(es_discrete(distribution_of(G, sp), 0.5), abs=1e-9)
    with pytest.raises(ValueError):
        rho_beta_lp(np.zeros((21, 20)), FiniteSpace.uniform(21, 20), 0.5, 0.5)


def test_rho_lp_matches_closed_form(rng):
    worst = 0.0
    for i in range(30):
        M, N = (int(v) for v in rng.integers(1, 9, size=2))
        sp = FiniteSpace.random(M, N, rng)
        X = rng.normal(size=(M, N))
        if i % 2:
            X = np.round(X)
        for a in (0.0, 0.5, 0.9):
            for b in (0.0, 0.5, 0.9):
                worst = max(worst, abs(rho_beta_lp(X, sp, a, b) - rho_beta_discrete(X, sp, a, b)))
    assert worst <= 1e-8


def test_not_fully_law_invariant():
    sp = FiniteSpace.uniform(2, 2)
    X = np.array([[0.0, 1.0], [0.0, 1.0]])
    Y = np.array([[0.0, 0.0], [1.0, 1.0]])
    for alpha, beta in [(0.0, 0.5), (0.25, 0.3), (0.4, 0.9)]:
        assert rho_beta_discrete(X, sp, alpha, beta) < rho_beta_discrete(Y, sp, alpha, beta) - 1e-6


def test_discretization_shape():
    sp, L = discretize_gaussian_pair(FIG, 0.5, 5, 7)
    assert sp.shape == (5, 7) and L.shape == (5, 7)
    assert sp.expect(L) == pytest.approx(0.0, abs=1e-12)


def _levels():
    return st.sampled_from([0.0, 0.3, 0.5, 0.9, 0.95])


@settings(max_examples=150, deadline=None)
@given(spaces_and_fields(count=2), _levels(), _levels(), st.floats(-5, 5), st.floats(0.1, 10))
def test_rho_is_coherent(data, alpha, beta, c, lam):
    sp, (X, Y) = data
    rho = lambda Z: rho_beta_discrete(Z, sp, alpha, beta)
    scale = max(1.0, np.abs(X).max(), np.abs(Y).max()) * max(1.0, lam)
    tol = 1e-8 * scale
    assert abs(rho(X + c) - rho(X) - c) <= tol
    assert abs(rho(lam * X) - lam * rho(X)) <= tol
    assert rho(np.minimum(X, Y)) <= rho(X) + tol
    assert rho(X + Y) <= rho(X) + rho(Y) + tol


@settings(max_examples=150, deadline=None)
@given(spaces_and_fields(count=1), _levels(), _levels())
def test_rho_sandwich(data, alpha, beta):
    sp, (X,) = data
    v = rho_beta_discrete(X, sp, alpha, beta)
    top = es_discrete(distribution_of(X, sp), 1 - (1 - alpha) * (1 - beta))
    assert sp.expect(X) - 1e-9 <= v <= top + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(0, 2**32 - 1), _levels(), _levels())
def test_rho_partial_law_invariance(M, N, seed, alpha, beta):
    rng = np.random.default_rng(seed)
    sp = FiniteSpace.random(M, N, rng)
    G = from_columns(rng.normal(size=N), M)
    H = G[:, rng.permutation(N)]
    assert abs(rho_beta_discrete(G, sp, alpha, beta) - rho_beta_discrete(H, sp, alpha, beta)) <= 1e-9
