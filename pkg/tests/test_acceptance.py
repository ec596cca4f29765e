"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line with its runtime,
outside pytest's output capture, so the verdicts are visible in a plain run.
"""
import time
from contextlib import contextmanager

import numpy as np
import pytest

from plirisk.finite_rep import check_g_law_invariance, check_strong_invariance, skewed_max_support
from plirisk.measures import (
    er,
    er_conditional,
    er_mean_of_cond,
    er_of_cond_mean,
    es_gaussian,
)
from plirisk.partial_es import (
    GaussianPair,
    discretize_gaussian_pair,
    rho_beta_discrete,
    rho_beta_gaussian,
)
from plirisk.portfolio import argmin_weight
from plirisk.space import FiniteSpace, distribution_of, from_columns
from plirisk.verify import adjustments, coherence, invariance, oracle

ALPHA = 0.95


def fig1(m2=0.0):
    return GaussianPair(0.0, m2, 0.1, 0.1, 0.5)


@pytest.fixture
def criterion(capsys, request):
    @contextmanager
    def run(label, budget):
        t = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            dt = time.perf_counter() - t
            ok = ok and dt < budget
            with capsys.disabled():
                print(f"\n{label}: {'PASS' if ok else 'FAIL'} ({dt:.1f}s, budget {budget:g}s)")
        assert dt < budget, f"{label} took {dt:.1f}s, budget {budget}s"
    return run


def test_criterion_1_beta_zero_closed_form(criterion):
    with criterion("criterion 1 beta=0 closed form", 10):
        model = fig1()
        for w in np.linspace(0, 1, 11):
            got = rho_beta_gaussian(model, w, ALPHA, 0.0)[0]
            want = es_gaussian(model.portfolio_mean(w), model.portfolio_std(w), ALPHA)
            assert abs(got - want) <= 1e-4, (w, got, want)


def test_criterion_2_endpoint_anchor(criterion):
    with criterion("criterion 2 endpoint anchor", 30):
        want = es_gaussian(0.0, 0.1, ALPHA)
        for b in (0.0, 0.25, 0.5, 0.75, 0.95):
            got = rho_beta_gaussian(fig1(), 1.0, ALPHA, b)[0]
            assert abs(got - want) <= 1e-6, (b, got, want)


def test_criterion_3_optimizer_shape(criterion):
    betas = (0.0, 0.25, 0.5, 0.75, 0.9, 0.95)
    with criterion("criterion 3 optimizer shape", 300):
        even = [argmin_weight(fig1(0.0), ALPHA, b)[0] for b in betas]
        skew = [argmin_weight(fig1(-0.1), ALPHA, b)[0] for b in betas]
        assert abs(even[0] - 0.5) <= 0.02, even
        assert all(b >= a - 1e-3 for a, b in zip(even, even[1:])), even
        assert even[-1] >= 0.9, even
        assert all(b >= a - 1e-3 for a, b in zip(skew, skew[1:])), skew
        assert skew[-1] > skew[0], skew
        assert all(s <= e + 0.02 for s, e in zip(skew, even)), (skew, even)


def test_criterion_4_oracle_equivalence(criterion):
    with criterion("criterion 4 LP oracle equivalence", 120):
        res = oracle(seed=2024, instances=60, tol=1e-8)
        assert res.checks == 60
        assert res.passed, res.failures[:3]


def test_criterion_5_discretization(criterion):
    pairs = [(a, b) for a in (0.9, 0.95) for b in (0.0, 0.5, 0.95)]
    with criterion("criterion 5 200x200 discretization", 120):
        model = fig1()
        for w in (0.5, 0.8):
            space, L = discretize_gaussian_pair(model, w, 200, 200)
            for a, b in pairs:
                d = rho_beta_discrete(L, space, a, b)
                g = rho_beta_gaussian(model, w, a, b)[0]
                assert abs(d - g) <= 5e-3, (w, a, b, d, g)


def test_criterion_6_representation_suite(criterion):
    with criterion("criterion 6 representation suite", 180):
        inv = invariance(seed=7, instances=200)
        assert inv.passed, inv.failures[:3]
        assert inv.checks >= 200
        adj = adjustments(seed=7, instances=50, tol=1e-9)
        assert adj.passed, adj.failures[:3]
        S = skewed_max_support(4, 4)
        assert check_g_law_invariance(S).invariant
        r = check_strong_invariance(S, trials=1000)
        assert not r.strong
        w = r.witness
        assert abs(w["rho_ZX"] - w["rho_ZY"]) > 1e-9


def test_criterion_7_entropic_identities(criterion):
    tol = 1e-9
    with criterion("criterion 7 entropic identities", 30):
        rng = np.random.default_rng(11)
        for _ in range(50):
            M, N = rng.integers(1, 6, size=2)
            sp = FiniteSpace.random(int(M), int(N), rng)
            beta = float(np.exp(rng.uniform(-2, 1.5)))
            G = from_columns(rng.normal(size=N), int(M))
            assert abs(er_mean_of_cond(G, sp, beta) - sp.expect(G)) <= tol
            assert abs(er_of_cond_mean(G, sp, beta) - er(G, sp, beta)) <= tol
            X = rng.normal(size=sp.shape)
            assert abs(er(er_conditional(X, sp, beta), sp, beta) - er(X, sp, beta)) <= tol
            # same within-column law in every column, uniform column weights
            sp_u = FiniteSpace(np.tile(rng.dirichlet(np.ones(M))[:, None], (1, N)) / N)
            Y = np.tile(rng.normal(size=(int(M), 1)), (1, int(N)))
            assert abs(er_mean_of_cond(Y, sp_u, beta) - er(Y, sp_u, beta)) <= tol
            assert abs(er_of_cond_mean(Y, sp_u, beta) - sp_u.expect(Y)) <= tol
        sp = FiniteSpace.uniform(2, 2)
        X = np.array([[0.0, 1.0], [0.0, 1.0]])
        Y = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert distribution_of(X, sp).atoms == distribution_of(Y, sp).atoms
        assert er_mean_of_cond(X, sp, 1.0) < er_mean_of_cond(Y, sp, 1.0) - tol
        assert er_of_cond_mean(X, sp, 1.0) > er_of_cond_mean(Y, sp, 1.0) + tol


def test_criterion_8_coherence(criterion):
    with criterion("criterion 8 coherence axioms", 60):
        res = coherence(seed=99, instances=1000, tol=1e-8)
        assert res.checks == 16000
        assert res.passed, res.failures[:3]
