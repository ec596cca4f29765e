import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plirisk.finite_rep import (
    ProjectedSet,
    SupportSet,
    box_density_vertices,
    check_g_law_invariance,
    check_multi_source,
    check_strong_invariance,
    coherent_adjustment,
    es_dual_support,
    expectation_support,
    hull_membership,
    is_perm_invariant,
    l_map,
    lifted_es_support,
    lifted_support,
    permutation_report,
    random_support,
    reconstruct,
    row_es_support,
    skewed_max_support,
    support_eval,
    symmetrize,
)
from plirisk.measures import es_discrete, es_quantile_avg
from plirisk.space import (
    FiniteSpace,
    cond_expectation,
    distribution_of,
    from_columns,
    in_kernel,
    row_partition,
    same_distribution,
)


def test_support_set_validation():
    sp = FiniteSpace.uniform(2, 2)
    with pytest.raises(ValueError):
        SupportSet(sp, np.full((1, 2, 2), 2.0))
    S = SupportSet(sp, np.stack([np.ones((2, 2)), np.ones((2, 2)) + 1e-12]))
    assert len(S) == 1
    with pytest.raises(ValueError):
        ProjectedSet([[2.0, 2.0]])


def test_support_eval_examples(rng):
    sp = FiniteSpace.random(3, 3, rng)
    X = rng.normal(size=(3, 3))
    assert support_eval(expectation_support(sp), X) == pytest.approx(sp.expect(X))
    S = random_support(sp, 4, rng)
    assert support_eval(S, np.zeros((3, 3))) == 0.0


@pytest.mark.parametrize("alpha", [0.0, 0.3, 0.5, 0.75])
def test_es_dual_vertices_reproduce_es(rng, alpha):
    for _ in range(10):
        sp = FiniteSpace.random(2, 3, rng)
        S = es_dual_support(sp, alpha)
        X = np.round(rng.normal(size=(2, 3)) * 2)
        d = distribution_of(X, sp)
        assert support_eval(S, X) == pytest.approx(es_quantile_avg(d, alpha), abs=1e-10)


def test_es_dual_on_small_grid(grid22):
    sp, X = grid22
    assert support_eval(es_dual_support(sp, 0.5), X) == pytest.approx(6.0)
    assert es_discrete(distribution_of(X, sp), 0.5) == pytest.approx(6.0)


def test_box_vertices():
    V = box_density_vertices(np.full(4, 0.25), 2.0)
    assert len(V) == 6  # choose two of four cells
    assert np.allclose(V @ np.full(4, 0.25), 1.0)
    with pytest.raises(ValueError):
        box_density_vertices(np.full(4, 0.25), 0.5)


def test_l_map_examples():
    sp = FiniteSpace.uniform(3, 4)
    assert np.allclose(l_map(expectation_support(sp)).vertices, [[1, 1, 1, 1]])
    v = np.array([0.5, 1.5, 1.0, 1.0])
    assert np.allclose(l_map(lifted_support(sp, [v])).vertices, [v])
    d = np.zeros((3, 4))
    d[:, 2] = 4.0
    assert np.allclose(l_map(SupportSet(sp, d)).vertices, [[0, 0, 4, 0]])


def test_l_map_is_linear(rng):
    sp = FiniteSpace.random(3, 4, rng)
    S = random_support(sp, 2, rng)
    lam = 0.3
    mix = lam * S.vertices[0] + (1 - lam) * S.vertices[1]
    L = l_map(S).vertices
    assert np.allclose(l_map(SupportSet(sp, mix)).vertices[0], lam * L[0] + (1 - lam) * L[1], atol=1e-12)


def test_hull_membership_certificate():
    P = np.array([[2.0, 0.0], [1.0, 1.0]])
    member, _, _ = hull_membership(P, np.array([1.5, 0.5]))
    assert member
    member, y, gap = hull_membership(P, np.array([0.0, 2.0]))
    assert not member and gap > 0
    assert y @ np.array([0.0, 2.0]) > np.max(P @ y) + 1e-9


def test_permutation_invariance_examples():
    assert is_perm_invariant(ProjectedSet([[1.0, 1.0, 1.0]]))
    assert not is_perm_invariant(ProjectedSet([[2.0, 0.0]]))
    sp = FiniteSpace.uniform(2, 3)
    assert is_perm_invariant(l_map(es_dual_support(sp, 0.5)))


def test_permutation_sampling_above_cap():
    P = ProjectedSet(np.ones((1, 9)))
    r = permutation_report(P)
    assert r.invariant and r.sampled and r.checked == 500


def test_invariance_examples():
    r = check_g_law_invariance(lifted_es_support(FiniteSpace.uniform(2, 4), 0.5))
    assert r.invariant and r.behavioral
    r = check_g_law_invariance(expectation_support(FiniteSpace.uniform(2, 2)))
    assert r.invariant and r.consistent


def test_invariance_witness():
    S = lifted_support(FiniteSpace.uniform(1, 3), [[2.0, 0.5, 0.5]])
    r = check_g_law_invariance(S)
    assert not r.invariant and not r.behavioral
    X, Y = r.witness
    assert same_distribution(X, Y, S.space)
    assert support_eval(S, X) < support_eval(S, Y) - 1e-9


def test_structural_and_behavioural_verdicts_agree(rng):
    for i in range(60):
        sp = FiniteSpace.random(int(rng.integers(1, 4)), int(rng.integers(1, 5)), rng)
        S = random_support(sp, int(rng.integers(1, 4)), rng, symmetric=i % 2 == 0, interior=i % 3)
        assert check_g_law_invariance(S, pairs=500, seed=i).consistent


def test_symmetrize_gives_invariance(rng):
    sp = FiniteSpace.random(2, 3, rng)
    S = random_support(sp, 2, rng)
    assert check_g_law_invariance(symmetrize(S)).invariant


def test_adjustment_examples(rng):
    sp = FiniteSpace.random(3, 3, rng)
    S = random_support(sp, 3, rng)
    mu = l_map(S).vertices[0]
    G = from_columns(rng.normal(size=3), 3)
    assert coherent_adjustment(S, mu, G) == pytest.approx(0.0, abs=1e-10)
    single = SupportSet(sp, S.vertices[:1])
    X = rng.normal(size=(3, 3))
    mu1 = l_map(single).vertices[0]
    # the adjustment measures the within-column tilt of the single vertex
    tilt = sp.expect(S.vertices[0] * X) - sp.expect(mu1[None, :] * X)
    assert coherent_adjustment(single, mu1, X) == pytest.approx(tilt, abs=1e-10)
    uniform = expectation_support(sp)
    assert coherent_adjustment(uniform, np.ones(3), X) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        coherent_adjustment(single, np.array([3.0, 0.0, 0.0]), X)


def test_reconstruction(rng):
    for _ in range(20):
        sp = FiniteSpace.random(3, 3, rng)
        S = random_support(sp, int(rng.integers(1, 5)), rng, interior=1)
        X = rng.normal(size=(3, 3))
        assert reconstruct(S, X) == pytest.approx(support_eval(S, X), abs=1e-9)


def test_strong_invariance_examples():
    assert check_strong_invariance(lifted_es_support(FiniteSpace.uniform(3, 4), 0.5), trials=10_000)
    assert check_strong_invariance(expectation_support(FiniteSpace.uniform(3, 3)))
    S = skewed_max_support(4, 4)
    r = check_strong_invariance(S)
    assert not r.strong
    w = r.witness
    assert in_kernel(w["Z"], S.space)
    assert same_distribution(w["X"], w["Y"], S.space)
    assert abs(w["rho_ZX"] - w["rho_ZY"]) > 1e-9
    assert check_g_law_invariance(S).invariant


def test_strong_implies_partial(rng):
    for i in range(40):
        sp = FiniteSpace.random(2, 3, rng)
        S = random_support(sp, 2, rng, symmetric=i % 2 == 0)
        if check_strong_invariance(S, trials=200, seed=i):
            assert check_g_law_invariance(S).invariant


def test_multi_source_checks():
    sp = FiniteSpace.uniform(2, 3)
    rows = row_partition(sp)
    assert check_multi_source(expectation_support(sp), [None, rows]) == [True, True]
    sq = FiniteSpace.uniform(2, 2)
    assert check_multi_source(es_dual_support(sq, 0.5), [None, row_partition(sq)]) == [True, True]
    combined = lifted_es_support(sq, 0.5).union(row_es_support(sq, 0.5))
    assert check_multi_source(combined, [None, row_partition(sq)]) == [True, True]
    assert check_multi_source(lifted_support(sq, [[1.5, 0.5]]), [None, row_partition(sq)]) == [False, True]


def test_unequal_cells_rejected(rng):
    sp = FiniteSpace.random(3, 2, rng)
    with pytest.raises(ValueError, match="equal probability"):
        l_map(expectation_support(sp), row_partition(sp))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(0.1, 10))
def test_support_eval_is_coherent(seed, c, lam):
    rng = np.random.default_rng(seed)
    sp = FiniteSpace.random(int(rng.integers(1, 4)), int(rng.integers(1, 4)), rng)
    S = random_support(sp, int(rng.integers(1, 5)), rng)
    X, Y = rng.normal(size=(2, *sp.shape))
    rho = lambda Z: support_eval(S, Z)
    tol = 1e-9 * max(1.0, lam)
    assert abs(rho(X + c) - rho(X) - c) <= tol
    assert abs(rho(lam * X) - lam * rho(X)) <= tol * 10
    assert rho(np.minimum(X, Y)) <= rho(X) + tol
    assert rho(X + Y) <= rho(X) + rho(Y) + tol


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_adjustment_axioms(seed):
    rng = np.random.default_rng(seed)
    sp = FiniteSpace.random(int(rng.integers(1, 4)), int(rng.integers(1, 4)), rng)
    S = random_support(sp, int(rng.integers(1, 4)), rng)
    P = l_map(S).vertices
    mu = rng.dirichlet(np.ones(len(P))) @ P
    tau = lambda Z: coherent_adjustment(S, mu, Z)
    Emu = lambda Z: sp.expect(mu[None, :] * Z)
    X, Y = rng.normal(size=(2, *sp.shape))
    G = from_columns(rng.normal(size=sp.N), sp.M)
    assert tau(X + G) == pytest.approx(tau(X), abs=1e-9)
    lam = float(rng.uniform())
    assert tau(lam * X + (1 - lam) * Y) <= lam * tau(X) + (1 - lam) * tau(Y) + 1e-9
    assert tau(2.5 * X) == pytest.approx(2.5 * tau(X), abs=1e-9)
    up = X + np.abs(rng.normal(size=sp.shape))
    assert Emu(X) + tau(X) <= Emu(up) + tau(up) + 1e-9
