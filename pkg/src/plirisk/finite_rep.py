"""Supporting sets of coherent risk measures on a finite product space.

A coherent risk measure on ``[M] x [N]`` is the support function of a convex
set of densities; here that set is given by finitely many vertices. Partial
law invariance (invariance under equal laws of G-measurable losses) is decided
structurally: project every vertex onto its per-column conditional means and
test whether the projected polytope is closed under permutations of the
columns. The same question is also answered behaviourally by evaluating the
risk measure on random equally distributed pairs.

All functions accept an optional ``partition`` label array replacing the
column sigma-algebra; its cells must carry equal probability.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .lp import linprog
from .space import FiniteSpace, cell_masses, cond_expectation, validate_density

TOL = 1e-9
DEDUP_TOL = 1e-10
EXACT_MAX_CELLS = 8
SAMPLED_PERMUTATIONS = 500


def _dedup(rows: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    keep = []
    for r in rows:
        if not any(np.max(np.abs(r - k)) <= tol for k in keep):
            keep.append(r)
    return np.array(keep)


@dataclass(frozen=True)
class SupportSet:
    """Vertices (densities) generating a polytope of probability measures."""

    space: FiniteSpace
    vertices: np.ndarray = field(repr=False)

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim == 2:
            V = V[None]
        if V.ndim != 3 or V.shape[0] == 0:
            raise ValueError("vertices must be a non-empty stack of M x N densities")
        V = np.array([validate_density(d, self.space) for d in V])
        flat = _dedup(V.reshape(V.shape[0], -1))
        object.__setattr__(self, "vertices", flat.reshape(-1, *self.space.shape))

    def __len__(self):
        return self.vertices.shape[0]

    def union(self, other: "SupportSet") -> "SupportSet":
        """Generators of ``conv(S1 u S2)``, the supporting set of ``max(rho1, rho2)``."""
        if other.space.shape != self.space.shape or not np.allclose(other.space.p, self.space.p):
            raise ValueError("support sets live on different spaces")
        return SupportSet(self.space, np.concatenate([self.vertices, other.vertices]))


@dataclass(frozen=True)
class ProjectedSet:
    """Vertices of ``L(S)``: nonnegative vectors over the cells, averaging to one."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if np.any(V < -DEDUP_TOL) or np.any(np.abs(V.mean(axis=1) - 1.0) > 1e-10):
            raise ValueError("projected vertices must be nonnegative with mean 1")
        object.__setattr__(self, "vertices", _dedup(V))

    @property
    def n_cells(self) -> int:
        return self.vertices.shape[1]


def support_eval(S: SupportSet, X) -> float:
    """``max_mu E[D_mu X]`` over the vertices (equal to the max over the hull)."""
    X = S.space._check(X)
    return float(np.max(np.einsum("kmn,mn->k", S.vertices, S.space.p * X)))


def support_eval_many(S: SupportSet, Xs) -> np.ndarray:
    """Vectorized :func:`support_eval` over a stack of fields ``(k, M, N)``."""
    Xs = np.asarray(Xs, dtype=float)
    vals = np.einsum("vmn,kmn->kv", S.vertices * S.space.p, Xs)
    return vals.max(axis=1)


def _labels(space: FiniteSpace, partition):
    if partition is None:
        labels = np.broadcast_to(np.arange(space.N), space.shape)
    else:
        labels = np.unique(np.asarray(partition), return_inverse=True)[1].reshape(space.shape)
    mass = cell_masses(space, labels)
    if np.max(np.abs(mass - 1.0 / mass.size)) > 1e-12:
        raise ValueError("partition cells must have equal probability")
    return labels, mass.size


def lift(values, labels) -> np.ndarray:
    """Cell-constant field taking ``values[k]`` on cell ``k``."""
    return np.asarray(values, dtype=float)[labels]


def l_map(S: SupportSet, partition=None) -> ProjectedSet:
    """Per-cell conditional means of every vertex density."""
    labels, K = _labels(S.space, partition)
    first = np.array([np.flatnonzero(labels.ravel() == k)[0] for k in range(K)])
    proj = [cond_expectation(d, S.space, labels).ravel()[first] for d in S.vertices]
    return ProjectedSet(np.array(proj))


def hull_membership(points: np.ndarray, w: np.ndarray, tol: float = TOL):
    """Decide ``w in conv(points)``.

    Minimizes the L1 residual ``|P.T lam - w|_1`` over the simplex. Its dual
    is ``max y.w - max_i y.v_i`` over ``|y| <= 1``, so the equality-row
    multipliers give a separating direction ``y`` (Farkas certificate) when
    the residual is positive. Returns ``(member, y, gap)``.
    """
    P = np.atleast_2d(points)
    k, K = P.shape
    I = np.eye(K)
    A_eq = np.vstack([np.hstack([P.T, I, -I]),
                      np.concatenate([np.ones(k), np.zeros(2 * K)])])
    b_eq = np.concatenate([w, [1.0]])
    c = np.concatenate([np.zeros(k), np.ones(2 * K)])
    res = linprog(c, A_eq=A_eq, b_eq=b_eq)
    if not res.success:
        raise RuntimeError(f"membership LP failed with status {res.status}")
    return res.fun <= tol, res.eqlin[:K], res.fun


@dataclass
class PermutationReport:
    invariant: bool
    sampled: bool
    checked: int
    vertex: np.ndarray | None = None
    perm: tuple | None = None
    certificate: np.ndarray | None = None

    def __bool__(self):
        return self.invariant


def permutation_report(P: ProjectedSet, mode: str = "exact", seed: int = 42,
                       samples: int = SAMPLED_PERMUTATIONS) -> PermutationReport:
    """Test ``T_sigma(L) subset of L`` for permutations ``sigma`` of the cells.

    ``T_sigma(v)[n] = v[sigma[n]]``. Exact mode enumerates all permutations up
    to ``EXACT_MAX_CELLS`` cells and falls back to sampling (flagged) above.
    """
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    V = P.vertices
    K = P.n_cells
    sampled = mode == "sampled" or K > EXACT_MAX_CELLS
    if sampled:
        rng = np.random.default_rng(seed)
        perms = (tuple(rng.permutation(K)) for _ in range(samples))
    else:
        perms = itertools.permutations(range(K))
    keys = {tuple(np.round(v, 9)) for v in V}
    known: dict[tuple, bool] = {}
    checked = 0
    for perm in perms:
        checked += 1
        for v in V:
            w = v[list(perm)]
            key = tuple(np.round(w, 9))
            if key in keys or known.get(key):
                continue
            if np.min(np.max(np.abs(V - w), axis=1)) <= DEDUP_TOL:
                known[key] = True
                continue
            member, y, _ = hull_membership(V, w)
            known[key] = member
            if not member:
                return PermutationReport(False, sampled, checked, v, tuple(perm), y)
    return PermutationReport(True, sampled, checked)


def is_perm_invariant(P: ProjectedSet, mode: str = "exact") -> bool:
    return permutation_report(P, mode).invariant


@dataclass
class InvarianceReport:
    """Structural and behavioural verdicts on partial law invariance."""

    invariant: bool
    behavioral: bool
    pairs: int
    sampled: bool = False
    witness: tuple | None = None
    max_gap: float = 0.0

    @property
    def consistent(self) -> bool:
        return self.invariant == self.behavioral

    def __bool__(self):
        return self.invariant


def behavioral_invariance(S: SupportSet, pairs: int = 1000, seed: int = 42,
                          partition=None, tol: float = TOL):
    """Compare the risk of random G-measurable losses with cell-permuted copies.

    Returns ``(agree, worst_pair, max_gap)``.
    """
    labels, K = _labels(S.space, partition)
    rng = np.random.default_rng(seed)
    ys = rng.normal(size=(pairs, K))
    perms = np.array([rng.permutation(K) for _ in range(pairs)])
    ys_perm = np.take_along_axis(ys, perms, axis=1)
    gaps = np.abs(support_eval_many(S, ys[:, labels]) - support_eval_many(S, ys_perm[:, labels]))
    i = int(np.argmax(gaps))
    worst = (lift(ys[i], labels), lift(ys_perm[i], labels))
    return bool(gaps[i] <= tol), worst, float(gaps[i])


def check_g_law_invariance(S: SupportSet, partition=None, pairs: int = 1000,
                           seed: int = 42, mode: str = "exact") -> InvarianceReport:
    """Is the risk measure supported by ``S`` partially law invariant?

    The structural verdict comes from the permutation test on ``L(S)``. On
    failure the separating direction yields a witness pair ``(X, Y)`` of
    equally distributed G-measurable losses with ``rho(X) < rho(Y)``.
    """
    labels, _ = _labels(S.space, partition)
    perm = permutation_report(l_map(S, partition), mode, seed)
    behavioral, pair, gap = behavioral_invariance(S, pairs, seed, partition)
    witness = None
    if not perm.invariant:
        y = perm.certificate
        inv = np.argsort(perm.perm)
        witness = (lift(y, labels), lift(y[inv], labels))
    elif not behavioral:
        witness = pair
    return InvarianceReport(perm.invariant, behavioral, pairs, perm.sampled, witness, gap)


def coherent_adjustment(S: SupportSet, mu, X, partition=None) -> float:
    """``sup E[(D_nu - D_mu) X]`` over ``nu`` in ``conv(S)`` with ``L(nu) = mu``.

    ``mu`` is a vector of per-cell density values (a point of ``L(S)``).
    """
    labels, K = _labels(S.space, partition)
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (K,):
        raise ValueError(f"mu must have length {K}")
    X = S.space._check(X)
    L = l_map_vertices(S, labels, K)
    values = np.einsum("kmn,mn->k", S.vertices, S.space.p * X)
    A_eq = np.vstack([np.ones(len(S)), L.T])
    b_eq = np.concatenate([[1.0], mu])
    res = linprog(-values, A_eq=A_eq, b_eq=b_eq)
    if not res.success:
        raise ValueError("mu is not the projection of any measure in the supporting set")
    return float(-res.fun - S.space.expect(lift(mu, labels) * X))


def l_map_vertices(S: SupportSet, labels, K) -> np.ndarray:
    """``L`` applied to each vertex, without deduplication."""
    mass = cell_masses(S.space, labels)
    out = np.zeros((len(S), K))
    for i, d in enumerate(S.vertices):
        out[i] = np.bincount(labels.ravel(), weights=(S.space.p * d).ravel(), minlength=K) / mass
    return out


def reconstruct(S: SupportSet, X, partition=None) -> float:
    """``max_mu (E^mu[X] + tau_mu(X))`` over the vertices of ``L(S)``."""
    labels, _ = _labels(S.space, partition)
    best = -np.inf
    for mu in l_map(S, partition).vertices:
        Emu = S.space.expect(lift(mu, labels) * X)
        best = max(best, Emu + coherent_adjustment(S, mu, X, partition))
    return float(best)


@dataclass
class StrongReport:
    strong: bool
    trials: int
    witness: dict | None = None

    def __bool__(self):
        return self.strong


def check_strong_invariance(S: SupportSet, trials: int = 1000, seed: int = 42,
                            partition=None, tol: float = TOL) -> StrongReport:
    """Random search for ``rho(Z + X) != rho(Z + Y)`` with ``E[Z | G] = 0`` and
    ``X``, ``Y`` equally distributed G-measurable losses."""
    space = S.space
    labels, K = _labels(space, partition)
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(trials, *space.shape))
    Z = np.array([w - cond_expectation(w, space, labels) for w in W])
    Z *= np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=(trials, 1, 1)))
    ys = rng.normal(size=(trials, K))
    perms = np.array([rng.permutation(K) for _ in range(trials)])
    ys_perm = np.take_along_axis(ys, perms, axis=1)
    X = Z + ys[:, labels]
    Y = Z + ys_perm[:, labels]
    gaps = np.abs(support_eval_many(S, X) - support_eval_many(S, Y))
    bad = np.flatnonzero(gaps > tol)
    if bad.size == 0:
        return StrongReport(True, trials)
    i = int(bad[0])
    witness = {"Z": Z[i], "X": ys[i][labels], "Y": ys_perm[i][labels],
               "rho_ZX": support_eval(S, X[i]), "rho_ZY": support_eval(S, Y[i])}
    return StrongReport(False, int(i + 1), witness)


def check_multi_source(S: SupportSet, partitions) -> list[bool]:
    return [check_g_law_invariance(S, part).invariant for part in partitions]


# Constructors -------------------------------------------------------------

def box_density_vertices(p, bound: float, max_cells: int = 16) -> np.ndarray:
    """Vertices of ``{d : 0 <= d <= bound, sum(p * d) = 1}``.

    A vertex has every coordinate at a bound except at most one.
    """
    p = np.asarray(p, dtype=float).ravel()
    K = p.size
    if K > max_cells:
        raise ValueError(f"vertex enumeration limited to {max_cells} cells")
    if bound * p.sum() < 1.0 - 1e-12:
        raise ValueError("bound too small for a density")
    budget = 1.0 / bound  # probability mass that sits at the bound
    masks = ((np.arange(2 ** K)[:, None] >> np.arange(K)) & 1).astype(bool)
    mass = masks @ p
    out = []
    for mask, pa in zip(masks, mass):
        rest = budget - pa
        if rest < -1e-12:
            continue
        d = bound * mask.astype(float)
        if rest <= 1e-12:
            out.append(d)
            continue
        for k in np.flatnonzero(~mask):
            if p[k] >= rest - 1e-12:
                e = d.copy()
                e[k] = bound * rest / p[k]
                out.append(e)
    return _dedup(np.array(out))


def expectation_support(space: FiniteSpace) -> SupportSet:
    return SupportSet(space, np.ones((1, *space.shape)))


def es_dual_support(space: FiniteSpace, alpha: float) -> SupportSet:
    """Supporting set of ``ES_alpha`` under P: densities bounded by ``1 / (1 - alpha)``."""
    V = box_density_vertices(space.p, 1.0 / (1.0 - alpha))
    return SupportSet(space, V.reshape(-1, *space.shape))


def lifted_support(space: FiniteSpace, column_vectors) -> SupportSet:
    """Column-constant densities with the given per-column values."""
    V = np.atleast_2d(column_vectors)
    return SupportSet(space, np.array([np.broadcast_to(v, space.shape) for v in V]))


def lifted_es_support(space: FiniteSpace, alpha: float) -> SupportSet:
    """Supporting set of ``X -> ES_alpha(E[X | G])``."""
    N = space.N
    return lifted_support(space, box_density_vertices(np.full(N, 1.0 / N), 1.0 / (1.0 - alpha)))


def row_es_support(space: FiniteSpace, alpha: float) -> SupportSet:
    """Supporting set of ``X -> ES_alpha(E[X | rows])`` (needs equal row masses)."""
    rows = space.p.sum(axis=1)
    V = box_density_vertices(rows, 1.0 / (1.0 - alpha))
    return SupportSet(space, np.array([np.broadcast_to(v[:, None], space.shape) for v in V]))


def skewed_max_support(M: int, N: int) -> SupportSet:
    """``max(E[D X], ES_1/2(E[X | G]))`` on the uniform ``M x N`` grid with
    ``D[m, n] = u_n v_m``, ``u_n = (2n + 1) / N`` and ``v_m = (2m + 1) / M``.

    Partially law invariant (``E[D | G] = u`` is bounded by 2) but not
    strongly so: ``D`` tilts the within-column direction differently in
    different columns.
    """
    space = FiniteSpace.uniform(M, N)
    u = (2 * np.arange(N) + 1) / N
    v = (2 * np.arange(M) + 1) / M
    return lifted_es_support(space, 0.5).union(SupportSet(space, np.outer(v, u)[None]))


def column_transport(d, space: FiniteSpace, perm) -> np.ndarray:
    """Density whose per-column means are those of ``d`` permuted by ``perm``."""
    perm = np.asarray(perm)
    q = space.column_probs()
    return q[:, perm] * np.asarray(d)[:, perm] / q


def symmetrize(S: SupportSet) -> SupportSet:
    """Add every column transport of every vertex; ``L`` becomes permutation invariant."""
    out = [column_transport(d, S.space, perm)
           for d in S.vertices for perm in itertools.permutations(range(S.space.N))]
    return SupportSet(S.space, np.array(out))


def random_support(space: FiniteSpace, k: int, rng: np.random.Generator,
                   symmetric: bool = False, interior: int = 0) -> SupportSet:
    """``k`` random densities, optionally symmetrized, plus ``interior`` random
    convex combinations of the resulting vertices."""
    D = rng.exponential(size=(k, *space.shape))
    D /= np.einsum("kmn,mn->k", D, space.p)[:, None, None]
    S = SupportSet(space, D)
    if symmetric:
        S = symmetrize(S)
    if interior:
        lam = rng.dirichlet(np.ones(len(S)), size=interior)
        S = SupportSet(space, np.concatenate([S.vertices, np.einsum("ik,kmn->imn", lam, S.vertices)]))
    return S
