"""Randomized property suites: coherence, invariance, LP oracle, adjustments, strong invariance.

Every suite takes a seed and returns a :class:`SuiteResult` listing the
failures it found (with the offending inputs).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .finite_rep import (
    SupportSet,
    check_g_law_invariance,
    check_strong_invariance,
    coherent_adjustment,
    es_dual_support,
    expectation_support,
    l_map,
    lifted_es_support,
    lifted_support,
    random_support,
    reconstruct,
    skewed_max_support,
    support_eval,
)
from .measures import KusuokaMixture, es_discrete, kusuoka_eval
from .partial_es import rho_beta_discrete, rho_beta_lp
from .space import FiniteSpace, distribution_of, from_columns, same_distribution

SUITES = ("coherence", "invariance", "oracle", "adjustments", "strong")
LEVELS = (0.0, 0.5, 0.9)


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, ok: bool, **witness) -> bool:
        self.checks += 1
        if not ok:
            self.failures.append(witness)
        return ok

    def summary(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "checks": self.checks,
                "failures": len(self.failures), "witnesses": self.failures[:5]}


def _space(rng, max_m=5, max_n=5):
    M, N = rng.integers(1, max_m + 1), rng.integers(1, max_n + 1)
    return FiniteSpace.random(int(M), int(N), rng)


def _coherence_measures(rng, space):
    a = float(rng.choice([0.0, 0.25, 0.5, 0.9, 0.95]))
    b = float(rng.choice(LEVELS))
    k = int(rng.integers(1, 4))
    wts = rng.dirichlet(np.ones(k))
    Q = KusuokaMixture(tuple(rng.choice(np.linspace(0, 0.95, 20), k, replace=False)),
                       tuple(wts / wts.sum()))
    S = random_support(space, int(rng.integers(1, 5)), rng)
    return {
        "es": lambda X: es_discrete(distribution_of(X, space), a),
        "support": lambda X: support_eval(S, X),
        "rho": lambda X: rho_beta_discrete(X, space, a, b),
        "kusuoka": lambda X: kusuoka_eval(X, space, Q),
    }


def coherence(seed: int = 42, instances: int = 1000, tol: float = 1e-8) -> SuiteResult:
    """Cash invariance, positive homogeneity, monotonicity and subadditivity."""
    res = SuiteResult("coherence")
    rng = np.random.default_rng(seed)
    for i in range(instances):
        space = _space(rng)
        X = rng.normal(size=space.shape)
        Y = rng.normal(size=space.shape)
        c = float(rng.normal() * 3)
        lam = float(np.exp(rng.uniform(-2, 2)))
        if i % 3 == 0:  # ties exercise the quantile edge cases
            X, Y = np.round(X), np.round(Y)
        down = X - np.abs(rng.normal(size=space.shape))
        for name, rho in _coherence_measures(rng, space).items():
            rx = rho(X)
            w = {"measure": name, "instance": i}
            res.check(abs(rho(X + c) - rx - c) <= tol, axiom="cash", **w)
            res.check(abs(rho(lam * X) - lam * rx) <= tol * max(1.0, abs(lam * rx)),
                      axiom="homogeneity", **w)
            res.check(rho(down) <= rx + tol, axiom="monotonicity", **w)
            res.check(rho(X + Y) <= rx + rho(Y) + tol, axiom="subadditivity", **w)
    return res


def _hand_fixtures():
    """Support sets with known verdicts: ``(label, S, invariant)``."""
    out = []
    sp = FiniteSpace.uniform(2, 3)
    out.append(("expectation", expectation_support(sp), True))
    out.append(("lifted-es", lifted_es_support(FiniteSpace.uniform(3, 4), 0.5), True))
    out.append(("es-dual", es_dual_support(FiniteSpace.uniform(2, 2), 0.5), True))
    out.append(("skewed-column", lifted_support(FiniteSpace.uniform(1, 3), [[2.0, 0.5, 0.5]]), False))
    out.append(("skewed-max", skewed_max_support(4, 4), True))
    tilt = np.array([[0.5, 1.5], [1.5, 0.5]])
    out.append(("within-column-tilt", SupportSet(FiniteSpace.uniform(2, 2), tilt[None]), True))
    out.append(("two-column-weights", lifted_support(FiniteSpace.uniform(2, 2), [[1.5, 0.5]]), False))
    return out


def invariance(seed: int = 42, instances: int = 200, pairs: int = 1000) -> SuiteResult:
    """Structural (permutation) and behavioural verdicts agree; witnesses are valid."""
    res = SuiteResult("invariance")
    rng = np.random.default_rng(seed)
    cases = [(label, S, expected) for label, S, expected in _hand_fixtures()]
    for i in range(instances):
        space = _space(rng, 3, 4)
        S = random_support(space, int(rng.integers(1, 4)), rng,
                           symmetric=i % 2 == 0, interior=i % 4)
        cases.append((f"random-{i}", S, None))
    for label, S, expected in cases:
        r = check_g_law_invariance(S, pairs=pairs, seed=seed)
        res.check(r.consistent, fixture=label, structural=r.invariant, behavioral=r.behavioral)
        if expected is not None:
            res.check(r.invariant == expected, fixture=label, expected=expected)
        if not r.invariant:
            X, Y = r.witness
            ok = same_distribution(X, Y, S.space) and support_eval(S, X) < support_eval(S, Y) - 1e-9
            res.check(ok, fixture=label, reason="invalid witness")
    return res


def oracle(seed: int = 42, instances: int = 50, tol: float = 1e-8) -> SuiteResult:
    """Closed-form minimization against the LP over both densities.

    One check per instance, covering every ``(alpha, beta)`` in ``LEVELS``.
    """
    res = SuiteResult("oracle")
    rng = np.random.default_rng(seed)
    for i in range(instances):
        space = _space(rng, 8, 8)
        X = rng.normal(size=space.shape)
        if i % 2:
            X = np.round(2 * X) / 2
        gaps = []
        for a in LEVELS:
            for b in LEVELS:
                d, lp = rho_beta_discrete(X, space, a, b), rho_beta_lp(X, space, a, b)
                gaps.append((abs(d - lp), a, b, d, lp))
        gap, a, b, d, lp = max(gaps)
        res.check(gap <= tol, instance=i, alpha=a, beta=b, shape=list(space.shape),
                  discrete=d, lp=lp)
    return res


def adjustments(seed: int = 42, instances: int = 50, tol: float = 1e-9) -> SuiteResult:
    """Reconstruction from adjustments, and the adjustment axioms."""
    res = SuiteResult("adjustments")
    rng = np.random.default_rng(seed)
    for i in range(instances):
        space = _space(rng, 3, 3)
        S = random_support(space, int(rng.integers(1, 5)), rng, interior=i % 3)
        P = l_map(S).vertices
        mu = rng.dirichlet(np.ones(len(P))) @ P
        X, Y = rng.normal(size=(2, *space.shape))
        tau = lambda Z: coherent_adjustment(S, mu, Z)
        Emu = lambda Z: space.expect(mu[None, :] * Z)
        w = {"instance": i}
        rec = reconstruct(S, X)
        res.check(abs(rec - support_eval(S, X)) <= tol, axiom="reconstruction", **w)
        G = from_columns(rng.normal(size=space.N), space.M)
        tx, ty = tau(X), tau(Y)
        res.check(abs(tau(X + G) - tx) <= tol, axiom="G-invariance", **w)
        lam = float(rng.uniform())
        res.check(tau(lam * X + (1 - lam) * Y) <= lam * tx + (1 - lam) * ty + tol,
                  axiom="convexity", **w)
        s = float(np.exp(rng.uniform(-2, 2)))
        res.check(abs(tau(s * X) - s * tx) <= tol * max(1.0, abs(s * tx)), axiom="homogeneity", **w)
        up = X + np.abs(rng.normal(size=space.shape))
        res.check(Emu(X) + tx <= Emu(up) + tau(up) + tol, axiom="mu-monotonicity", **w)
    return res


def strong(seed: int = 42, instances: int = 100, trials: int = 1000) -> SuiteResult:
    """Known strong / non-strong fixtures and strong => partial on random sets."""
    res = SuiteResult("strong")
    fixtures = [
        ("expectation", expectation_support(FiniteSpace.uniform(3, 3)), True),
        ("lifted-es", lifted_es_support(FiniteSpace.uniform(3, 4), 0.5), True),
        ("skewed-max", skewed_max_support(4, 4), False),
    ]
    for label, S, expected in fixtures:
        r = check_strong_invariance(S, trials=trials, seed=seed)
        res.check(r.strong == expected, fixture=label, expected=expected)
        res.check(check_g_law_invariance(S, seed=seed).invariant, fixture=label,
                  reason="not partially invariant")
    rng = np.random.default_rng(seed)
    for i in range(instances):
        space = _space(rng, 3, 3)
        S = random_support(space, int(rng.integers(1, 3)), rng, symmetric=i % 2 == 0)
        if check_strong_invariance(S, trials=trials // 10, seed=seed).strong:
            res.check(check_g_law_invariance(S, seed=seed).invariant, fixture=f"random-{i}",
                      reason="strong but not partial")
    return res


_RUNNERS = {"coherence": coherence, "invariance": invariance, "oracle": oracle,
            "adjustments": adjustments, "strong": strong}


def run_suite(name: str, seed: int = 42, instances: int | None = None) -> list[SuiteResult]:
    """Run one suite (or ``all``); ``instances`` overrides each suite's default size."""
    if name == "all":
        names = SUITES
    elif name in _RUNNERS:
        names = (name,)
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    out = []
    for n in names:
        t = time.perf_counter()
        kw = {} if instances is None else {"instances": instances}
        r = _RUNNERS[n](seed=seed, **kw)
        r.seconds = time.perf_counter() - t
        out.append(r)
    return out
