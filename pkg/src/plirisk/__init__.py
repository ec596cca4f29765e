"""Partially law-invariant risk measures on finite spaces and Gaussian models."""
from .finite_rep import (
    ProjectedSet,
    SupportSet,
    check_g_law_invariance,
    check_multi_source,
    check_strong_invariance,
    coherent_adjustment,
    is_perm_invariant,
    l_map,
    reconstruct,
    support_eval,
)
from .lp import LPError, linprog
from .measures import (
    KusuokaMixture,
    er,
    er_conditional,
    er_mean_of_cond,
    er_of_cond_mean,
    es_discrete,
    es_gaussian,
    es_quantile_avg,
    kusuoka_eval,
    lift_conditional,
    max_combine,
    multi_source_er,
    var_discrete,
)
from .partial_es import (
    GaussianPair,
    RiskConfig,
    Weights,
    cond_es_discrete,
    f_beta,
    g_beta,
    rho_beta_discrete,
    rho_beta_gaussian,
    rho_beta_lp,
)
from .portfolio import SweepSpec, argmin_weight, sweep
from .space import (
    DiscreteDist,
    FiniteSpace,
    cond_expectation,
    distribution_of,
    in_kernel,
    same_distribution,
)

__version__ = "0.1.0"
