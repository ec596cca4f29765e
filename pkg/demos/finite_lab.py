"""Representation checks on a small finite space.

Omega is a 3x4 grid and the trusted information is the column index.  A
coherent risk measure is given by the vertices of its density set; we test
whether it is law invariant on column-measurable losses, and whether it is
also invariant under adding noise with zero conditional mean.
"""
import numpy as np

from plirisk import FiniteSpace
from plirisk.finite_rep import (
    SupportSet,
    check_g_law_invariance,
    check_strong_invariance,
    expectation_support,
    lifted_es_support,
    reconstruct,
    skewed_max_support,
    support_eval,
)

sets = {
    "expectation": expectation_support(FiniteSpace.uniform(3, 4)),
    "ES_0.5 of the conditional mean": lifted_es_support(FiniteSpace.uniform(3, 4), 0.5),
    "skewed max": skewed_max_support(3, 4),
    "one tilted column": SupportSet(FiniteSpace.uniform(3, 4),
                                    np.array([[[1.6, 0.8, 0.8, 0.8]] * 3])),
}

for name, S in sets.items():
    part = check_g_law_invariance(S)
    strong = check_strong_invariance(S, trials=500)
    print(f"{name:32s} partial={part.invariant!s:5s} strong={strong.strong}")
    if part.witness is not None:
        X, Y = part.witness
        # X and Y have the same law but different risk
        print("   witness risks:", support_eval(S, X), support_eval(S, Y))

# a risk measure is recovered from its coherent adjustments
rng = np.random.default_rng(0)
S = sets["skewed max"]
X = rng.normal(size=(3, 4))
print("\ndirect", support_eval(S, X), "reconstructed", reconstruct(S, X))
