"""Worst-case ES of a two-asset Gaussian portfolio as the model uncertainty grows.

The first asset's law is trusted, the joint law is not.  For each beta we
scan the weight of the first asset and report the risk-minimizing weight.
"""
import numpy as np

from plirisk import GaussianPair, argmin_weight, es_gaussian, rho_beta_gaussian

alpha = 0.95
betas = [0.0, 0.25, 0.5, 0.75, 0.9, 0.95]

for m2 in (0.0, -0.1):
    model = GaussianPair(m1=0.0, m2=m2, sigma1=0.1, sigma2=0.1, c=0.5)
    print(f"\nsecond asset mean {m2}")
    print("pi1   " + "".join(f"beta={b:<7}" for b in betas))
    for w in np.linspace(0, 1, 6):
        vals = [rho_beta_gaussian(model, w, alpha, b)[0] for b in betas]
        print(f"{w:.1f}   " + "".join(f"{v:<12.5f}" for v in vals))
    stars = [argmin_weight(model, alpha, b)[0] for b in betas]
    print("argmin " + "  ".join(f"{s:.3f}" for s in stars))

# all curves meet at pi1 = 1, where only the trusted asset is held
print("\nES of the first asset alone:", es_gaussian(0.0, 0.1, alpha))
