"""Two ways to make entropic risk partially law invariant.

The mean of the conditional ER penalizes risk that is independent of the
trusted information; the ER of the conditional mean penalizes only the part
that the trusted information explains.
"""
import numpy as np

from plirisk import FiniteSpace, er, er_conditional, er_mean_of_cond, er_of_cond_mean

sp = FiniteSpace.uniform(2, 2)
beta = 1.0
X = np.array([[0.0, 1.0], [0.0, 1.0]])  # determined by the column
Y = np.array([[0.0, 0.0], [1.0, 1.0]])  # independent of the column

print("        ER      ER^G    ER~^G")
for name, Z in (("X", X), ("Y", Y)):
    print(f"{name}   {er(Z, sp, beta):.5f}  {er_mean_of_cond(Z, sp, beta):.5f}  {er_of_cond_mean(Z, sp, beta):.5f}")

rng = np.random.default_rng(3)
sp = FiniteSpace.random(4, 5, rng)
Z = rng.normal(size=sp.shape)
print("\ntime consistency:", er(er_conditional(Z, sp, 2.0), sp, 2.0), er(Z, sp, 2.0))
