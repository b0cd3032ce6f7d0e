# %% [markdown]
# Orbits on the Heisenberg nilmanifold
#
# A translation tau = (a, b, 0) with a, b, 1 rationally independent has an
# equidistributed orbit in G/Gamma.  The horizontal Weyl sums (characters of
# the torus quotient) must therefore decay like 1/N.

# %%
import math
from fractions import Fraction

from ergolab.nil import (
    HeisenbergElement as H,
    NilsystemSpec,
    PeriodizedBump,
    equidistribution_report,
    haar_integral,
    heisenberg_pow,
    reduce_fundamental,
)

tau = H(math.sqrt(2) - 1, math.sqrt(3) - 1, 0.0)
bump = PeriodizedBump()
spec = NilsystemSpec("heisenberg", [tau], bump, Q=16)

for N in (10**3, 10**4, 10**5):
    rep = equidistribution_report(spec, N, 3)
    print(f"N = {N:>6}: max horizontal Weyl sum {rep.max_weyl:.2e}")

# %% [markdown]
# Exact arithmetic: the closed-form power agrees with repeated multiplication,
# and reducing into the fundamental domain picks a lattice element.

# %%
t = H(Fraction(1, 3), Fraction(2, 5), Fraction(-1, 7))
print(heisenberg_pow(t, 5))
p, gamma = reduce_fundamental(H(Fraction(5, 4), Fraction(-1, 2), Fraction(23, 10)))
print("point in fundamental domain:", p, "lattice element:", gamma)

# %%
est = haar_integral(spec, Q=32)
print(f"Haar integral of the bump: {est.value.real:.8f} +- {est.error:.1e}")
