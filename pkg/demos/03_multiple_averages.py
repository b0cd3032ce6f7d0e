# %% [markdown]
# Weighted multiple ergodic averages on the torus
#
# Two commuting rotations of T^1 with iterates n and n^2 and zero-mean
# characters.  Everything is computed in frequency space, so A_N is an exact
# trigonometric polynomial and its L^2 norm needs no quadrature.

# %%
import math

from ergolab.dynsys import (
    AverageSpec,
    CommutingTorusSystem,
    PolynomialMapping,
    TorusObservable,
    cauchy_convergence_probe,
    hk_seminorm,
)
from ergolab.seqcore import constant

system = CommutingTorusSystem.rotations([[math.sqrt(2)], [math.sqrt(3)]])
ps = (PolynomialMapping.monomials([1], ell=2, slot=0), PolynomialMapping.monomials([2], ell=2, slot=1))
chi = TorusObservable.character(1)
spec = AverageSpec(system, constant(1.0), (chi, chi), ps)

print(f"{'N':>6}{'||A_N||':>12}{'Delta_N':>12}{'Delta_2N':>12}")
for N in (10, 100, 1000):
    rep = cauchy_convergence_probe(spec, N)
    print(f"{N:>6}{spec.at(N).l2():>12.6f}{rep.delta_N:>12.6f}{rep.delta_2N:>12.6f}")

# %% [markdown]
# Host-Kra seminorms of e(x) under an irrational rotation: the first one is
# the size of the conditional expectation on invariant functions (zero), the
# second is (sum |f^(k)|^4)^(1/4) = 1.

# %%
rot = CommutingTorusSystem.rotations([[math.sqrt(2)]])
for k in (1, 2):
    print(f"|||e(x)|||_{k} =", round(hk_seminorm(rot, chi, k, 10**4).value, 6))
