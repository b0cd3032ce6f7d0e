# %% [markdown]
# Gowers norms on Z_N
#
# Characters are the most structured functions on a cyclic group: their U^1
# norm vanishes while every higher norm equals 1.  Quadratic phases look random
# to U^2 (the Gauss sum gives N^{-1/4}) but not to U^3.

# %%
import numpy as np

from ergolab.seqcore import FiniteGridFn, gowers_norm, van_der_corput

N = 17
n = np.arange(N)

character = FiniteGridFn(np.exp(2j * np.pi * 3 * n / N))
quadratic = FiniteGridFn(np.exp(2j * np.pi * n * n / N))
rng = np.random.default_rng(0)
signs = FiniteGridFn(rng.choice([-1.0, 1.0], N))

print(f"{'function':<12}{'U1':>10}{'U2':>10}{'U3':>10}")
for name, f in [("character", character), ("quadratic", quadratic), ("random +-1", signs)]:
    print(f"{name:<12}" + "".join(f"{gowers_norm(f, s):>10.5f}" for s in (1, 2, 3)))
print(f"N^(-1/4) = {N ** -0.25:.5f}")

# %% [markdown]
# The van der Corput identity |E f|^2 = E_h E_n f(n+h) conj f(n) holds exactly
# on the group, which is what makes the U^1 -> U^2 step work.

# %%
v = van_der_corput(signs)
print("identity error:", v.identity_error)
