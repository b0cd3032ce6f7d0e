# %% [markdown]
# Multiplicative weights
#
# The sets S_{a,b} = {n : omega(n) = a mod b} are built from the function
# f_b(n) = exp(2 pi i omega(n) / b).  Since f_2 = (-1)^omega is aperiodic, both
# halves S_{0,2} and S_{1,2} have density 1/2.

# %%
import math

import numpy as np

from ergolab import arith

sieve = arith.FactorSieve(10**6)
f2 = arith.f_b(2)

for N in (10**3, 10**4, 10**5, 10**6):
    print(f"N = {N:>8}: density S_(0,2) = {arith.s_ab_density(0, 2, 0, N, sieve):.5f}, "
          f"mean (-1)^omega = {arith.ap_average(f2, 1, 0, N, sieve).real:+.5f}")

# %% [markdown]
# The key identity writes the indicator of S_{a,b} through powers of f_b.

# %%
n = np.arange(1, 21)
print(np.round(arith.key_identity_eval(n, 1, 3, sieve).real, 12) + 0.0)
print(arith.s_ab_indicator(n, 1, 3, sieve))

# %% [markdown]
# Pretentious distance: Liouville drifts away from 1 like log log P, while a
# character mod 3 stays periodic along progressions of difference 3.

# %%
for rep in arith.d_distance_trend(arith.liouville(), arith.constant_one(), [10, 100, 10**4, 10**6], sieve):
    print(f"D(lambda, 1; {rep.P:>7})^2 = {rep.squared:.4f}")

chi = arith.characters_mod(3)[1].as_multiplicative()
rows, largest = arith.aperiodicity_scan(chi, 3, 10**4, sieve)
print("largest |progression average| of chi_3:", round(largest, 6))

# %%
golden = (math.sqrt(5) - 1) / 2
for N in (10**4, 10**5, 10**6):
    print(N, abs(arith.exponential_twist_average(f2, golden, N, sieve)))
