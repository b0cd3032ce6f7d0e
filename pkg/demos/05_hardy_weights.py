# %% [markdown]
# Hardy field weights e(n^{3/2})
#
# f(t) = t^{3/2} stays away from polynomials, so f(n) is equidistributed mod 1.
# Convergence is slow though: the level set {||f(n)|| in [1/4, 1/2]} still
# misses its limiting density 1/2 by about N^{-1/4} at N = 10^5.

# %%
import math
from fractions import Fraction

from ergolab import hardy

f = hardy.HardyFunctionSpec.power(Fraction(3, 2))
golden = (1 + math.sqrt(5)) / 2

for N in (10**3, 10**4, 10**5):
    dens = hardy.level_set(f, 0.25, 0.5, N).density
    decay = [abs(hardy.weighted_phase_average(f, golden, k, N)) for k in (0, 1, 2)]
    print(f"N = {N:>6}: density {dens:.4f}, |averages| " + " ".join(f"{v:.4f}" for v in decay))

# %% [markdown]
# Taylor localization f(N + n) = n^2 alpha_N + q_N(n) + small on n <= N^theta.
# The residual is governed by L^3 f'''(N) / 6, which only vanishes when
# theta < 1/2.

# %%
for theta in (None, 0.6):
    for N in (10**2, 10**4, 10**6):
        loc = hardy.taylor_localization(f, N, 2, theta)
        print(f"theta = {loc.theta:.3f} N = {N:>7}: L = {loc.L:>5}, alpha = {loc.alpha:.3e}, "
              f"residual = {loc.residual:.3e}")

# %% [markdown]
# Zero-mean trigonometric minorant and majorant of an interval indicator.

# %%
P1, P2 = hardy.fejer_sandwich(0.2, 0.4, 0.1)
print("degree", P1.degree, "violation", hardy.sandwich_violation(P1, P2, 0.2, 0.4, 0.1))
