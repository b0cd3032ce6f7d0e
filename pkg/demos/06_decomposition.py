# %% [markdown]
# Structured plus uniform
#
# A correlation sequence of a rotation is itself a linear phase, so matching
# pursuit over a Farey grid (plus the rotation number) recovers it exactly.
# Adding noise leaves a residual that is small in U^2.

# %%
import math

import numpy as np

from ergolab.decomp import NilDictionary, fit_structured, residual_uniformity
from ergolab.dynsys import CommutingTorusSystem, PolynomialMapping, TorusObservable, correlation_sequence
from ergolab.seqcore import FolnerWindow, from_array

alpha = (math.sqrt(5) - 1) / 2
system = CommutingTorusSystem.rotations([[alpha]])
a = correlation_sequence(system, TorusObservable.character(-1), [TorusObservable.character(1)],
                         [PolynomialMapping.linear([[1]])])
window = FolnerWindow.cube(1000)
dictionary = NilDictionary.build(1, Q=16, extra=[alpha])
print("dictionary size", len(dictionary))

rep = fit_structured(a, window, dictionary)
print("atoms:", [at.describe() for at in rep.atoms])
print("residual:", rep.residual_norm)

# %%
rng = np.random.default_rng(7)
n = np.arange(1, 1001)
noisy = from_array(np.exp(2j * np.pi * 0.3 * n) + 0.1 * np.exp(2j * np.pi * rng.random(1000)), offset=[1])
rep = fit_structured(noisy, window, dictionary, max_terms=3)
print("coefficients:", np.round(rep.coefficients, 4))
print("residual history:", np.round(rep.history, 5))
wrap = residual_uniformity(rep, 2, 64)
print(f"wrapped U^2 of the residual {wrap.value:.4f} (seam effect ~ {wrap.boundary_estimate:.3f})")
print(rep.to_json(indent=1)[:300], "...")
