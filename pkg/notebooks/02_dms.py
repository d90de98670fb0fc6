# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Modified-norm rate
#
# The modified-norm rate depends on a mixing parameter `eps` in (-1, 1) and on
# a bound `r_ham >= sqrt(2)`. `dms_optimize` maximises over `eps` with a
# coarse grid followed by golden-section refinement.

# %%
import numpy as np

from langevin_rates import (
    asym_coupled,
    asym_large_gamma_coeff,
    asym_small_gamma_coeff,
    dms_optimize,
    r_ham_bound,
)

opt = dms_optimize(1.0, 1.0)
print(opt)

# %% [markdown]
# ## Asymptotic branches
#
# For fixed `m` the optimum behaves like `c_small(m) gamma` as `gamma -> 0`
# and like `c_large(m) / gamma` as `gamma -> inf`.

# %%
for m in (0.5, 1.0, 2.0):
    small = dms_optimize(1e-3, m).lambda_star / 1e-3
    large = dms_optimize(1e3, m).lambda_star * 1e3
    print(f"m={m}: {small:.5f} vs {asym_small_gamma_coeff(m):.5f},  {large:.5f} vs {asym_large_gamma_coeff(m):.5f}")

# %% [markdown]
# ## Coupled scaling m = gamma^2
#
# The large-gamma prediction `4 / gamma` is approached slowly. The relative
# error shrinks like `1 / gamma`, so it is still about 12% at `gamma = 100`.

# %%
for g in (1e1, 1e2, 1e3, 1e4):
    lam = dms_optimize(g, g * g).lambda_star
    pred = asym_coupled(1.0, g, "LargeGamma")
    print(f"gamma={g:g}  lambda*gamma={lam * g:.4f}  rel err={abs(lam - pred) / pred:.4f}")

# %% [markdown]
# ## Effect of the operator-norm bound
#
# A weaker Hessian bound raises `r_ham` and lowers the optimum.

# %%
for K in (0, 4, 9):
    r = r_ham_bound(K)
    print(f"K={K}  r_ham={r:.4f}  lambda*={dms_optimize(1.0, 1.0, r).lambda_star:.6f}")

gammas = np.geomspace(1e-2, 1e2, 9)
print(np.array([dms_optimize(g, 1.0).lambda_star for g in gammas]))
