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
# # The explicit rate and its optimal friction
#
# `main_rate` evaluates
#
#     lambda = sqrt(m) * log(1 + gamma sqrt(m) / (c0 (sqrt(m) + R + gamma)^2))
#
# with `c0 = 1` unless told otherwise. Only ratios and the shape in `gamma`
# are meaningful since `c0` is a placeholder constant.

# %%
import math

import numpy as np

from langevin_rates import (
    RateInputs,
    gamma_sweep,
    main_rate,
    make_double_well,
    optimal_gamma_general,
    overdamped_rate,
    rate_at_optimal_gamma,
    select_R,
    with_poincare,
)

print(main_rate(RateInputs(m=1.0, gamma=1.0)).to_dict())

# %% [markdown]
# ## Shape in gamma
#
# The rate grows like `gamma` for small friction and decays like `1/gamma`
# for large friction. The peak sits at `sqrt(m) + R`.

# %%
m, R = 2.0, 1.0
grid = np.geomspace(0.01, 100, 9)
for g, lam in gamma_sweep(m, R, 1.0, grid):
    print(f"gamma={g:9.4f}  lambda={lam:.6f}")
print("peak at", optimal_gamma_general(m, R))

# %% [markdown]
# ## Square-root speedup
#
# At the optimal friction the rate is `sqrt(m) log(1.25)`, while the
# overdamped rate is `m`. Their ratio grows like `1/sqrt(m)`.

# %%
for m in (1.0, 1e-2, 1e-4):
    under = rate_at_optimal_gamma(m).lam
    print(f"m={m:g}  underdamped={under:.3e}  overdamped={overdamped_rate(m):.3e}  ratio={under / m:.1f}")

# %% [markdown]
# ## A nonconvex potential
#
# The double well has `Hess U >= -4`, so `R = 2`. Its Poincare constant is
# not known in closed form; see the spectral notebook for a numerical value.

# %%
dw = with_poincare(make_double_well(), 0.7486811)
reg = select_R(dw)
g_star = math.sqrt(dw.poincare_m) + reg.value
print(reg, main_rate(RateInputs(dw.poincare_m, g_star, reg.value), reg).lam)
