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
# # Spectra of the kinetic generator
#
# For `U = m x^2 / 2` the eigenvalues of `-L` are known in closed form. The
# truncated Hermite-Galerkin matrix reproduces them, and a finite-difference
# solver estimates Poincare constants of 1-D potentials.

# %%
import math

from langevin_rates import (
    build_generator_hermite,
    make_double_well,
    make_isotropic_quadratic,
    matrix_gap,
    poincare_fd,
    quadratic_gap,
    quadratic_spectrum,
    rham_supremum_quadratic,
)

for row in quadratic_spectrum(1.0, 1.0, 2).rows():
    print(row)

# %% [markdown]
# ## Gap against friction
#
# The gap is `gamma / 2` up to critical damping `gamma = 2 sqrt(m)` and then
# falls off like `m / gamma`.

# %%
for g in (0.5, 1.0, 2.0, 4.0, 8.0):
    num = matrix_gap(build_generator_hermite(1.0, g, 40), dps=50, dps_max_block=5)
    print(f"gamma={g}  exact={quadratic_gap(1.0, g):.10f}  galerkin={num.gap:.10f}")

# %% [markdown]
# At critical damping every block is a Jordan block. Double precision
# recovers a degree-`n` eigenvalue only to about `eps^(1/(n+1))`, hence the
# extended-precision path for small blocks.

# %%
plain = matrix_gap(build_generator_hermite(1.0, 2.0, 12))
extended = matrix_gap(build_generator_hermite(1.0, 2.0, 12), dps=50)
for (i, j, re, im), (_, _, re2, im2) in zip(plain.rows(), extended.rows()):
    if i >= 0 and i + j == 4:
        print(i, j, complex(re, im), complex(re2, im2))

# %% [markdown]
# ## Hermite-index supremum
#
# The supremum approaches `sqrt 2` from below like `sqrt 2 / (m S_max)`.

# %%
for m in (0.1, 1.0, 10.0):
    print(m, math.sqrt(2) - rham_supremum_quadratic(m, 10**6))

# %% [markdown]
# ## Poincare constants
#
# On a Gaussian the midpoint-weight discretization is fourth-order accurate,
# on the double well it is second order.

# %%
q = make_isotropic_quadratic(1.0)
for n in (257, 513, 1025):
    print(n, abs(poincare_fd(q, -8, 8, n).m_hat - 1.0))

dw = make_double_well()
for n in (1025, 2049, 4097):
    est = poincare_fd(dw, -3, 3, n)
    print(n, est.m_hat, est.tolerance)
