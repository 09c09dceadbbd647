"""Compressing the Mittag-Leffler relaxation kernel into a few exponentials.

Run with ``python demos/01_kernel_compression.py``.
"""

# %% [markdown]
# The stress relaxation of a fractional Zener solid is governed by
# E_alpha(-t^alpha). Its integral representation over (0, inf) is cut at q^K,
# split into geometric intervals and integrated with Gauss-Legendre rules, so
# each node turns into one decaying exponential.

# %%
import numpy as np

from fastvisco.mittag_leffler import ml_one_param_ref
from fastvisco.soe import SoeParams, admissible_l_bound, build_soe, select_K_J

# %% [markdown]
# The analysis radius l has to stay below a bound q3 that depends on alpha and q.

# %%
qs = (2, 8, 9, 10, 11)
print("alpha " + " ".join(f"q={q:<6}" for q in qs))
for alpha in (0.2, 0.5, 0.7):
    print(f"{alpha:<5} " + " ".join(f"{admissible_l_bound(alpha, q):<8.4f}" for q in qs))

# %% [markdown]
# For a tolerance eps, K grows like |log eps| and J like |log eps| as well,
# so the number of exponentials grows like |log eps|^2.

# %%
for q, l in ((2, 1.5), (10, 1.1)):
    for eps in (1e-2, 1e-4, 1e-8):
        K, J = select_K_J(eps, q, l)
        print(f"q={q:<3} l={l:<4} eps={eps:<6g} K={K:<3} J={J:<3} N_exp={(K + 1) * J}")

# %% [markdown]
# Compare against the reference on (0, 1]. The error stays at the level of eps.

# %%
t = np.linspace(0.0, 1.0, 401)[1:]
for alpha in (0.2, 0.5, 0.7):
    ref = np.array([ml_one_param_ref(alpha, ti) for ti in t])
    for eps in (1e-2, 1e-3, 1e-4):
        soe = build_soe(SoeParams(alpha, 10.0, 1.1, eps, T_max=1.0))
        err = np.abs(soe(t) - ref)
        print(f"alpha={alpha} eps={eps:g}: {soe.n_exp:>3} terms, max error {err.max():.2e} at t={t[err.argmax()]:.3f}")

# %% [markdown]
# The largest errors sit near t = 0, where the first interval (0, 1) carries
# an integrand with an essential singularity at its left end.
