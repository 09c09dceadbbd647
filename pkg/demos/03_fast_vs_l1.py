"""Fast exponential history against the full L1 history.

Run with ``python demos/03_fast_vs_l1.py``.
"""

# %% [markdown]
# With tau_eps != tau_sigma the fractional memory is active. The L1 scheme
# keeps every past state; the fast scheme keeps one vector per exponential.
# Both discretise the same model, so their trajectories should agree closely.

# %%
from fastvisco import fem
from fastvisco.bench import setup_problem
from fastvisco.soe import SoeParams, build_soe
from fastvisco.solvers import NewmarkParams, TimeGrid, fast_solve, l1_newmark_solve, trajectory_distance

disc = setup_problem(8, fem.MaterialModel())
# reuse the example forcing but switch on the memory
material = fem.MaterialModel(alpha=0.5, tau_sigma=1.0, tau_eps=2.0)
newmark = NewmarkParams()

# %%
for dt in (0.02, 0.01, 0.005):
    grid = TimeGrid.from_step(1.0, dt)
    ref, ref_stats = l1_newmark_solve(disc.ops, material, grid, newmark, disc.forcing, disc.init)
    size = max(disc.ops.l2_norm(u) for u in ref.U)
    for eps in (1e-3, 1e-6):
        soe = build_soe(SoeParams(material.alpha, 10.0, 1.1, eps, T_max=1.0))
        traj, stats = fast_solve(disc.ops, material, grid, newmark, soe, disc.forcing, disc.init)
        gap = trajectory_distance(ref, traj, disc.ops) / size
        print(
            f"dt={dt:<6} eps={eps:<6g} relative gap {gap:.2e}   "
            f"history L1 {ref_stats.history_mbytes:.3f} MB, fast {stats.history_mbytes:.3f} MB"
        )

# %% [markdown]
# At eps = 1e-3 the kernel error sets a floor near 1e-4. With eps = 1e-6 the
# remaining gap comes from the two time discretisations of the memory
# integral and shrinks as dt is refined. The fast history stays the same size
# however many steps are taken, while the L1 history doubles with every halving of dt.
