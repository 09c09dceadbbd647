"""How the cost of carrying the fractional memory grows with the step count.

Run with ``python demos/04_history_cost.py``. Writes a small CSV to ./demo_out.
"""

# %%
from pathlib import Path

import numpy as np

from fastvisco.bench import BenchConfig, run_solver_benchmark

# %% [markdown]
# Each L1 step revisits every stored level, so its history work is quadratic
# in N. The exponential recurrences cost the same at every step.

# %%
cfg = BenchConfig(h_list=[8], dt_list=[1 / 100, 1 / 200, 1 / 400, 1 / 800, 1 / 1600], out="demo_out")
rows = run_solver_benchmark(cfg)

for scheme in ("l1", "fast"):
    sel = [r for r in rows if r["scheme"] == scheme]
    N = np.array([round(1 / r["dt"]) for r in sel])
    t = np.array([r["history_update_seconds"] for r in sel])
    slope = np.polyfit(np.log(N), np.log(t), 1)[0]
    mem = ", ".join(f"{r['history_mbytes']:.3f}" for r in sel)
    print(f"{scheme:>4}: log-log slope {slope:.2f}; history MB per run: {mem}")

print("CSV written to", Path(cfg.out) / "solver_bench.csv")
