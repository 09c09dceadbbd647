"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Runtime budgets are asserted alongside the numerical tolerances.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fastvisco import selftest
from fastvisco.bench import BenchConfig, setup_problem
from fastvisco.mittag_leffler import ml_integrand, ml_one_param_ref, ml_two_param_series
from fastvisco.quadrature import adaptive_integrate, gauss_legendre_rule
from fastvisco.soe import SoeParams, admissible_l_bound, build_soe, expansion_error_bound, select_K_J, soe_eval
from fastvisco.solvers import (
    TimeGrid,
    exp_step_coeffs,
    fast_solve,
    l1_newmark_solve,
    trajectory_distance,
    trajectory_error,
)

ALPHAS = (0.2, 0.5, 0.7)
QL = ((2, 1.5), (8, 1.1), (9, 1.1), (10, 1.1), (11, 1.09))
EPS = (1e-2, 1e-3, 1e-4)

Q3 = {
    0.2: [2.0, 1.25, 1.2222, 1.2, 1.1818],
    0.5: [2.0, 1.25, 1.2222, 1.2, 1.1818],
    0.7: [1.6275, 1.1414, 1.1214, 1.1063, 1.0945],
}
NEXP = {
    (2, 1.5): [88, 176, 315],
    (8, 1.1): [64, 115, 174],
    (9, 1.1): [60, 110, 168],
    (10, 1.1): [42, 84, 135],
    (11, 1.09): [45, 88, 140],
}
REFERENCE_ERRORS = {8: 1.8159e-3, 16: 1.3084e-3, 32: 1.1406e-3}


def record(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    assert ok, line


def slope(N, y):
    return float(np.polyfit(np.log(N), np.log(y), 1)[0])


@pytest.fixture(scope="module")
def soe_errors():
    """Measured max error and a priori bound for every admissible configuration."""
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 1.0, 1001)[1:]
    out = {}
    for alpha in ALPHAS:
        ref = np.array([ml_one_param_ref(alpha, float(t)) for t in grid])
        for q, l in QL:
            for eps in EPS:
                exp = build_soe(SoeParams(alpha, q, l, eps, 1.0))
                err = float(np.abs(ref - soe_eval(exp, grid)).max())
                out[alpha, q, l, eps] = (err, expansion_error_bound(exp))
    return out, time.perf_counter() - t0


def test_criterion_1_q3_table():
    t0 = time.perf_counter()
    got = {a: [admissible_l_bound(a, q) for q in (2, 8, 9, 10, 11)] for a in ALPHAS}
    elapsed = time.perf_counter() - t0
    worst = max(abs(g - r) for a in ALPHAS for g, r in zip(got[a], Q3[a]))
    record(1, worst <= 5e-4 and elapsed < 1.0, f"15 q3 entries, max deviation {worst:.2e} (tol 5e-4), {elapsed:.3f}s")


def test_criterion_2_nexp_table():
    t0 = time.perf_counter()
    got = {ql: [(K + 1) * J for K, J in (select_K_J(e, *ql) for e in EPS)] for ql in QL}
    elapsed = time.perf_counter() - t0
    mismatches = [ql for ql in QL if got[ql] != NEXP[ql]]
    cell = select_K_J(1e-3, 2, 1.5)
    ok = not mismatches and cell == (10, 16) and elapsed < 1.0
    record(2, ok, f"15 N_exp entries, {len(mismatches)} mismatching rows, (q=2, eps=1e-3) -> K,J={cell}, {elapsed:.3f}s")


def test_criterion_3_soe_accuracy(soe_errors):
    errs, elapsed = soe_errors
    ratios = {k: v[0] / k[3] for k, v in errs.items()}
    hard = max(ratios.values())
    best = max(r for k, r in ratios.items() if k[1:3] == (10, 1.1))
    ok = hard <= 10 and best <= 2 and elapsed < 30
    record(3, ok, f"max err/eps {hard:.3f} over 45 configs (tol 10), {best:.3f} for (q=10, l=1.1) (tol 2), {elapsed:.1f}s")


def test_criterion_4_bound_soundness(soe_errors):
    errs, _ = soe_errors
    violations = {k: v for k, v in errs.items() if v[0] > v[1]}
    worst = max(errs, key=lambda k: errs[k][0] / errs[k][1])
    tails = []
    for q, K in ((10, 2), (10, 3), (2, 7)):
        X = float(q) ** K
        for alpha in ALPHAS:
            tail = adaptive_integrate(lambda x: ml_integrand(x, 0.0, alpha), X, math.inf, tol=1e-13)
            tails.append(tail <= 1.0 / (X - 1.0))
    err, bound = errs[worst]
    detail = (
        f"bound exceeded in {len(violations)}/45 configs, worst {worst} err {err:.3e} > bound {bound:.3e}; "
        f"tail majorant holds in {sum(tails)}/{len(tails)} cases"
    )
    record(4, not violations and all(tails), detail)


def test_criterion_5_oracles():
    gauss = 0.0
    for J in (2, 14, 21, 28):
        rule = gauss_legendre_rule(J)
        for k in range(2 * J):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            gauss = max(gauss, abs(rule.integrate(lambda x: x**k, -1.0, 1.0) - exact))

    rng = np.random.default_rng(2024)
    x = 10 ** rng.uniform(-8, math.log10(50), 100)
    tau = rng.uniform(0.5, 2.0, 100)
    dt = 10 ** rng.uniform(-4, 0, 100)
    a = x * tau / dt
    T = np.array(exp_step_coeffs(a, tau, dt))
    moment = 0.0
    for i in range(100):
        for p in range(3):
            ref = dt[i] ** (p + 1) * adaptive_integrate(
                lambda u: u**p / math.factorial(p) * np.exp(-x[i] * (1 - u)), 0.0, 1.0, 1e-14
            )
            moment = max(moment, abs(T[p, i] - ref) / ref)

    ml = max(abs(ml_one_param_ref(0.5, t) - math.exp(t) * math.erfc(math.sqrt(t))) for t in (0.25, 1.0, 4.0))
    rec = max(
        abs(ml_two_param_series(al, 1.0, z) - z * ml_two_param_series(al, al + 1.0, z) - 1.0)
        for al in ALPHAS
        for z in (-0.1, -0.5, -1.0)
    )
    ok = gauss <= 1e-11 and moment <= 1e-12 and ml <= 1e-8 and rec <= 1e-10
    record(5, ok, f"Gauss {gauss:.1e}, step moments rel {moment:.1e}, erfc identity {ml:.1e}, recurrence {rec:.1e}")


@pytest.mark.slow
def test_criterion_6_cross_validation():
    t0 = time.perf_counter()
    cfg = BenchConfig()
    disc = setup_problem(8, cfg.material)
    soe = build_soe(cfg.soe_params())
    gaps = []
    for dt in (0.01, 0.005):
        grid = TimeGrid.from_step(1.0, dt)
        a, _ = l1_newmark_solve(disc.ops, cfg.material, grid, cfg.newmark, disc.forcing, disc.init)
        b, _ = fast_solve(disc.ops, cfg.material, grid, cfg.newmark, soe, disc.forcing, disc.init)
        gaps.append(trajectory_distance(a, b, disc.ops))
    elapsed = time.perf_counter() - t0
    ok = max(gaps) <= 1e-4 and elapsed < 120
    record(6, ok, f"max ||U_fast - U_L1|| = {max(gaps):.2e} over dt in (0.01, 0.005) (tol 1e-4), {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_7_error_magnitudes():
    t0 = time.perf_counter()
    cfg = BenchConfig()
    soe = build_soe(cfg.soe_params())
    errors = {}
    for n in (8, 16, 32):
        disc = setup_problem(n, cfg.material)
        for dt in (0.01, 0.001):
            traj, _ = fast_solve(
                disc.ops, cfg.material, TimeGrid.from_step(1.0, dt), cfg.newmark, soe, disc.forcing, disc.init
            )
            errors[n, dt] = trajectory_error(traj, disc.problem.u_exact, disc.mesh, disc.layout)
    elapsed = time.perf_counter() - t0
    dev = {n: errors[n, 0.01] / REFERENCE_ERRORS[n] - 1.0 for n in REFERENCE_ERRORS}
    window = all(abs(d) <= 0.10 for d in dev.values())
    e = [errors[n, 0.01] for n in (8, 16, 32)]
    monotone = e[0] > e[1] > e[2]
    spread = max(abs(errors[n, 0.001] / errors[n, 0.01] - 1.0) for n in (8, 16, 32))
    fallback = monotone and spread < 0.05
    mode = "+-10% window" if window else ("hard fallback" if fallback else "neither")
    devs = ", ".join(f"h=1/{n}: {errors[n, 0.01]:.4e} ({dev[n]:+.1%})" for n in (8, 16, 32))
    record(7, (window or fallback) and elapsed < 600,
           f"{mode}; {devs}; dt spread {spread:.2%}; {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_8_complexity():
    cfg = BenchConfig()
    disc = setup_problem(8, cfg.material)
    soe = build_soe(cfg.soe_params())
    s = disc.layout.s
    Ns = np.array([100, 200, 400, 800, 1600])

    def run(scheme, N):
        grid = TimeGrid(1.0, int(N))
        if scheme == "l1":
            return l1_newmark_solve(disc.ops, cfg.material, grid, cfg.newmark, disc.forcing, disc.init,
                                    store_trajectory=False)[1]
        return fast_solve(disc.ops, cfg.material, grid, cfg.newmark, soe, disc.forcing, disc.init,
                          store_trajectory=False)[1]

    counts_ok = True
    times = {"l1": [], "fast": []}
    for N in Ns:
        for scheme in times:
            # best of three damps timer noise at the small sizes
            runs = [run(scheme, N) for _ in range(3)]
            times[scheme].append(min(r.history_update_seconds for r in runs))
            expected = 2 * s * N if scheme == "l1" else s * soe.n_exp
            counts_ok &= all(r.history_floats == expected for r in runs)
    slope_l1, slope_fast = slope(Ns, times["l1"]), slope(Ns, times["fast"])

    big_l1, big_fast, small_l1 = run("l1", 10_000), run("fast", 10_000), run("l1", 100)
    mem_ratio = big_l1.history_mbytes / small_l1.history_mbytes
    speedup = big_l1.history_update_seconds / big_fast.history_update_seconds
    counts_ok &= big_fast.history_floats == s * soe.n_exp
    ok = (
        counts_ok
        and mem_ratio == 100.0
        and abs(slope_l1 - 2.0) <= 0.3
        and abs(slope_fast - 1.0) <= 0.3
        and speedup >= 20
    )
    record(8, ok, f"exact history counts {counts_ok}, L1 memory ratio {mem_ratio:g}, slopes L1 {slope_l1:.2f} "
                  f"fast {slope_fast:.2f}, history-update speedup at N=1e4 {speedup:.0f}x "
                  f"({big_l1.history_update_seconds:.1f}s vs {big_fast.history_update_seconds:.2f}s)")


def test_criterion_9_selftest():
    results = selftest.run_all()
    failed = [r.name for r in results if not r.passed]
    record(9, not failed, f"{len(results) - len(failed)}/{len(results)} invariant checks pass" +
           (f"; failing: {failed}" if failed else ""))
