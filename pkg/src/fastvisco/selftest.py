"""Invariant checks that can be run without pytest (``fastvisco selftest``)."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from . import fem
from .soe import SoeParams, build_soe
from .solvers import (
    NewmarkParams,
    TimeGrid,
    fast_solve,
    l1_newmark_solve,
    newmark_predictor,
    newmark_update,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.3e} (tol {self.tol:.1e})"


def _result(name, value, tol, lower=False):
    ok = bool(value >= tol) if lower else bool(value <= tol)
    return CheckResult(name, ok and math.isfinite(value), float(value), tol)


def check_normal_jumps(n: int = 3) -> CheckResult:
    """Every stress basis function has continuous normal traction."""
    layout = fem.build_dof_layout(fem.build_mesh(n))
    worst = 0.0
    for k in range(layout.r):
        e = np.zeros(layout.r)
        e[k] = 1.0
        worst = max(worst, fem.normal_jumps(layout, e))
    return _result(f"H(div) normal jumps, {n}x{n} mesh", worst, 1e-12)


def check_spd(n: int = 4) -> list[CheckResult]:
    mesh = fem.build_mesh(n)
    layout = fem.build_dof_layout(mesh)
    ops = fem.assemble_operators(mesh, layout, fem.MaterialModel(lam=2.0, mu=3.0))
    out = []
    for name, M in (("A", ops.A), ("C", ops.C)):
        dense = M.toarray()
        asym = np.abs(dense - dense.T).max()
        ok = fem.is_positive_definite(dense) and asym <= 1e-12 * np.abs(dense).max()
        out.append(CheckResult(f"{name} symmetric positive definite", ok, asym, 1e-12))
    sym = np.abs(ops.S - ops.S.T).max() / np.abs(ops.S).max()
    eig_min = np.linalg.eigvalsh(0.5 * (ops.S + ops.S.T)).min()
    out.append(_result("S symmetric", sym, 1e-12))
    out.append(_result("S positive semi-definite (min eigenvalue)", eig_min, -1e-12, lower=True))
    return out


def check_projection_idempotent(n: int = 4, seed: int = 0) -> CheckResult:
    mesh = fem.build_mesh(n)
    layout = fem.build_dof_layout(mesh)
    U = np.random.default_rng(seed).standard_normal(layout.s)
    P = fem.project_displacement(mesh, layout, fem.displacement_field(layout, U))
    return _result("displacement projection idempotent", np.abs(P - U).max(), 1e-12)


def _static_state(n, material, seed=1):
    mesh = fem.build_mesh(n)
    layout = fem.build_dof_layout(mesh)
    ops = fem.assemble_operators(mesh, layout, material)
    U0 = np.random.default_rng(seed).standard_normal(layout.s)
    Beta0 = -ops.solve_A(ops.B @ U0)
    eta = ops.S @ U0
    return ops, (U0, np.zeros_like(U0), Beta0), eta


def check_equilibrium(n: int = 2, steps: int = 1000) -> list[CheckResult]:
    """A loaded static state with consistent stress must stay at rest under both schemes."""
    material = fem.MaterialModel(alpha=0.6, tau_sigma=1.0, tau_eps=2.5)
    ops, init, eta = _static_state(n, material)
    grid = TimeGrid(1.0, steps)
    forcing = lambda t: eta  # noqa: E731
    scale = np.abs(init[0]).max()
    out = []
    traj, _ = l1_newmark_solve(ops, material, grid, NewmarkParams(), forcing, init)
    out.append(_result("equilibrium preserved, L1 scheme", np.abs(traj.U - init[0]).max() / scale, 1e-10))
    soe = build_soe(SoeParams(material.alpha, 10.0, 1.1, 1e-3, 1.0))
    traj, _ = fast_solve(ops, material, grid, NewmarkParams(), soe, forcing, init)
    out.append(_result("equilibrium preserved, SOE scheme", np.abs(traj.U - init[0]).max() / scale, 1e-10))
    return out


def newmark_oscillator_error(dt: float, T: float = 1.0, omega: float = 3.0,
                             params: NewmarkParams = NewmarkParams()) -> float:
    """End-time error of the implicit Newmark rule on ``u'' + omega^2 u = 0``, ``u(0) = 1``."""
    N = int(round(T / dt))
    u, v, acc = 1.0, 0.0, -(omega**2)
    k = 1.0 / (dt * dt * params.theta2)
    for _ in range(N):
        u_new = k * newmark_predictor(u, v, acc, dt, params) / (k + omega**2)
        acc, v = newmark_update(u_new, u, v, acc, dt, params)
        u = u_new
    return abs(u - math.cos(omega * N * dt))


def check_newmark_order() -> CheckResult:
    e1 = newmark_oscillator_error(1.0 / 200)
    e2 = newmark_oscillator_error(1.0 / 400)
    order = math.log2(e1 / e2)
    return CheckResult("Newmark oscillator order", abs(order - 2.0) <= 0.1, order, 0.1)


def run_all() -> list[CheckResult]:
    results = [check_normal_jumps()]
    results += check_spd()
    results.append(check_projection_idempotent())
    results += check_equilibrium()
    results.append(check_newmark_order())
    return results


def main(stream=None) -> int:
    """Print one line per check; return 0 if all pass, 3 otherwise."""
    stream = stream or sys.stdout
    results = run_all()
    for r in results:
        print(r.line(), file=stream)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=stream)
    return 0 if failed == 0 else 3
