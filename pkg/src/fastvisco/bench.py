"""Experiment configuration, the manufactured test problem and CSV reports."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import fem
from .errors import (
    AdmissibilityError,
    InvalidArgumentError,
    SolverError,
    UnsupportedConfigurationError,
)
from .mittag_leffler import ml_one_param_ref
from .soe import (
    SoeParams,
    admissible_l_bound,
    build_soe,
    expansion_error_bound,
    select_K_J,
    soe_eval,
)
from .solvers import (
    CONSTITUTIVE_FORMS,
    NewmarkParams,
    TimeGrid,
    fast_solve,
    l1_newmark_solve,
    trajectory_error,
)

SCHEMES = ("l1", "fast", "both")

# parameter grid of the SOE tables
TABLE_ALPHAS = (0.2, 0.5, 0.7)
TABLE_QS = (2, 8, 9, 10, 11)
TABLE_QL = ((2, 1.5), (8, 1.1), (9, 1.1), (10, 1.1), (11, 1.09))
TABLE_EPS = (1e-2, 1e-3, 1e-4)


def fmt(x) -> str:
    """CSV cell: integers verbatim, reals in 12-significant-digit scientific form."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.11e}"
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            values = [row[h] for h in header] if isinstance(row, dict) else row
            w.writerow([fmt(v) for v in values])
    return path


# ------------------------------------------------------------- config

@dataclass
class SoeConfig:
    q: float = 10.0
    l: float = 1.1
    eps: float = 1e-3


@dataclass
class BenchConfig:
    """Experiment settings; JSON keys and CLI flags use these field names."""

    alpha: float = 0.5
    tau_sigma: float = 1.0
    tau_eps: float = 1.0
    rho: float = 1.0
    # `lambda` is a keyword, so the attribute carries a trailing underscore
    lambda_: float = 1.0
    mu: float = 1.0
    h_list: list = field(default_factory=lambda: [8, 16, 32])
    dt_list: list = field(default_factory=lambda: [0.01, 0.005, 0.001, 0.0005, 0.0001])
    T: float = 1.0
    theta1: float = 0.5
    theta2: float = 0.25
    soe: SoeConfig = field(default_factory=SoeConfig)
    scheme: str = "both"
    constitutive_form: str = "displacement"
    out: str = "out"
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.soe, dict):
            self.soe = SoeConfig(**self.soe)
        self.h_list = [mesh_divisions(h) for h in self.h_list]
        self.dt_list = [float(dt) for dt in self.dt_list]

    def validate(self) -> None:
        if not 0 < self.alpha < 1:
            raise InvalidArgumentError(f"alpha must lie in (0, 1), got {self.alpha}")
        for name in ("tau_sigma", "tau_eps", "rho", "lambda_", "mu", "T"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name.rstrip('_')} must be positive")
        if self.scheme not in SCHEMES:
            raise InvalidArgumentError(f"scheme must be one of {SCHEMES}")
        if self.constitutive_form not in CONSTITUTIVE_FORMS:
            raise InvalidArgumentError(f"constitutive_form must be one of {CONSTITUTIVE_FORMS}")
        if not self.h_list or not self.dt_list:
            raise InvalidArgumentError("h_list and dt_list must be non-empty")
        for dt in self.dt_list:
            TimeGrid.from_step(self.T, dt)

    @property
    def material(self) -> fem.MaterialModel:
        return fem.MaterialModel(self.alpha, self.tau_sigma, self.tau_eps, self.rho, self.lambda_, self.mu)

    @property
    def newmark(self) -> NewmarkParams:
        return NewmarkParams(self.theta1, self.theta2)

    def soe_params(self) -> SoeParams:
        return SoeParams(self.alpha, self.soe.q, self.soe.l, self.soe.eps, self.T / self.tau_sigma)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        d = dict(d)
        if "lambda" in d:
            d["lambda_"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "BenchConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def mesh_divisions(h) -> int:
    """Accept a mesh size as ``n`` (h = 1/n) or as the float ``1/n``."""
    h = float(h)
    n = round(1.0 / h) if h < 1 else round(h)
    if n < 1 or (h < 1 and abs(n * h - 1.0) > 1e-9) or (h >= 1 and n != h):
        raise InvalidArgumentError(f"mesh size {h} is not of the form 1/n")
    return int(n)


# -------------------------------------------------- manufactured problem

def _p(s):
    return (s * s - s) ** 2


def _dp(s):
    return 4 * s**3 - 6 * s**2 + 2 * s


def _d2p(s):
    return 12 * s**2 - 12 * s + 2


def _d3p(s):
    return 24 * s - 12


def spatial_field(x, y):
    """Divergence-free spatial profile of the exact displacement."""
    return np.stack([_p(x) * _dp(y), -_p(y) * _dp(x)])


def spatial_laplacian(x, y):
    return np.stack([
        _d2p(x) * _dp(y) + _p(x) * _d3p(y),
        -(_d2p(y) * _dp(x) + _p(y) * _d3p(x)),
    ])


def spatial_strain(x, y):
    """Symmetric gradient of :func:`spatial_field`, shaped ``(2, 2, ...)``."""
    e11 = _dp(x) * _dp(y)
    e22 = -_dp(y) * _dp(x)
    e12 = 0.5 * (_p(x) * _d2p(y) - _p(y) * _d2p(x))
    return np.stack([np.stack([e11, e12]), np.stack([e12, e22])])


@dataclass(frozen=True)
class ManufacturedProblem:
    """``u = e^{-t} w(x, y)`` with ``w`` divergence free and zero on the boundary.

    With ``tau_sigma = tau_eps`` the stress ``D eps(u)`` satisfies the
    fractional constitutive law exactly, and the body force reduces to
    ``e^{-t} (rho w - mu Laplace(w))``.
    """

    material: fem.MaterialModel

    def u_exact(self, x, y, t):
        return math.exp(-t) * spatial_field(x, y)

    def f(self, x, y, t):
        m = self.material
        return math.exp(-t) * (m.rho * spatial_field(x, y) - m.mu * spatial_laplacian(x, y))

    def u0(self, x, y):
        return spatial_field(x, y)

    def v0(self, x, y):
        return -spatial_field(x, y)

    def sigma0(self, x, y):
        return fem.elasticity_apply(self.material, spatial_strain(x, y))


def manufactured_problem(material: fem.MaterialModel) -> ManufacturedProblem:
    if not math.isclose(material.tau_sigma, material.tau_eps, rel_tol=0, abs_tol=1e-15):
        raise UnsupportedConfigurationError(
            "the closed-form forcing needs tau_sigma == tau_eps; otherwise it carries a memory term"
        )
    return ManufacturedProblem(material)


@dataclass
class Discretization:
    mesh: fem.RectMesh
    layout: fem.DofLayout
    ops: fem.AssembledOperators
    problem: ManufacturedProblem
    init: tuple

    def forcing(self, t):
        return fem.load_vector(self.mesh, self.layout, lambda x, y: self.problem.f(x, y, t))


def setup_problem(n: int, material: fem.MaterialModel) -> Discretization:
    problem = manufactured_problem(material)
    mesh = fem.build_mesh(n)
    layout = fem.build_dof_layout(mesh)
    ops = fem.assemble_operators(mesh, layout, material)
    init = fem.project_initial_data(mesh, layout, material, problem.u0, problem.v0, problem.sigma0, ops)
    return Discretization(mesh, layout, ops, problem, init)


def run_case(disc: Discretization, cfg: BenchConfig, dt: float, scheme: str, soe=None):
    """One solve of the manufactured problem; returns ``(trajectory, stats)``."""
    grid = TimeGrid.from_step(cfg.T, dt)
    if scheme == "l1":
        return l1_newmark_solve(disc.ops, cfg.material, grid, cfg.newmark, disc.forcing, disc.init)
    if soe is None:
        soe = build_soe(cfg.soe_params())
    return fast_solve(
        disc.ops, cfg.material, grid, cfg.newmark, soe, disc.forcing, disc.init, cfg.constitutive_form
    )


# ------------------------------------------------------------- SOE tables

def q3_rows(alphas=TABLE_ALPHAS, qs=TABLE_QS):
    return [[a] + [admissible_l_bound(a, q) for q in qs] for a in alphas]


def nexp_rows(ql=TABLE_QL, eps_list=TABLE_EPS):
    """One row per ``(q, l)`` with ``K, J, n_exp`` for each tolerance."""
    rows = []
    for q, l in ql:
        row = [float(q), float(l)]
        for eps in eps_list:
            K, J = select_K_J(eps, q, l)
            row += [K, J, (K + 1) * J]
        rows.append(row)
    return rows


def nexp_header(eps_list=TABLE_EPS):
    return ["q", "l"] + [f"{key}(eps={eps:g})" for eps in eps_list for key in ("K", "J", "n_exp")]


def soe_error_grid(T: float = 1.0, n: int = 1000) -> np.ndarray:
    """``n`` uniform points in ``(0, T]``."""
    return np.linspace(0.0, T, n + 1)[1:]


def soe_error_table(alpha, q, l, eps, grid, ref=None):
    """Rows ``(t, e_ref, e_soe, abs_err)`` plus a summary dict for one configuration."""
    T = float(grid[-1])
    summary = {"alpha": alpha, "q": float(q), "l": float(l), "eps": eps}
    try:
        exp = build_soe(SoeParams(alpha, q, l, eps, T))
    except AdmissibilityError:
        summary.update(K=-1, J=-1, n_exp=0, max_abs_err=float("nan"), bound=float("nan"),
                       bound_holds="", status=f"inadmissible: l >= q3={admissible_l_bound(alpha, q):.4g}")
        return None, summary
    if ref is None:
        ref = np.array([ml_one_param_ref(alpha, float(t)) for t in grid])
    approx = soe_eval(exp, grid)
    err = np.abs(ref - approx)
    bound = expansion_error_bound(exp)
    rows = np.column_stack([grid, ref, approx, err])
    summary.update(K=exp.K, J=exp.J, n_exp=exp.n_exp, max_abs_err=float(err.max()), bound=bound,
                   bound_holds=bool(err.max() <= bound), status="ok")
    return rows, summary


def run_soe_table(cfg: BenchConfig | None = None, out: str | os.PathLike | None = None,
                  alphas=TABLE_ALPHAS, ql=TABLE_QL + ((10, 2.0),), eps_list=TABLE_EPS, n_points=1000):
    """Write ``q3_table.csv``, ``nexp_table.csv``, ``soe_summary.csv`` and one
    ``soe_error_*.csv`` per admissible ``(alpha, q, l, eps)``."""
    cfg = cfg or BenchConfig()
    out = Path(out or cfg.out)
    write_csv(out / "q3_table.csv", ["alpha"] + [f"q={q}" for q in TABLE_QS], q3_rows(alphas))
    write_csv(out / "nexp_table.csv", nexp_header(eps_list), nexp_rows(TABLE_QL, eps_list))

    grid = soe_error_grid(1.0, n_points)
    summaries = []
    for alpha in alphas:
        ref = np.array([ml_one_param_ref(alpha, float(t)) for t in grid])
        for q, l in ql:
            for eps in eps_list:
                rows, summary = soe_error_table(alpha, q, l, eps, grid, ref)
                summaries.append(summary)
                if rows is not None:
                    name = f"soe_error_a{alpha:g}_q{q:g}_l{l:g}_eps{eps:g}.csv"
                    write_csv(out / name, ["t", "e_ref", "e_soe", "abs_err"], rows)
    header = ["alpha", "q", "l", "eps", "K", "J", "n_exp", "max_abs_err", "bound", "bound_holds", "status"]
    write_csv(out / "soe_summary.csv", header, summaries)
    return summaries


# ------------------------------------------------------ solver benchmark

BENCH_HEADER = [
    "h", "dt", "scheme", "linf_l2_error", "history_floats", "history_mbytes",
    "history_update_seconds", "total_seconds", "n_exp", "status",
]


def _bench_one(args):
    cfg, n, dt, scheme = args
    disc = setup_problem(n, cfg.material)
    return _bench_row(disc, cfg, n, dt, scheme)


def _bench_row(disc, cfg, n, dt, scheme, soe=None):
    row = dict.fromkeys(BENCH_HEADER, "")
    row.update(h=1.0 / n, dt=dt, scheme=scheme)
    try:
        if scheme == "fast" and soe is None:
            soe = build_soe(cfg.soe_params())
        traj, stats = run_case(disc, cfg, dt, scheme, soe)
        err = trajectory_error(traj, disc.problem.u_exact, disc.mesh, disc.layout)
    except SolverError as exc:
        row["status"] = f"failed: {exc}"
        return row
    row.update(
        linf_l2_error=err,
        history_floats=stats.history_floats,
        history_mbytes=stats.history_mbytes,
        history_update_seconds=stats.history_update_seconds,
        total_seconds=stats.total_seconds,
        n_exp=soe.n_exp if scheme == "fast" else 0,
        status="ok",
    )
    return row


def run_solver_benchmark(cfg: BenchConfig, out: str | os.PathLike | None = None) -> list[dict]:
    """Solve the manufactured problem for every ``(h, dt, scheme)`` and write ``solver_bench.csv``."""
    cfg.validate()
    schemes = ("l1", "fast") if cfg.scheme == "both" else (cfg.scheme,)
    jobs = [(cfg, n, dt, sch) for n in cfg.h_list for dt in cfg.dt_list for sch in schemes]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_bench_one, jobs))
    else:
        rows = []
        soe = build_soe(cfg.soe_params()) if "fast" in schemes else None
        for n in cfg.h_list:
            disc = setup_problem(n, cfg.material)
            for dt in cfg.dt_list:
                for sch in schemes:
                    rows.append(_bench_row(disc, cfg, n, dt, sch, soe))
    out = Path(out or cfg.out)
    write_csv(out / "solver_bench.csv", BENCH_HEADER, rows)
    return rows
