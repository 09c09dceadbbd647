"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import selftest
from .bench import BenchConfig, run_case, run_soe_table, run_solver_benchmark, setup_problem
from .errors import AccuracyError, SoeValidityWarning, SolverError
from .mittag_leffler import ml_one_param_ref
from .soe import SoeParams, build_soe, soe_eval
from .solvers import save_trajectory, trajectory_error

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_PHYSICAL = ("alpha", "tau_sigma", "tau_eps", "rho", "lambda", "mu", "T", "theta1", "theta2")
_SOE = ("q", "l", "eps")


def _add_config_flags(p: argparse.ArgumentParser, lists: bool = True) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON file with BenchConfig fields; flags override it")
    for name in _PHYSICAL:
        p.add_argument(f"--{name}", type=float, default=S)
    for name in _SOE:
        p.add_argument(f"--{name}", type=float, default=S, help="SOE parameter")
    p.add_argument("--constitutive_form", choices=("displacement", "velocity-paper"), default=S)
    p.add_argument("--out", default=S, help="output directory")
    if lists:
        p.add_argument("--h_list", type=float, nargs="+", default=S, help="mesh sizes as n or 1/n")
        p.add_argument("--dt_list", type=float, nargs="+", default=S)
        p.add_argument("--scheme", choices=("l1", "fast", "both"), default=S)
        p.add_argument("--workers", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastvisco", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("soe-table", help="q3 / N_exp tables and SOE error curves")
    _add_config_flags(p, lists=False)
    p.add_argument("--points", type=int, default=1000)

    p = sub.add_parser("soe-eval", help="compare the SOE kernel with the reference at given times")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--q", type=float, default=10.0)
    p.add_argument("--l", type=float, default=1.1)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--T_max", type=float, default=1.0)
    p.add_argument("--t", type=float, nargs="+", required=True)

    p = sub.add_parser("solve", help="one run of the manufactured problem, writes run.json")
    _add_config_flags(p, lists=False)
    p.add_argument("--scheme", choices=("l1", "fast"), default="fast")
    p.add_argument("--h", type=float, default=8, help="mesh size as n or 1/n")
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--trajectory", help="also write the binary trajectory to this path")

    p = sub.add_parser("bench", help="solver benchmark over h_list x dt_list")
    _add_config_flags(p)

    sub.add_parser("selftest", help="run the invariant checks")
    return parser


def config_from_args(args: argparse.Namespace, **overrides) -> BenchConfig:
    """JSON config (if any), then explicit flags, then ``overrides``."""
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    given = vars(args)
    names = _PHYSICAL + ("constitutive_form", "out", "h_list", "dt_list", "workers")
    if args.command == "bench":
        names += ("scheme",)
    data.update({k: given[k] for k in names if k in given})
    soe = dict(data.get("soe", {}))
    soe.update({k: given[k] for k in _SOE if k in given})
    if soe:
        data["soe"] = soe
    data.update(overrides)
    return BenchConfig.from_dict(data)


def _cmd_soe_table(args) -> int:
    cfg = config_from_args(args)
    cfg.validate()
    summaries = run_soe_table(cfg, n_points=args.points)
    bad = [s for s in summaries if s["status"] == "ok" and not s["bound_holds"]]
    print(f"wrote tables to {cfg.out}; {len(summaries)} configurations, "
          f"{len(bad)} with measured error above the a priori bound")
    return EXIT_OK


def _cmd_soe_eval(args) -> int:
    exp = build_soe(SoeParams(args.alpha, args.q, args.l, args.eps, args.T_max))
    print(f"# K={exp.K} J={exp.J} n_exp={exp.n_exp}")
    print("t,e_soe,e_ref,abs_err")
    for t in args.t:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SoeValidityWarning)
            e_soe = soe_eval(exp, t)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        e_ref = ml_one_param_ref(args.alpha, t)
        print(f"{t:.11e},{e_soe:.11e},{e_ref:.11e},{abs(e_soe - e_ref):.11e}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = config_from_args(args, h_list=[args.h], dt_list=[args.dt], scheme=args.scheme)
    cfg.validate()
    n = cfg.h_list[0]
    disc = setup_problem(n, cfg.material)
    traj, stats = run_case(disc, cfg, args.dt, args.scheme)
    err = trajectory_error(traj, disc.problem.u_exact, disc.mesh, disc.layout)
    n_exp = build_soe(cfg.soe_params()).n_exp if args.scheme == "fast" else 0
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    record = {
        "config": cfg.to_dict(),
        "scheme": args.scheme,
        "h": 1.0 / n,
        "dt": args.dt,
        "error": err,
        "n_exp": n_exp,
        "stats": json.loads(stats.to_json()),
    }
    (out / "run.json").write_text(json.dumps(record, indent=2))
    if args.trajectory:
        save_trajectory(traj, args.trajectory)
    print(f"{args.scheme} h=1/{n} dt={args.dt:g}: error {err:.6e}, "
          f"history {stats.history_mbytes:.4g} MB, wrote {out / 'run.json'}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = config_from_args(args)
    rows = run_solver_benchmark(cfg)
    failed = [r for r in rows if r["status"] != "ok"]
    print(f"wrote {Path(cfg.out) / 'solver_bench.csv'} ({len(rows)} rows, {len(failed)} failed)")
    return EXIT_NUMERIC if failed else EXIT_OK


_COMMANDS = {
    "soe-table": _cmd_soe_table,
    "soe-eval": _cmd_soe_eval,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "selftest": lambda args: selftest.main(),
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except (SolverError, AccuracyError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
