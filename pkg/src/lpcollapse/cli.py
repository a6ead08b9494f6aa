"""Command-line front end.

    lpcollapse solve      [--config FILE] [--out-dir DIR] [--tol-ode ...]
    lpcollapse classify   --y-star Y
    lpcollapse sweep      --from 2 --to 3 --step 0.05 [--jobs N]
    lpcollapse series     --y-star Y [--branch LP|Hunter] [--rho0 R] [--n-max N]
    lpcollapse verify     [--config FILE]
    lpcollapse export-physical SOLUTION.json --k 1 --t -1

Exit codes: 0 ok, 2 configuration or input error, 3 solver error,
4 verification failure.  Outputs contain no timestamps, so repeated runs
with the same configuration produce identical files.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import SolverConfig, config_from_mapping, load_config
from .errors import CenterMismatch, ConfigError, InvalidParameter, LPError
from .model import to_physical
from .origin import extend_origin_series, origin_series_to_dict
from .profile import fmt, profile_from_dict, write_json
from .shooting import classify, solve_lp
from .sonic import extend_series, normalize_branch, series_to_dict
from .verify import run_suite

log = logging.getLogger("lpcollapse")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4

SOLUTION_FILE = "lp_solution.json"
PROFILE_CSV = "profile.csv"
PROFILE_JSON = "profile.json"
INVARIANTS_FILE = "invariants.json"
SWEEP_HEADER = "y_star,label,z_one_third,sonic_time,inf_omega"


def _opt(x) -> str:
    return "" if x is None else fmt(x)


def resolve_config(args) -> SolverConfig:
    """Config file first, then command-line flags on top."""
    cfg = load_config(args.config) if getattr(args, "config", None) else SolverConfig()
    over = {}
    for flag, key in (("tol_ode", "tol_ode"), ("tol_y", "tol_y"), ("z_max", "z_max"),
                      ("n_max", "n_max"), ("out_dir", "out_dir")):
        v = getattr(args, flag, None)
        if v is not None:
            over[key] = v
    return config_from_mapping(over, cfg) if over else cfg


def _out_dir(cfg: SolverConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


####################################################################
# commands

def cmd_solve(args) -> int:
    cfg = resolve_config(args)
    try:
        sol = solve_lp(cfg)
    except CenterMismatch as exc:
        log.error("centre mismatch: %s", exc)
        return EXIT_SOLVER
    rep = run_suite(sol, cfg, monotonicity=not args.skip_monotonicity)
    out = _out_dir(cfg)
    sol.profile.to_csv(os.path.join(out, PROFILE_CSV))
    write_json(sol.profile.to_dict(), os.path.join(out, PROFILE_JSON))
    rep.to_json(os.path.join(out, INVARIANTS_FILE))
    summary = sol.summary(INVARIANTS_FILE, cfg.tolerances())
    summary["profile_json"] = PROFILE_JSON
    summary["profile_csv"] = PROFILE_CSV
    summary["verdict"] = rep.verdict
    write_json(summary, os.path.join(out, SOLUTION_FILE))
    print(f"y_bar = {fmt(sol.y_bar)}")
    print(f"rho(0) = {fmt(sol.rho_center)}  C = {fmt(sol.farfield_C)}")
    print(f"invariants: {rep.verdict}  ({len(rep.entries)} checks) -> {out}")
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_classify(args) -> int:
    cfg = resolve_config(args)
    c = classify(args.y_star, cfg, args.branch)
    print(f"y*={fmt(c.y_star)} label={c.label} event={c.event}")
    print(_dump(c.as_dict()))
    return EXIT_OK


def _classify_row(job):
    y, cfg, branch = job
    try:
        c = classify(y, cfg, branch)
    except LPError as exc:
        return (y, "unclassified", None, None, None, str(exc))
    return (y, c.label, c.z_one_third, c.sonic_time_estimate, c.inf_omega, "")


def sweep_grid(lo: float, hi: float, step: float):
    if not (math.isfinite(step) and step > 0):
        raise ConfigError(f"sweep step must be positive, got {step}")
    if hi < lo:
        return []
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [min(lo + i * step, hi) for i in range(n)]


def sweep_csv(rows) -> str:
    lines = [SWEEP_HEADER]
    for y, label, z3, st, inf_w, _ in rows:
        lines.append(",".join((fmt(y), label, _opt(z3), _opt(st), _opt(inf_w))))
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    grid = sweep_grid(args.y_from, args.y_to, args.step)
    jobs = [(y, cfg, args.branch) for y in grid]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_classify_row, jobs))    # map keeps the input order
    else:
        rows = [_classify_row(j) for j in jobs]
    for r in rows:
        if r[5]:
            log.warning("y*=%s: %s", fmt(r[0]), r[5])
    text = sweep_csv(rows)
    path = args.output or os.path.join(_out_dir(cfg), "sweep.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    print(f"{len(rows)} rows -> {path}")
    return EXIT_OK


def cmd_series(args) -> int:
    n_max = args.n_max if args.n_max is not None else 80
    if n_max < 1:
        raise ConfigError("--n-max must be >= 1")
    if args.rho0 is not None:
        d = origin_series_to_dict(extend_origin_series(args.y_star, args.rho0, n_max))
    else:
        d = series_to_dict(extend_series(args.y_star, n_max, normalize_branch(args.branch)))
    text = _dump(d) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    try:
        sol = solve_lp(cfg)
    except CenterMismatch as exc:
        log.error("centre mismatch: %s", exc)
        return EXIT_SOLVER
    rep = run_suite(sol, cfg, monotonicity=not args.skip_monotonicity)
    print(rep.table())
    if args.output:
        rep.to_json(args.output)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def load_profile(path):
    """Profile from profile.json, or from lp_solution.json via its profile_json entry."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if "z" not in d:
        ref = d.get("profile_json")
        if not ref:
            raise ConfigError(f"{path} holds neither a profile nor a profile reference")
        return load_profile(os.path.join(os.path.dirname(os.path.abspath(path)), ref))
    try:
        return profile_from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed profile {path}: {exc}") from None


def physical_csv(snap) -> str:
    lines = ["r,varrho,u,m"]
    for row in zip(snap.r, snap.varrho, snap.u, snap.m):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def cmd_export_physical(args) -> int:
    prof = load_profile(args.solution)
    snap = to_physical(prof, args.k, args.t)
    text = physical_csv(snap)
    if args.output:
        with open(args.output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


####################################################################
# parser

def _common(sp, solver=True):
    sp.add_argument("--config", help="TOML file with solver settings")
    sp.add_argument("--out-dir", dest="out_dir")
    if solver:
        sp.add_argument("--tol-ode", dest="tol_ode", type=float)
        sp.add_argument("--tol-y", dest="tol_y", type=float)
        sp.add_argument("--z-max", dest="z_max", type=float)
        sp.add_argument("--n-max", dest="n_max", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpcollapse",
                                 description="Larson-Penston self-similar collapse solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="find y_bar and the full profile")
    _common(sp)
    sp.add_argument("--skip-monotonicity", action="store_true",
                    help="skip the finite-difference monotonicity scan")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("classify", help="label one sonic parameter X, Y or Z")
    _common(sp)
    sp.add_argument("--y-star", dest="y_star", type=float, required=True)
    sp.add_argument("--branch", default="LP")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("sweep", help="classify a grid of sonic parameters")
    _common(sp)
    sp.add_argument("--from", dest="y_from", type=float, default=2.0)
    sp.add_argument("--to", dest="y_to", type=float, default=3.0)
    sp.add_argument("--step", type=float, default=0.05)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--branch", default="LP")
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("series", help="dump sonic or origin series coefficients")
    sp.add_argument("--y-star", dest="y_star", type=float, required=True)
    sp.add_argument("--rho0", type=float, help="origin series with this central density")
    sp.add_argument("--branch", default="LP")
    sp.add_argument("--n-max", dest="n_max", type=int)
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_series)

    sp = sub.add_parser("verify", help="solve and print the invariant report")
    _common(sp)
    sp.add_argument("--skip-monotonicity", action="store_true")
    sp.add_argument("--output", "-o", help="write the report as JSON")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("export-physical", help="physical (r, varrho, u, m) at time t")
    sp.add_argument("solution", help="lp_solution.json or profile.json")
    sp.add_argument("--k", type=float, default=1.0, help="sound speed squared")
    sp.add_argument("--t", type=float, default=-1.0, help="time, must be negative")
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_export_physical)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except (ConfigError, InvalidParameter) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LPError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
