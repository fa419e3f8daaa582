"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime failure.  Errors are also
reported as one JSON object on standard error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import __version__
from ..reduced_model import (ReducedModelError, delta_asymptotic, delta_dot_initial,
                             delta_period, reduced_constants)
from .invariants import check_run, conservation_check
from .runner import run_tier, write_trajectory
from .scenario import TIERS, ScenarioFileError, load_scenario, set_path
from .sweep import Axis, SweepSpec, emit_contour, run_sweep
from .usecases import USECASE_IDS, build_usecase

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", type=Path, help="scenario YAML file")
    src.add_argument("--usecase", type=int, choices=USECASE_IDS, default=None,
                     help="built-in use-case (default 1)")
    p.add_argument("--variant", default="default", help="use-case variant, e.g. random_omega")
    p.add_argument("--tier", choices=TIERS, default="global")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="PATH=VALUE", help="override a scenario key (repeatable)")
    p.add_argument("--seed", type=int, default=None, help="frequency-draw seed")
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lksim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lksim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="integrate one scenario and write its trajectory CSV")
    _common(p)
    p.add_argument("--early-stop", action="store_true",
                   help="end the run once a force is extinct (p_final is unchanged)")

    p = sub.add_parser("sweep", help="two-parameter sweep; writes grid.csv and plot_grid.py")
    _common(p)
    p.add_argument("--axis1", default="coupling.phi_BR:0:pi:33", help="path:lo:hi:steps")
    p.add_argument("--axis2", default="coupling.phi_RB:0:pi:33", help="path:lo:hi:steps")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("constants", help="print reduced-model constants")
    _common(p)

    p = sub.add_parser("validate", help="run the invariant suite on one scenario")
    _common(p)

    p = sub.add_parser("scenario", help="print the resolved scenario as YAML")
    _common(p)
    return parser


def _load(args):
    if args.scenario is not None:
        scn = load_scenario(args.scenario).with_overrides(args.overrides)
    else:
        scn = build_usecase(args.usecase or 1, args.overrides, args.variant)
    extra = {}
    if args.seed is not None:
        extra["seed"] = args.seed
    if args.t_final is not None:
        extra["t_final"] = args.t_final
    if extra:
        config = scn.config
        for key, value in extra.items():
            config = set_path(config, key, value)
        scn = type(scn)(config, scn.base_dir)
    return scn


def _cmd_run(args, scn) -> int:
    res = run_tier(scn, args.tier, stop_when_extinct=args.early_stop)
    args.out.mkdir(parents=True, exist_ok=True)
    path = write_trajectory(res, args.out / f"{scn.name}_{args.tier}.csv",
                            scn.header(f"tier: {args.tier}\nt_final: {scn.t_final!r}"))
    print(f"tier = {args.tier}")
    print(f"status = {res.status}")
    print(f"t_end = {res.t_end:.17g}")
    print(f"p_final = {res.p_final:.17g}")
    print(f"winner = {res.winner}")
    print(f"trajectory = {path}")
    return EXIT_OK if res.status in ("completed", "extinct") else EXIT_RUNTIME


def _cmd_sweep(args, scn) -> int:
    spec = SweepSpec(Axis.parse(args.axis1), Axis.parse(args.axis2), scn, tier=args.tier,
                     workers=args.workers)
    grid = run_sweep(spec)
    csv_path, script = emit_contour(grid, args.out)
    n_bad = int((~grid.ok).sum())
    print(f"cells = {grid.p_final.size}")
    print(f"blue_fraction = {grid.blue_fraction():.6g}")
    print(f"red_fraction = {grid.red_fraction():.6g}")
    print(f"failed_cells = {n_bad}")
    print(f"grid = {csv_path}")
    print(f"plot_script = {script}")
    return EXIT_OK


def _cmd_constants(args, scn) -> int:
    c = reduced_constants(scn.global_scenario())
    print(f"C = {c.C:.12g}")
    print(f"S = {c.S:.12g}")
    print(f"K = {c.K:.12g}")
    print(f"omega_bar_B = {c.omega_bar_B:.12g}")
    print(f"omega_bar_R = {c.omega_bar_R:.12g}")
    print(f"d_T_BR = {c.d_T_BR}")
    print(f"d_T_RB = {c.d_T_RB}")
    try:
        print(f"Delta_inf = {delta_asymptotic(c):.12g}")
    except ReducedModelError:
        print("Delta_inf = none (K < 0)")
        print(f"period = {delta_period(c):.12g}")
    print(f"Delta_dot_0 = {delta_dot_initial(c):.12g}")
    return EXIT_OK


def _cmd_validate(args, scn) -> int:
    res = run_tier(scn, args.tier)
    checks = check_run(res, scn)
    if args.tier == "networked":
        n = scn.networked_scenario()
        if n.kappa_BR == 0 and n.kappa_RB == 0:
            checks.append(conservation_check(res))
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.ok for c in checks) else EXIT_RUNTIME


def _cmd_scenario(args, scn) -> int:
    sys.stdout.write(scn.dump())
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "constants": _cmd_constants,
             "validate": _cmd_validate, "scenario": _cmd_scenario}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        scn = _load(args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except (ScenarioFileError, ValueError, OSError, KeyError) as exc:
        return _fail("usage", f"{type(exc).__name__}: {exc}", EXIT_USAGE)
    try:
        return _COMMANDS[args.command](args, scn)
    except ScenarioFileError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        return _fail("runtime", f"{type(exc).__name__}: {exc}", EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
