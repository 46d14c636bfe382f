"""Command-line entry point.

Subcommands: solve, export, simulate, check, reproduce.  Options come from
an optional JSON config file (sections scenario / strategy / functional /
relaxation / solver / output) with command-line flags taking precedence.

Exit codes: 0 success/optimal, 1 configuration error, 2 infeasible,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from . import moment, qsim, solver, tasks
from .moment import RelaxationFlags
from .scenario import (ShapeError, behavior_from_text, behavior_to_text,
                       chsh_scenario, named_functionals, randomness_scenario,
                       two_step_scenario, validate_behavior)
from .solver import SolverConfig

SCENARIOS = {
    "chsh": chsh_scenario,
    "two_step": two_step_scenario,
    "randomness": randomness_scenario,
}


class ConfigError(Exception):
    pass


def _load_config(path):
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be an object")
    return cfg


def _merge(cfg: dict, section: str, key: str, override, default=None):
    if override is not None:
        return override
    return cfg.get(section, {}).get(key, default)


def _get_scenario(name: str):
    if name not in SCENARIOS:
        raise ConfigError(f"scenario: unknown name {name!r} "
                          f"(choose from {sorted(SCENARIOS)})")
    return SCENARIOS[name]()


def _get_strategy(cfg: dict, args):
    name = _merge(cfg, "strategy", "name", getattr(args, "strategy", None))
    if name is None:
        raise ConfigError("strategy: missing name")
    eta = float(_merge(cfg, "strategy", "eta", getattr(args, "eta", None), 0.0))
    eps = float(_merge(cfg, "strategy", "eps", getattr(args, "eps", None),
                       7 * math.pi / 32))
    if name == "chsh":
        return chsh_scenario(), qsim.chsh_strategy(eta)
    if name == "randomness":
        return randomness_scenario(), qsim.randomness_strategy(eta, eps)
    if name == "gallego":
        return two_step_scenario(), qsim.gallego_strategy()
    raise ConfigError(f"strategy: unknown name {name!r}")


def _flags(cfg: dict, args) -> RelaxationFlags:
    seq = _merge(cfg, "relaxation", "sequential",
                 True if getattr(args, "sequential", False) else None, True)
    loc = _merge(cfg, "relaxation", "local_commuting",
                 True if getattr(args, "local_commuting", False) else None, False)
    return RelaxationFlags(sequential_noback=bool(seq), local_commuting=bool(loc))


def _solver_config(cfg: dict, args) -> SolverConfig:
    sec = cfg.get("solver", {})
    kw = {}
    for key in ("solver", "feas_tol", "gap_tol", "max_iter", "verbose"):
        if key in sec:
            kw[key] = sec[key]
    if getattr(args, "gap_tol", None) is not None:
        kw["gap_tol"] = args.gap_tol
    if getattr(args, "verbose", False):
        kw["verbose"] = True
    return SolverConfig(**kw)


def _out_path(cfg: dict, args, default: str) -> str:
    return _merge(cfg, "output", "path", getattr(args, "output", None), default)


def _check_level(level: str) -> str:
    from . import ncalg
    try:
        ncalg.parse_level(level)
    except (ValueError, ShapeError) as exc:
        raise ConfigError(f"level: {exc}") from exc
    return level


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    scn_name = _merge(cfg, "scenario", "name", args.scenario, None)
    func_name = _merge(cfg, "functional", "name", args.functional, None)
    level = _check_level(_merge(cfg, "relaxation", "level", args.level, "1"))
    flags = _flags(cfg, args)
    config = _solver_config(cfg, args)

    if func_name is None:
        raise ConfigError("functional: missing name")
    if scn_name is None:
        scn_name = {"chsh": "chsh"}.get(func_name, "two_step")
    scn = _get_scenario(scn_name)
    library = named_functionals(scn)
    if func_name not in library:
        raise ConfigError(f"functional: unknown name {func_name!r} for "
                          f"scenario {scn_name!r} (choose from {sorted(library)})")
    res = tasks.max_functional(scn, library[func_name], level, flags,
                               config=config)
    record = {
        "task": "solve",
        "scenario": scn_name,
        "functional": func_name,
        "level": level,
        "sequential": flags.sequential_noback,
        "local_commuting": flags.local_commuting,
        "value": res.value,
        "verified_bound": res.verified_bound,
        "gap": res.gap,
        "status": res.status,
        "solver": res.solver_name,
        "wall_time_s": round(res.wall_time, 3),
    }
    print(json.dumps(record, indent=2))
    if res.status == "infeasible":
        return 2
    if res.status not in ("optimal",):
        return 3
    return 0


def cmd_export(args) -> int:
    cfg = _load_config(args.config)
    scn_name = _merge(cfg, "scenario", "name", args.scenario, "chsh")
    func_name = _merge(cfg, "functional", "name", args.functional, "chsh")
    level = _check_level(_merge(cfg, "relaxation", "level", args.level, "1"))
    flags = _flags(cfg, args)
    scn = _get_scenario(scn_name)
    library = named_functionals(scn)
    if func_name not in library:
        raise ConfigError(f"functional: unknown name {func_name!r}")
    p = moment.build_moment_problem(scn, level, flags, reduce_basis=True)
    p = moment.set_objective(p, library[func_name])
    form = moment.compile_to_sdp(p)
    path = _out_path(cfg, args, f"{func_name}_{level.replace('+', 'p')}.dat-s")
    solver.export_sdpa(form, path)
    print(f"wrote {path}: blocks {form.block_sizes}, "
          f"{len(form.constraints)} constraints")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    _, strategy = _get_strategy(cfg, args)
    bhv = qsim.sequential_behavior(strategy)
    path = _out_path(cfg, args, "behavior.txt")
    with open(path, "w") as fh:
        fh.write(behavior_to_text(bhv))
    print(f"wrote {path}: {len(bhv.table)} probabilities")
    return 0


def cmd_check(args) -> int:
    if not os.path.exists(args.behavior):
        raise ConfigError(f"behavior: file not found: {args.behavior}")
    with open(args.behavior) as fh:
        try:
            bhv = behavior_from_text(fh.read())
        except (ValueError, ShapeError) as exc:
            raise ConfigError(f"behavior: {exc}") from exc
    violations = validate_behavior(bhv)
    if violations:
        for v in violations:
            print(f"violated: {v}")
        return 2
    print(f"ok: {len(bhv.table)} probabilities, normalized and one-way no-signalling")
    return 0


def _reproduce_gallego(outdir: str, config) -> list[tuple[str, float, bool]]:
    res = tasks.gallego_bound(config=config or SolverConfig())
    upper = res["upper"].value
    checks = [
        ("upper bound = 2.8284 +- 1e-3", upper, abs(upper - 2 * math.sqrt(2)) <= 1e-3),
        ("strategy lower bound >= 2.8274", res["lower"], res["lower"] >= 2.8284 - 1e-3),
        ("time-ordered-local value = 2", res["tol"], abs(res["tol"] - 2.0) < 1e-12),
    ]
    return checks


def _reproduce_tradeoff(outdir: str, config) -> list[tuple[str, float, bool]]:
    grid = [0.0, 2.0, 2.4, 2.7, 2 * math.sqrt(2)]
    pts = tasks.chsh_tradeoff_scan(grid, config=config or SolverConfig())
    path = os.path.join(outdir, "tradeoff.dat")
    with open(path, "w") as fh:
        fh.write(tasks.format_curve(pts))
    checks = []
    for s, bound in pts:
        ref = tasks.tradeoff_reference(s)
        checks.append((f"s={s:.6g}: bound within 1e-3 of {ref:.6f}",
                       bound, abs(bound - ref) <= 1e-3))
    return checks


def _reproduce_fig_rand(outdir: str, config) -> list[tuple[str, float, bool]]:
    etas = [round(0.01 * i, 2) for i in range(15)]
    pts = tasks.randomness_curve(etas, config=config)
    path = os.path.join(outdir, "randomness.dat")
    with open(path, "w") as fh:
        fh.write(tasks.format_curve(pts))
    chsh_pts = tasks.chsh_guessing_curve(etas)
    with open(os.path.join(outdir, "randomness_chsh.dat"), "w") as fh:
        fh.write(tasks.format_curve(chsh_pts))
    bits0 = pts[0][1]
    checks = [("min-entropy at eta=0 >= 2.3 bits", bits0, bits0 >= 2.3)]
    seq = dict(pts)
    chsh = dict(chsh_pts)
    advantage = all(seq[e] > chsh[e] for e in etas if e <= 0.03)
    checks.append(("sequential curve above one-step curve for eta <= 0.03",
                   float(advantage), advantage))
    monotone = all(pts[i][1] >= pts[i + 1][1] - 1e-6 for i in range(len(pts) - 1))
    checks.append(("curve nonincreasing in eta", float(monotone), monotone))
    return checks


def cmd_reproduce(args) -> int:
    cfg = _load_config(args.config)
    outdir = _out_path(cfg, args, ".")
    os.makedirs(outdir, exist_ok=True)
    config = _solver_config(cfg, args) if (args.config or args.gap_tol) else None
    runners = {
        "gallego": _reproduce_gallego,
        "tradeoff": _reproduce_tradeoff,
        "fig-rand": _reproduce_fig_rand,
    }
    if args.target not in runners:
        raise ConfigError(f"target: unknown {args.target!r} "
                          f"(choose from {sorted(runners)})")
    t0 = time.time()
    checks = runners[args.target](outdir, config)
    failed = 0
    for name, value, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  (got {value:.6f})")
        failed += 0 if ok else 1
    print(f"{len(checks) - failed}/{len(checks)} checkpoints passed "
          f"in {time.time() - t0:.1f}s")
    return 0 if failed == 0 else 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqnpa",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON config file")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", choices=sorted(SCENARIOS))
    common.add_argument("--functional")
    common.add_argument("--level")
    common.add_argument("--sequential", action="store_true",
                        help="impose the sequential no-signalling constraints")
    common.add_argument("--local-commuting", dest="local_commuting",
                        action="store_true")
    common.add_argument("--gap-tol", dest="gap_tol", type=float)
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--output", "-o")

    sub.add_parser("solve", parents=[common]).set_defaults(func=cmd_solve)
    sub.add_parser("export", parents=[common]).set_defaults(func=cmd_export)

    sim = sub.add_parser("simulate", parents=[common])
    sim.add_argument("--strategy", choices=["chsh", "randomness", "gallego"])
    sim.add_argument("--eta", type=float)
    sim.add_argument("--eps", type=float)
    sim.set_defaults(func=cmd_simulate)

    chk = sub.add_parser("check")
    chk.add_argument("behavior", help="behavior text file to validate")
    chk.set_defaults(func=cmd_check)

    rep = sub.add_parser("reproduce", parents=[common])
    rep.add_argument("target", help="fig-rand | tradeoff | gallego")
    rep.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
