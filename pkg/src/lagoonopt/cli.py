"""Command-line entry point.

Exit codes: 0 success, 1 bad input or usage, 2 infeasible schedule or
failed feasibility check.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from lagoonopt.core import ConfigError, InfeasibleError, Objective, schedule_violations, swansea_config
from lagoonopt.io import (
    DEFAULT_T0,
    OutputTargets,
    load_config,
    load_prices,
    load_schedule_document,
    load_series_csv,
    parse_synth_spec,
    schedule_columns,
    storage_columns,
    synth_tide,
    write_outputs,
    write_series_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_problem_args(p: argparse.ArgumentParser, prices: bool = True) -> None:
    p.add_argument("--config", help="lagoon configuration JSON (default: Swansea Bay)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--tide", help="tide CSV with header timestamp,value")
    src.add_argument("--synth-tide", metavar="MEAN,AMP,PERIOD,PHASE",
                     help="single-harmonic tide instead of a file")
    p.add_argument("--steps", type=int, default=48, help="steps for --synth-tide (default 48)")
    p.add_argument("--t0", default=DEFAULT_T0, help="first timestamp for --synth-tide")
    if prices:
        p.add_argument("--prices", help="price CSV or flat:<value>")
        p.add_argument("--objective", choices=[o.value for o in Objective], default="max-energy")
    p.add_argument("--out-dir", default=".", help="directory for output files")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lagoonopt", description="Day-ahead scheduling for an ebb-generation tidal lagoon.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    opt = sub.add_parser("optimize", help="optimal schedule by dynamic programming")
    _add_problem_args(opt)
    opt.add_argument("--dz", type=float, default=0.01, help="level grid resolution in m")
    opt.add_argument("--backend", choices=["cython", "python"], help="force a kernel backend")
    opt.add_argument("--lp", action="store_true", help="also write model.lp")
    opt.add_argument("--simulate", action="store_true", help="also write simulation.csv")
    opt.add_argument("--storage", action="store_true", help="also write storage.csv")
    opt.add_argument("--substep", type=float, default=60.0, help="simulation sub-step in s")

    sim = sub.add_parser("simulate", help="nonlinear replay of a schedule file")
    sim.add_argument("--schedule", required=True, help="schedule.json written by optimize")
    sim.add_argument("--substep", type=float, default=60.0, help="sub-step in s")
    sim.add_argument("--out-dir", default=".")

    sto = sub.add_parser("storage", help="storage profile for a tide")
    _add_problem_args(sto, prices=False)

    lp = sub.add_parser("export-lp", help="write the MILP in LP format")
    _add_problem_args(lp)
    lp.add_argument("--output", help="LP path (default OUT_DIR/model.lp)")

    chk = sub.add_parser("check", help="feasibility report on a schedule file")
    chk.add_argument("--schedule", required=True)
    chk.add_argument("--tol", type=float, default=1e-6)
    return parser


def _problem(args, need_prices: bool = True):
    config = load_config(args.config) if args.config else swansea_config()
    if args.tide:
        tide = load_series_csv(args.tide, "tide", dt_s=config.dt_s)
    else:
        mean, amp, period, phase = parse_synth_spec(args.synth_tide)
        if args.steps < 1:
            raise ValueError("--steps must be at least 1")
        tide = synth_tide(mean, amp, period, phase, t0=args.t0, dt_s=config.dt_s, steps=args.steps)
    prices = None
    if need_prices and args.prices:
        prices = load_prices(args.prices, tide)
    objective = Objective(args.objective) if need_prices else Objective.MAX_ENERGY
    if objective is Objective.MAX_REVENUE and prices is None:
        raise ValueError("--objective max-revenue needs --prices")
    return config, tide, prices, objective


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_optimize(args) -> int:
    from lagoonopt.dp import DpParams, optimize
    from lagoonopt.milp import build_milp
    from lagoonopt.sim import simulate
    from lagoonopt.storage import storage_profile, summarize

    config, tide, prices, objective = _problem(args)
    result = optimize(config, tide, prices, objective, DpParams(level_resolution_m=args.dz),
                      backend=args.backend)
    sim = simulate(config, tide, result.schedule.modes, args.substep, prices) if args.simulate else None
    storage = storage_profile(config, tide) if args.storage else None
    model = build_milp(config, tide, prices, objective) if args.lp else None
    targets = OutputTargets.in_dir(_out_dir(args.out_dir), lp=args.lp, simulation=args.simulate,
                                   storage=args.storage)
    written = write_outputs(result, config, tide, prices, targets, sim=sim, storage=storage, model=model)
    totals = summarize(result.schedule, prices, config)
    print(f"objective {objective.value}: {result.objective_value:.6f}")
    print(f"energy {totals.energy_mwh:.3f} MWh, revenue {totals.revenue:.2f}, "
          f"capacity factor {totals.capacity_factor:.4f}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from lagoonopt.sim import compare, simulate

    schedule, config, tide, prices, _ = load_schedule_document(args.schedule)
    sim = simulate(config, tide, schedule.modes, args.substep, prices)
    report = compare(schedule, sim)
    out = _out_dir(args.out_dir) / "simulation.csv"
    write_series_csv(out, tide.t0, tide.dt_s, schedule_columns(sim, prices))
    print(f"energy: schedule {report.total_energy_schedule:.3f} MWh, "
          f"simulated {report.total_energy_sim:.3f} MWh, gap {100 * report.relative_energy_gap:.2f}%")
    print(json.dumps(report.stats(), sort_keys=True))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_storage(args) -> int:
    from lagoonopt.storage import storage_profile

    config, tide, _, _ = _problem(args, need_prices=False)
    profile = storage_profile(config, tide)
    out = _out_dir(args.out_dir) / "storage.csv"
    write_series_csv(out, tide.t0, tide.dt_s, storage_columns(profile, tide))
    print(f"basin held at {profile.z_max_m:.3f} m; "
          f"peak one-step energy {profile.stored_energy_mwh.max():.3f} MWh")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_export_lp(args) -> int:
    from lagoonopt.milp import build_milp, export_lp

    config, tide, prices, objective = _problem(args)
    model = build_milp(config, tide, prices, objective)
    out = Path(args.output) if args.output else _out_dir(args.out_dir) / "model.lp"
    out.write_text(export_lp(model))
    print(f"{len(model.variables)} variables, {len(model.constraints)} constraints, "
          f"{len(model.binaries())} binaries")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    from lagoonopt.milp import build_milp, check_schedule

    schedule, config, tide, prices, doc = load_schedule_document(args.schedule)
    objective = Objective(doc.get("objective", "max-energy"))
    model = build_milp(config, tide, prices if objective is Objective.MAX_REVENUE else None, objective)
    problems = [str(v) for v in check_schedule(model, schedule, args.tol)]
    problems += schedule_violations(schedule, config.h_bounds_m)
    if problems:
        print(f"{len(problems)} violation(s):")
        for line in problems:
            print(f"  {line}")
        return EXIT_INFEASIBLE
    print(f"feasible: {schedule.n_steps} steps, {len(model.constraints)} constraints satisfied")
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "storage": cmd_storage,
    "export-lp": cmd_export_lp,
    "check": cmd_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
