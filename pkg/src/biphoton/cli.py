"""Command-line entry point: ``biphoton {eval,schmidt,sweep,optimize,preset,validate}``.

Exit codes: 0 success, 2 invalid input, 3 numerical convergence failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .config import (ConfigError, RunConfig, UNITS, config_comments, dump_json, parse_config,
                     species_label, validate_config, write_text)
from .multiplex import Evaluator, GeometryError, GeometryFamily, make_shifts
from .params import ParameterError, derive
from .presets import PRESETS, run_preset, schmidt_report, write_modes
from .schmidt import FrequencyGrid, Scenario, convergence_check
from .shaping import (Constraint, Objective, ShapingProblem, SweepScenario, SweepSpec,
                      curve_csv, optimize_shifts, run_sweep)
from .spectral import (PropagationScheme, QuadratureConvergenceError, f_cold, f_doppler_closed,
                       f_doppler_quad)

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("biphoton")


class ConvergenceFailure(RuntimeError):
    pass


def _load(args) -> RunConfig:
    """Config file (or defaults) with command-line overrides applied."""
    data = json.loads(Path(args.config).read_text()) if args.config else {}
    if not isinstance(data, dict):
        raise ConfigError([("", "configuration must be a JSON object")])
    data = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    grid = data.setdefault("grid", {})
    opts = data.setdefault("options", {})
    geom = data.setdefault("geometry", {})
    if getattr(args, "grid_points", None) is not None:
        grid["n_points"] = args.grid_points
    if getattr(args, "window", None) is not None:
        grid["half_width"] = args.window
    if getattr(args, "evaluator", None) is not None:
        opts["evaluator"] = args.evaluator
    if getattr(args, "quad_nodes", None) is not None:
        opts["quad_nodes"] = args.quad_nodes
    if getattr(args, "scheme", None) is not None:
        opts["scheme"] = args.scheme
    if getattr(args, "geometry", None) is not None:
        geom["family"] = args.geometry
    if getattr(args, "dq", None) is not None:
        geom["dq"] = args.dq
    if getattr(args, "n_mp", None) is not None:
        geom["n_mp"] = args.n_mp
    if getattr(args, "temperature", None) is not None:
        data.setdefault("physical_params", {})["temperature"] = args.temperature
    return parse_config(data)


def _complex(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag, "abs": abs(z)}


def cmd_eval(args) -> int:
    run = _load(args)
    pp = run.physical_params
    d = derive(pp)
    out = {
        "point": {"d_omega_s": args.ws, "d_omega_i": args.wi},
        "f_cold": _complex(f_cold(args.ws, args.wi, pp)),
        "f_doppler_closed": _complex(f_doppler_closed(args.ws, args.wi, pp, d)),
        "f_doppler_quad": _complex(f_doppler_quad(args.ws, args.wi, pp, "co", run.quad_nodes, d,
                                                  check_convergence=args.check)),
        "f_doppler_quad_counter": _complex(f_doppler_quad(args.ws, args.wi, pp, "counter",
                                                          run.quad_nodes, d,
                                                          check_convergence=args.check)),
        "derived": d.to_dict(),
        "config": run.to_dict(),
        "units": UNITS,
    }
    sys.stdout.write(dump_json(out))
    return EXIT_OK


def cmd_schmidt(args) -> int:
    run = _load(args)
    scen = Scenario(make_shifts(run.geometry), run.physical_params, run.evaluator, run.scheme,
                    run.quad_nodes)
    t0 = time.perf_counter()
    result, F = scen.solve(run.grid, with_modes=args.modes > 0, n_modes=args.modes or None)
    report = schmidt_report(run, result, F, time.perf_counter() - t0)
    if args.converge:
        rep = convergence_check(scen, run.grid)
        report["convergence"] = rep.to_dict()
    text = dump_json(report)
    if args.out:
        out = Path(args.out)
        write_text(out / "schmidt.json", text)
        if args.modes:
            cfg = {**run.to_dict(), "units": UNITS}
            write_modes(result, out, "mode", args.modes, cfg)
    sys.stdout.write(dump_json({k: report[k] for k in ("S", "K", "rank", "warnings")}))
    if args.converge and not report["convergence"]["passed"]:
        raise ConvergenceFailure("grid doubling changed S or K beyond tolerance")
    return EXIT_OK


def cmd_sweep(args) -> int:
    run = _load(args)
    overrides = {}
    if args.dq_values:
        overrides["dq_values"] = tuple(float(v) for v in args.dq_values.split(","))
    if args.temperatures:
        overrides["temperatures"] = tuple(float(v) for v in args.temperatures.split(","))
    if args.n_mp_values:
        overrides["n_mp_values"] = tuple(int(v) for v in args.n_mp_values.split(","))
    if args.families:
        overrides["families"] = tuple(args.families.split(","))
    spec = SweepSpec.preset(args.scenario, run.physical_params, **overrides)
    points = run_sweep(spec, run.grid, args.workers)
    cfg = {**run.to_dict(), "atomic_species": species_label(run.physical_params.atomic_mass),
           "sweep": {"scenario": spec.scenario.value, "families": [f.value for f in spec.families],
                     "dq_values": list(spec.dq_values), "temperatures": list(spec.temperatures),
                     "n_mp_values": list(spec.n_mp_values), "axis": spec.axis}}
    text = curve_csv(points, config_comments(cfg))
    if args.out:
        write_text(Path(args.out) / f"sweep_{spec.scenario.value}.csv", text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_optimize(args) -> int:
    run = _load(args)
    problem = ShapingProblem(objective=Objective(args.objective), n_mp=args.n_mp_opt,
                             constraint=Constraint(args.constraint),
                             bounds=(args.lower, args.upper), budget=args.budget,
                             family=args.family)
    res = optimize_shifts(problem, run.grid, run.physical_params)
    out = {"config": run.to_dict(), "problem": {
        "objective": problem.objective.value, "n_mp": problem.n_mp,
        "constraint": problem.constraint.value, "bounds": list(problem.bounds),
        "budget": problem.budget, "family": problem.resolved_family.value},
        "result": res.to_dict(), "units": UNITS}
    if args.verify:
        fine = FrequencyGrid(run.grid.half_width, 2 * run.grid.n_points)
        r, _ = Scenario(res.shifts, run.physical_params).solve(fine)
        out["verification"] = {"grid": fine.to_dict(), "S": r.entropy_S, "K": r.schmidt_K}
    text = dump_json(out)
    if args.out:
        write_text(Path(args.out) / "optimize.json", text)
    sys.stdout.write(dump_json({"S": res.S, "K": res.K, "shifts": res.shifts.to_list(),
                                "dq": res.dq, "budget_exhausted": res.budget_exhausted}))
    return EXIT_OK


def cmd_preset(args) -> int:
    run = _load(args)
    verify = None if args.no_verify else FrequencyGrid(run.grid.half_width, 2 * run.grid.n_points)
    paths = run_preset(args.name, args.out, run.physical_params, run.grid, verify, args.workers)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_validate(args) -> int:
    run = validate_config(args.config)
    sys.stdout.write(run.echo())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biphoton", description="Doppler-broadened biphoton spectra, Schmidt analysis and spectral shaping.",
        epilog="exit codes: 0 ok, 2 invalid input, 3 convergence failure, 4 I/O error")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, geometry=True):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--grid-points", type=int)
        p.add_argument("--window", type=float, help="half width of the grid in gamma3")
        p.add_argument("--evaluator", choices=[e.value for e in Evaluator])
        p.add_argument("--quad-nodes", type=int)
        p.add_argument("--scheme", choices=[s.value for s in PropagationScheme])
        p.add_argument("--temperature", type=float, help="kelvin")
        if geometry:
            p.add_argument("--geometry", choices=[f.value for f in GeometryFamily])
            p.add_argument("--dq", type=float)
            p.add_argument("--n-mp", type=int)

    p = sub.add_parser("eval", help="evaluate spectral functions at one point")
    common(p, geometry=False)
    p.add_argument("--ws", type=float, default=0.0, help="signal detuning / gamma3")
    p.add_argument("--wi", type=float, default=0.0, help="idler detuning / gamma3")
    p.add_argument("--check", action="store_true", help="fail if doubling quadrature nodes moves the result")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("schmidt", help="Schmidt decomposition of one geometry")
    common(p)
    p.add_argument("--modes", type=int, default=0, help="number of mode pairs to dump")
    p.add_argument("--converge", action="store_true", help="also run the grid-doubling check")
    p.set_defaults(func=cmd_schmidt)

    p = sub.add_parser("sweep", help="S and K along a parameter sweep")
    common(p, geometry=False)
    p.add_argument("--scenario", default="custom", choices=[s.value for s in SweepScenario])
    p.add_argument("--families", help="comma-separated geometry families")
    p.add_argument("--dq-values", help="comma-separated dq values")
    p.add_argument("--temperatures", help="comma-separated temperatures (K)")
    p.add_argument("--n-mp-values", help="comma-separated ensemble counts")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", help="pattern search over shift placements")
    common(p, geometry=False)
    p.add_argument("--objective", default="min_S", choices=[o.value for o in Objective])
    p.add_argument("--constraint", default="free", choices=[c.value for c in Constraint])
    p.add_argument("--n-mp", dest="n_mp_opt", type=int, default=4)
    p.add_argument("--family", choices=[f.value for f in GeometryFamily])
    p.add_argument("--lower", type=float, default=-60.0)
    p.add_argument("--upper", type=float, default=60.0)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--verify", action="store_true", help="recompute the optimum on a doubled grid")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("preset", help="write the data behind one figure")
    common(p, geometry=False)
    p.add_argument("name", choices=PRESETS)
    p.add_argument("--no-verify", action="store_true", help="skip the doubled-grid check of optima")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("validate", help="validate a configuration file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "preset" and not args.out:
        parser.error("preset needs --out")
    try:
        return args.func(args)
    except ConfigError as exc:
        for path, reason in exc.errors:
            print(f"error: {path or '<root>'}: {reason}", file=sys.stderr)
        return EXIT_INVALID
    except (ParameterError, GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (QuadratureConvergenceError, ConvergenceFailure) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
