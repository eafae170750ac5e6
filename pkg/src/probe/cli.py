"""Command-line front end.

Five commands share one vocabulary of flags:

* ``check``       — bounded checking loop until a verdict or a budget ends
* ``explore``     — expansion only, with progress lines and a model dump
* ``simulate``    — Monte Carlo estimate of the same conditional value
* ``synthesize``  — parameter-grid classification of a parametric program
* ``bench``       — check every bundled program/property pair

Exit codes: 0 the property was proven (or the command simply succeeded),
1 refuted, 2 undecided (including timeouts and undefined values), 3 bad
input.  ``--out DIR`` writes the machine-readable reports and the figures
next to each other.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import corpus
from .checker import bmc, simulate
from .explorer import ExplorationConfig, Explorer
from .lang import ParseError, load_properties, parse_program, parse_property
from .model import ModelError, PartialModel
from .parametric import parse_grid, region_scan
from .report import (
    convergence_figure,
    region_figure,
    render_report,
    render_simulation,
    report_csv,
    report_json,
    simulation_csv,
    simulation_json,
)
from .semantics import SemanticsError
from .solver import SolverLimits

VERDICT_EXIT = {"Proven": 0, "Refuted": 1, "Unknown": 2, "Undefined": 2}
INPUT_ERROR = 3

_INPUT_FAULTS = (
    ParseError,
    ModelError,
    SemanticsError,
    ValueError,
    KeyError,
    OSError,
)


class CliError(Exception):
    """Bad command-line input, reported on stderr with exit code 3."""


# -- argument plumbing -----------------------------------------------------------


def _add_exploration_flags(cmd):
    cmd.add_argument("--budget", type=int, default=1_000_000,
                     help="states materialized per expansion round")
    cmd.add_argument("--heuristic", choices=("bfs", "maxprob"), default="bfs",
                     help="frontier order: discovery order or maximal path mass")
    cmd.add_argument("--max-rounds", type=int, default=None,
                     help="stop undecided after this many rounds")


def _add_solver_flags(cmd):
    cmd.add_argument("--exact-threshold", type=int, default=50_000,
                     help="exact rational solving up to this many states")
    cmd.add_argument("--epsilon", type=float, default=1e-10,
                     help="float solver convergence tolerance")
    cmd.add_argument("--scheduler-cap", type=int, default=2**20,
                     help="abort scheduler enumeration beyond this many")


def _add_output_flags(cmd):
    cmd.add_argument("--format", choices=("text", "json", "csv"), default="text",
                     help="stdout rendering")
    cmd.add_argument("--out", metavar="DIR", default=None,
                     help="directory for reports and figures")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probe",
        description="Bounded model checking for probabilistic programs "
        "with conditioning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="prove or refute a property bound")
    check.add_argument("--program", required=True,
                       help="bundled program name or path to a source file")
    check.add_argument("--property", default=None,
                       help="property text; defaults to the program's first "
                       "bundled property")
    _add_exploration_flags(check)
    _add_solver_flags(check)
    check.add_argument("--timeout-secs", type=float, default=3600.0)
    _add_output_flags(check)

    explore = sub.add_parser("explore", help="expand the model and dump it")
    explore.add_argument("--program", required=True)
    _add_exploration_flags(explore)
    explore.add_argument("--out", metavar="DIR", default=None)

    sim = sub.add_parser("simulate", help="Monte Carlo estimate of the value")
    sim.add_argument("--program", required=True)
    sim.add_argument("--property", default=None)
    sim.add_argument("--runs", type=int, default=1_000_000)
    sim.add_argument("--seed", type=int, default=0)
    _add_output_flags(sim)

    synth = sub.add_parser("synthesize",
                           help="classify a parameter grid against a bound")
    synth.add_argument("--program", required=True)
    synth.add_argument("--property", default=None)
    synth.add_argument("--grid", required=True, metavar="NAME:LO:HI:STEPS,...",
                       help="cells per parameter, e.g. f:0:1:50,b:0:1:50")
    _add_exploration_flags(synth)
    _add_solver_flags(synth)
    synth.add_argument("--timeout-secs", type=float, default=3600.0)
    _add_output_flags(synth)
    synth.set_defaults(max_rounds=3)

    bench = sub.add_parser("bench", help="check all bundled program properties")
    bench.add_argument("--program", default="",
                       help="only bundled programs whose name starts with this")
    _add_exploration_flags(bench)
    _add_solver_flags(bench)
    bench.add_argument("--timeout-secs", type=float, default=3600.0)
    _add_output_flags(bench)

    return parser


# -- input resolution ------------------------------------------------------------


def _load_program(spec: str):
    """Resolve --program to (program, bundled properties)."""
    if os.path.exists(spec):
        with open(spec) as fh:
            text = fh.read()
        name = os.path.splitext(os.path.basename(spec))[0]
        program = parse_program(text, name=name)
        sidecar = os.path.splitext(spec)[0] + ".props"
        props = []
        if os.path.exists(sidecar):
            with open(sidecar) as fh:
                props = load_properties(fh.read(), program)
        return program, props
    if spec in corpus.names():
        return corpus.load(spec), corpus.properties(spec)
    raise CliError(
        f"no file or bundled program named {spec!r}; "
        f"bundled programs: {', '.join(corpus.names())}"
    )


def _resolve_property(args, program, bundled):
    if args.property is not None:
        return parse_property(args.property, program)
    if bundled:
        return bundled[0]
    raise CliError(
        f"program {program.name} has no bundled properties; pass --property"
    )


def _exploration_config(args) -> ExplorationConfig:
    return ExplorationConfig(
        budget=args.budget,
        heuristic=args.heuristic,
        max_rounds=args.max_rounds,
    )


def _solver_limits(args) -> SolverLimits:
    return SolverLimits(
        epsilon=args.epsilon,
        exact_threshold=args.exact_threshold,
    )


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# -- commands --------------------------------------------------------------------


def cmd_check(args) -> int:
    program, bundled = _load_program(args.program)
    prop = _resolve_property(args, program, bundled)
    deadline = time.monotonic() + args.timeout_secs
    report = bmc(
        program,
        prop,
        _exploration_config(args),
        _solver_limits(args),
        args.scheduler_cap,
        deadline,
    )
    print(render_report(report, args.format))
    if args.out:
        out = _ensure_out(args.out)
        with open(os.path.join(out, "report.json"), "w") as fh:
            fh.write(report_json(report) + "\n")
        with open(os.path.join(out, "report.csv"), "w") as fh:
            fh.write(report_csv(report))
        convergence_figure(
            report,
            os.path.join(out, "convergence.svg"),
            threshold=float(prop.threshold),
        )
    return VERDICT_EXIT[report.verdict]


def cmd_explore(args) -> int:
    program, _ = _load_program(args.program)
    model = PartialModel(program)

    def progress(info: dict) -> None:
        print(json.dumps(info), flush=True)

    explorer = Explorer(model, _exploration_config(args), progress)
    rounds = 0
    while True:
        rounds += 1
        expansion = explorer.expand_round()
        if expansion.fully_expanded or expansion.capped:
            break
        if args.max_rounds is not None and rounds >= args.max_rounds:
            break
    stats = model.stats()
    stats["fullyExpanded"] = expansion.fully_expanded
    print(json.dumps(stats))
    if args.out:
        out = _ensure_out(args.out)
        with open(os.path.join(out, "model.txt"), "w") as fh:
            model.dump(fh)
    return 0


def cmd_simulate(args) -> int:
    program, bundled = _load_program(args.program)
    prop = _resolve_property(args, program, bundled)
    estimate = simulate(program, prop, runs=args.runs, seed=args.seed)
    print(render_simulation(estimate, args.format))
    if args.out:
        out = _ensure_out(args.out)
        with open(os.path.join(out, "simulation.json"), "w") as fh:
            fh.write(simulation_json(estimate) + "\n")
        with open(os.path.join(out, "simulation.csv"), "w") as fh:
            fh.write(simulation_csv(estimate))
    return 0


def _scan_csv(scan) -> str:
    header = [ax.name for ax in scan.axes] + ["iteration", "value", "class"]
    lines = [",".join(header)]
    for row in scan.rows:
        *coords, iteration, value, klass = row
        rendered = [repr(c) for c in coords]
        rendered.append(str(iteration))
        rendered.append("" if value is None else repr(float(value)))
        rendered.append(klass)
        lines.append(",".join(rendered))
    return "\n".join(lines) + "\n"


def _scan_text(scan) -> str:
    counts: dict[str, int] = {}
    for _, klass in scan.cells():
        counts[klass] = counts.get(klass, 0) + 1
    parts = [f"{k}={v}" for k, v in sorted(counts.items())]
    lines = [
        f"iterations {scan.iterations}, states {scan.states}: " + ", ".join(parts)
    ]
    if len(scan.axes) == 2:
        marks = {"Unsafe": "#", "Unknown": ".", "IllDefined": "!"}
        for i in range(scan.axes[0].steps):
            lines.append("".join(marks[c] for c in scan.classes[i]))
    return "\n".join(lines)


def cmd_synthesize(args) -> int:
    program, bundled = _load_program(args.program)
    prop = _resolve_property(args, program, bundled)
    if not program.parameters:
        raise CliError(f"program {program.name} has no parameters to scan")
    axes = parse_grid(args.grid, program.parameters)
    deadline = time.monotonic() + args.timeout_secs
    scan = region_scan(
        program,
        prop,
        axes,
        _exploration_config(args),
        _solver_limits(args),
        args.scheduler_cap,
        deadline,
    )
    # sanity: unsafe cells are final, so the sets can only grow
    previous: set = set()
    for grid in scan.history:
        flat = {
            idx
            for idx, _ in scan.cells()
            if _cell_at(grid, idx) == "Unsafe"
        }
        if not previous <= flat:
            raise AssertionError("unsafe cells disappeared between iterations")
        previous = flat

    if args.format == "csv":
        print(_scan_csv(scan), end="")
    elif args.format == "json":
        print(
            json.dumps(
                {
                    "axes": [dataclasses.asdict(ax) | {"lo": str(ax.lo), "hi": str(ax.hi)} for ax in scan.axes],
                    "classes": scan.classes,
                    "iterations": scan.iterations,
                    "states": scan.states,
                }
            )
        )
    else:
        print(_scan_text(scan))
    if args.out:
        out = _ensure_out(args.out)
        with open(os.path.join(out, "scan.csv"), "w") as fh:
            fh.write(_scan_csv(scan))
        if len(scan.axes) == 2:
            for i, grid in enumerate(scan.history, start=1):
                snapshot = dataclasses.replace(scan, classes=grid)
                region_figure(snapshot, os.path.join(out, f"heatmap-{i}.svg"))
            region_figure(scan, os.path.join(out, "heatmap.svg"))
    return 0


def _cell_at(grid, idx):
    node = grid
    for i in idx:
        node = node[i]
    return node


def _bench_one(task) -> dict:
    name, prop_text, flags = task
    program = corpus.load(name)
    prop = parse_property(prop_text, program)
    config = ExplorationConfig(
        budget=flags["budget"],
        heuristic=flags["heuristic"],
        max_rounds=flags["max_rounds"],
    )
    limits = SolverLimits(
        epsilon=flags["epsilon"], exact_threshold=flags["exact_threshold"]
    )
    deadline = time.monotonic() + flags["timeout_secs"]
    started = time.monotonic()
    report = bmc(program, prop, config, limits, flags["scheduler_cap"], deadline)
    seconds = time.monotonic() - started
    last = report.iterations[-1] if report.iterations else None
    timed_out = report.note == "timeout"
    return {
        "program": name,
        "property": prop_text,
        "states": last.states if last else 0,
        "transitions": last.transitions if last else 0,
        "full": report.fully_expanded,
        "verdict": report.verdict,
        "value": None if timed_out or last is None or last.value is None
        else float(last.value),
        "timedOut": timed_out,
        "seconds": round(seconds, 2),
    }


def cmd_bench(args) -> int:
    tasks = []
    flags = {
        "budget": args.budget,
        "heuristic": args.heuristic,
        "max_rounds": args.max_rounds,
        "epsilon": args.epsilon,
        "exact_threshold": args.exact_threshold,
        "scheduler_cap": args.scheduler_cap,
        "timeout_secs": args.timeout_secs,
    }
    for name in corpus.names():
        if not name.startswith(args.program):
            continue
        if corpus.load(name).parameters:
            continue  # parameter grids are synthesize's job
        for prop in corpus.properties(name):
            tasks.append((name, str(prop), flags))
    if not tasks:
        raise CliError(
            f"no bundled program matches prefix {args.program!r} "
            "(or none has properties)"
        )

    workers = int(os.environ.get("PROBE_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(task) for task in tasks]

    if args.format == "json":
        text = "\n".join(json.dumps(row) for row in rows) + "\n"
    elif args.format == "csv":
        header = "program,property,states,transitions,full,verdict,value,seconds"
        lines = [header]
        for r in rows:
            value = "TO" if r["timedOut"] else (
                "" if r["value"] is None else repr(r["value"])
            )
            lines.append(
                f"{r['program']},\"{r['property']}\",{r['states']},"
                f"{r['transitions']},{r['full']},{r['verdict']},{value},"
                f"{r['seconds']}"
            )
        text = "\n".join(lines) + "\n"
    else:
        widths = max(len(r["program"]) for r in rows)
        lines = []
        for r in rows:
            value = "TO" if r["timedOut"] else (
                "undef" if r["value"] is None else f"{r['value']:.6g}"
            )
            lines.append(
                f"{r['program']:<{widths}}  {r['verdict']:<9} value={value:<12} "
                f"states={r['states']:<9} transitions={r['transitions']:<9} "
                f"{r['seconds']:8.2f}s  {r['property']}"
            )
        text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        out = _ensure_out(args.out)
        with open(os.path.join(out, "bench.csv"), "w") as fh:
            header = "program,property,states,transitions,full,verdict,value,seconds"
            fh.write(header + "\n")
            for r in rows:
                value = "TO" if r["timedOut"] else (
                    "" if r["value"] is None else repr(r["value"])
                )
                fh.write(
                    f"{r['program']},\"{r['property']}\",{r['states']},"
                    f"{r['transitions']},{r['full']},{r['verdict']},{value},"
                    f"{r['seconds']}\n"
                )
    return 0


_COMMANDS = {
    "check": cmd_check,
    "explore": cmd_explore,
    "simulate": cmd_simulate,
    "synthesize": cmd_synthesize,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except _INPUT_FAULTS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
