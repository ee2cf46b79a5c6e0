"""Command line: ``anondyn gen-schedule | simulate | export-dot | verify``.

Exit status is 0 on success, 1 when a run violates an invariant or bound,
and 2 for unusable configurations.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .dot import to_dot, tree_to_dot
from .equations import find_equations
from .harness import ConfigError, ExperimentConfig
from .history import build_ground_truth
from .network import dump_inputs, dump_schedule, schedule_to_json

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _network_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("network")
    g.add_argument("--family", choices=harness.FAMILIES, default="random")
    g.add_argument("--n", type=int, default=4, help="processes (random family)")
    g.add_argument("--T", type=int, default=1, help="dynamic disconnectivity")
    g.add_argument("--blocks", type=int, help="schedule length in blocks of T rounds")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--leaders", type=int, default=0)
    g.add_argument("--values", type=int, default=2, help="distinct random input values")
    g.add_argument("--sizes", type=lambda s: tuple(int(x) for x in s.split(",")), default=(3, 4),
                   help="part sizes for the scale family, comma separated")
    g.add_argument("--alpha", type=int, default=1)
    g.add_argument("--k", type=int, default=3, help="leader-ring ratio")
    g.add_argument("--i", type=int, default=3, help="leader-ring leader count")
    g.add_argument("--t", type=int, default=2, help="marked-cycle parameter")
    g.add_argument("--schedule", dest="schedule_path", help="schedule JSON (file family)")
    g.add_argument("--inputs", dest="inputs_path", help="inputs JSON (file family)")
    g.add_argument("--horizon", type=int)


def _config(args, **extra) -> ExperimentConfig:
    fields = {k: getattr(args, k) for k in (
        "family", "n", "T", "blocks", "seed", "leaders", "values", "sizes", "alpha", "k", "i", "t",
        "schedule_path", "inputs_path", "horizon")}
    if args.schedule_path and args.family == "random":
        fields["family"] = "file"
    fields.update(extra)
    return ExperimentConfig(**fields)


def cmd_gen_schedule(args) -> int:
    cfg = _config(args)
    cfg.validate()
    h = cfg.horizon if cfg.horizon is not None else (args.blocks or 1) * args.T
    try:
        schedule, inputs = harness.build_network(cfg, h)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if args.out:
        dump_schedule(schedule, args.out)
    else:
        json.dump(schedule_to_json(schedule), sys.stdout)
        print()
    if args.inputs_out:
        dump_inputs(inputs, args.inputs_out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args, task=args.task, mode=args.mode, N=args.N,
                  oracles=not args.no_oracles, trace_path=args.trace)
    report = harness.run_experiment(cfg)
    if args.trace:
        schedule, inputs = harness.build_network(cfg, report.horizon)
        dump_schedule(schedule, args.trace + ".schedule.json")
        dump_inputs(inputs, args.trace + ".inputs.json")
    else:
        sys.stdout.writelines(line + "\n" for line in report.trace)
    print(json.dumps(report.summary(), sort_keys=True), file=sys.stderr)
    if report.ok:
        return EXIT_OK
    if report.horizon_exhausted and report.horizon < report.bound and not report.checks_failed:
        print(f"horizon exhausted: {report.horizon} rounds simulated, the bound needs "
              f"{report.bound}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_VIOLATION


def cmd_export_dot(args) -> int:
    cfg = _config(args)
    cfg.validate()
    h = args.round if args.horizon is None else max(args.horizon, args.round)
    try:
        schedule, inputs = harness.build_network(cfg, h)
        tree = build_ground_truth(schedule, inputs, h)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if args.process is None:
        text = tree_to_dot(tree, args.round)
    else:
        if not 1 <= args.process <= schedule.n:
            raise ConfigError(f"process {args.process} outside 1..{schedule.n}")
        view = tree.process_view(args.round, args.process)
        text = to_dot(view, tree.anonymity if args.anonymity else None,
                      title=f"view of p{args.process} at round {args.round}")
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    if min(args.max_n, args.max_T, args.trials) < 1 or args.max_ell < 0:
        raise ConfigError("sweep limits must be positive")
    summary = harness.verify_suite(args.max_n, args.max_T, args.max_ell, args.trials,
                                   args.seed, args.jobs)
    for line in summary.lines():
        print(line)
    if args.systems:
        for n in range(1, args.max_n + 1):
            for T in range(1, args.max_T + 1):
                cfg = harness.leaderless_configs(n, (T,), 1, args.seed)[-1]
                schedule, inputs = harness.build_network(cfg, 2 * T * n)
                view = build_ground_truth(schedule, inputs, 2 * T * n).process_view(2 * T * n, 1)
                t, system = find_equations(view)
                print(f"n={n} T={T} level {t}: " + ("; ".join(system.lines()) or "no equations"))
    return EXIT_OK if summary.ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anondyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-schedule", help="write a schedule (and inputs) as JSON")
    _network_args(p)
    p.add_argument("--out", help="schedule file (default: stdout)")
    p.add_argument("--inputs-out", help="also write the inputs here")
    p.set_defaults(func=cmd_gen_schedule)

    p = sub.add_parser("simulate", help="run one experiment and emit its JSONL trace")
    _network_args(p)
    p.add_argument("--task", choices=harness.TASKS, default="concentration")
    p.add_argument("--mode", choices=harness.MODES, default="stabilizing")
    p.add_argument("--N", type=int, help="known upper bound on n (terminating concentration)")
    p.add_argument("--trace", help="trace file (default: stdout); network files are archived next to it")
    p.add_argument("--no-oracles", action="store_true", help="skip ground-truth cross-checks")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export-dot", help="Graphviz drawing of a view or the history tree")
    _network_args(p)
    p.add_argument("--round", type=int, default=2)
    p.add_argument("--process", type=int, help="draw this process's view instead of the tree")
    p.add_argument("--anonymity", action="store_true", help="annotate view nodes with anonymities")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("verify", help="run the invariant battery over random sweeps")
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--max-T", type=int, default=2)
    p.add_argument("--max-ell", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: $ANONDYN_JOBS or 1)")
    p.add_argument("--systems", action="store_true", help="print sample equation systems")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
