"""Command line entry point: ``substrate run|classify|sweep|report``.

Exit status: 0 when nothing pre-falsifies the theory, 2 when a Type-2
witness was found, 1 on any error.  Reports go to stdout, progress to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import SubstrateError
from .framework import VerdictKind
from .scenario import emit_report, load_report, load_scenario, only_variation, run_scenario
from .sweep import DEFAULT_BUDGET, GENERATORS, THEORIES, EnumerationParams, exhaustive_check
from .theories import THEORY_NAMES

EXIT_PASS, EXIT_ERROR, EXIT_PRE_FALSIFIED = 0, 1, 2


def _progress(quiet):
    if quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


def _emit(report, fmt):
    sys.stdout.buffer.write(emit_report(report, fmt))
    sys.stdout.flush()
    return EXIT_PRE_FALSIFIED if report.verdict is VerdictKind.PRE_FALSIFIED else EXIT_PASS


def _scenario(args):
    scenario = load_scenario(args.scenario)
    return scenario.with_overrides(theory=args.theory, seed=args.seed, fuel=args.fuel)


def cmd_run(args):
    report = run_scenario(_scenario(args), include_timing=args.timing, progress=_progress(args.quiet),
                          budget=args.budget)
    return _emit(report, args.format)


def cmd_classify(args):
    scenario = only_variation(_scenario(args), args.variation)
    report = run_scenario(scenario, include_timing=args.timing, progress=_progress(args.quiet), budget=args.budget)
    return _emit(report, args.format)


def cmd_sweep(args):
    theories = tuple(t.strip() for t in args.theory.split(",") if t.strip())
    generators = tuple(g.strip() for g in args.generators.split(",") if g.strip())
    params = EnumerationParams(args.max_states, args.n_in, args.n_out, generators, args.budget)
    reports = exhaustive_check(params, theories, progress=_progress(args.quiet))
    body = {name: r.as_dict() for name, r in reports.items()}
    if args.format == "json":
        sys.stdout.write(json.dumps(body, sort_keys=True, indent=2) + "\n")
    else:
        for name, r in reports.items():
            counts = "  ".join(f"{k}={v}" for k, v in sorted(r.counts.items()))
            print(f"{name:<18} machines={r.machines} classifications={r.classifications}  {counts}")
            for ce in r.counterexamples[:3]:
                print(f"  Type2: delta={ce['machine']['delta']} out={ce['machine']['out']} via {ce['variation']}")
        print(f"elapsed {next(iter(reports.values())).elapsed:.2f}s", file=sys.stderr)
    return EXIT_PRE_FALSIFIED if any(r.type2 for r in reports.values()) else EXIT_PASS


def cmd_report(args):
    return _emit(load_report(args.file), args.format)


def build_parser():
    p = argparse.ArgumentParser(prog="substrate", description="Falsification checks for theories over system encodings.")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_opts(sp):
        sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--theory", choices=THEORY_NAMES, help="override the scenario's prediction theory")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--seed", type=int, help="override the battery seed (uniform batteries)")
        sp.add_argument("--fuel", type=int, help="Turing machine step budget")
        sp.add_argument("--budget", type=int, help="maximum number of classifications")
        sp.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")
        sp.add_argument("-q", "--quiet", action="store_true", help="no progress output")

    run = sub.add_parser("run", help="run a scenario and print its report")
    scenario_opts(run)
    run.set_defaults(func=cmd_run)

    cl = sub.add_parser("classify", help="classify one named variation of a scenario")
    scenario_opts(cl)
    cl.add_argument("--variation", required=True)
    cl.set_defaults(func=cmd_classify)

    sw = sub.add_parser("sweep", help="exhaustive small-machine invariance check")
    sw.add_argument("--max-states", type=int, required=True)
    sw.add_argument("--in", dest="n_in", type=int, default=2, help="input alphabet size")
    sw.add_argument("--out", dest="n_out", type=int, default=2, help="output alphabet size")
    sw.add_argument("--theory", default="Level1Functional",
                    help=f"comma-separated list from {', '.join(sorted(THEORIES))}")
    sw.add_argument("--generators", default=",".join(GENERATORS))
    sw.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum number of machines")
    sw.add_argument("--format", choices=("text", "json"), default="text")
    sw.add_argument("-q", "--quiet", action="store_true")
    sw.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="re-emit a saved JSON report")
    rp.add_argument("file")
    rp.add_argument("--format", choices=("text", "json"), default="text")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which would read as a pre-falsified verdict
        return EXIT_ERROR if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except SubstrateError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
