"""Run the exhaustive small-machine sweep under several theories and save a JSON summary."""

import argparse
import json
import sys
from pathlib import Path

from substrate.sweep import GENERATORS, THEORIES, EnumerationParams, exhaustive_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-states", type=int, default=3)
    ap.add_argument("--in", dest="n_in", type=int, default=2)
    ap.add_argument("--out", dest="n_out", type=int, default=2)
    ap.add_argument("--generators", default=",".join(GENERATORS))
    ap.add_argument("--save", type=Path, help="write the summary here as JSON")
    args = ap.parse_args()

    params = EnumerationParams(args.max_states, args.n_in, args.n_out, tuple(args.generators.split(",")))
    reports = exhaustive_check(params, tuple(THEORIES), progress=lambda m: print(m, file=sys.stderr))
    for name, r in reports.items():
        print(f"{name:<18} machines={r.machines:<8} classifications={r.classifications:<9} Type2={r.type2}")
    print(f"elapsed {next(iter(reports.values())).elapsed:.1f}s")
    if args.save:
        args.save.write_text(json.dumps({n: r.as_dict() for n, r in reports.items()}, indent=2) + "\n")


if __name__ == "__main__":
    main()
