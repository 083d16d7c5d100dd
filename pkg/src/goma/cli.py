"""Command-line entry point: ``goma <experiment> [options]``."""
import argparse
import os
import sys
import time

from . import certify
from .experiments import RUNNERS, load_config


def _parser():
    ap = argparse.ArgumentParser(prog="goma", description="Goal-oriented multiple access experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in list(RUNNERS) + ["verify"]:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default=None, help="output directory for tables")
        p.add_argument("--psi", type=float)
        p.add_argument("--nodes", type=int)
        if name == "verify":
            p.add_argument("--quick", action="store_true", help="smaller trial counts")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "verify":
        seed = 0 if args.seed is None else args.seed
        results = certify.run_all(seed, quick=args.quick)
        for r in results:
            print(r.line())
        return 0 if all(r.passed for r in results) else 1

    cfg = load_config(args.config, experiment=args.command, seed=args.seed, psi=args.psi,
                      nodes=args.nodes, out=args.out)
    t0 = time.perf_counter()
    tables = RUNNERS[args.command](cfg)
    print(f"{args.command} finished in {time.perf_counter() - t0:.1f} s")
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    for stem, table in tables.items():
        path = os.path.join(out, stem + ".tsv")
        table.write(path)
        print(f"wrote {path} ({len(table.rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
