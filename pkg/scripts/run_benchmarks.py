"""Run every CLI subcommand on one config and print a one-line summary each.

    python3 scripts/run_benchmarks.py --config configs/hyperbolic.ini --out out/bench
"""

import argparse
import json
import sys
import time
from pathlib import Path

from collarspec.cli import SUBCOMMANDS, run

ORDER = ["validate", "transform-check", "oscillation", "spectrum", "count", "cusp",
         "branch", "converge"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/hyperbolic.ini")
    ap.add_argument("--out", default="out/bench")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", choices=sorted(SUBCOMMANDS))
    args = ap.parse_args(argv)
    worst = 0
    for sub in args.only or ORDER:
        t0 = time.perf_counter()
        status = run(sub, args.config, out=args.out, seed=args.seed)
        dt = time.perf_counter() - t0
        manifest = json.loads((Path(args.out) / f"manifest-{sub}.json").read_text())
        print(f"{sub:16s} exit={status} {dt:7.2f}s  {json.dumps(manifest['summary'])[:100]}")
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    sys.exit(main())
