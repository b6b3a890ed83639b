"""Collar counts against the counting law over a range of Lambda values.

Writes ``lambda_sweep.csv`` with the Dirichlet/Neumann slopes fitted on the
eps grid and the predicted slope for each Lambda.

    python3 scripts/lambda_sweep.py --lambdas 1 2 4 8 --out out/sweep
"""

import argparse
from pathlib import Path

from collarspec.asymptotics import count_report
from collarspec.cli import write_csv
from collarspec.config import load_config


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/hyperbolic.ini")
    ap.add_argument("--lambdas", type=float, nargs="+", default=[1.0, 2.0, 4.0, 8.0, 16.0])
    ap.add_argument("--out", default="out/sweep")
    args = ap.parse_args(argv)
    cfg = load_config(args.config)
    rows = []
    for lam in args.lambdas:
        rep = count_report(cfg.collar, lam, cfg["run.eps_grid"],
                           rtol=cfg["solver.count_rtol"])
        (sd, ed), (sn, en) = rep.fit_dirichlet, rep.fit_neumann
        rows.append((lam, rep.predicted_slope, sd, ed, sn, en, rep.relative_deviation))
        print(f"Lambda={lam:6.2f} predicted {rep.predicted_slope:.4f}  "
              f"D {sd:.4f}+-{ed:.4f}  N {sn:.4f}+-{en:.4f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "lambda_sweep.csv",
              ["lambda", "predicted_slope", "slope_dirichlet", "stderr_dirichlet",
               "slope_neumann", "stderr_neumann", "relative_deviation"], rows)


if __name__ == "__main__":
    main()
