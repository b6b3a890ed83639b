"""Command-line experiment runner.

Every subcommand reads an INI config (see :mod:`collarspec.config`), writes
CSV/JSON tables into the output directory and a ``manifest-<subcommand>.json``
with the config hash, version, seed and timings. Exit status: 0 on success, 2 on a
validation failure, 3 on a solver failure.
"""

import argparse
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import classical_count_check, count_report
from .config import load_config, parse_overrides
from .continuity import branches_track, eigenfunction_convergence
from .cusp import (CuspProblem, cusp_eigenfunction, cusp_eigenvalues, decay_check,
                   gradient_sequence)
from .liouville import TransformData, norm_defect, random_test_functions
from .metric import ConfigError, homogeneity_constants
from .odeint import IntegrationError
from .spectrum import _mode, collar_spectrum, essential_spectrum_bottom, perp_spectrum
from .sturm import BracketError, NotAnEigenvalueError

__all__ = ["main", "run", "SUBCOMMANDS", "write_csv", "write_json"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, header, rows):
    """Comma-separated, header row, LF endings, 17 significant digits."""
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def _tol(cfg):
    return cfg["solver.tol"], cfg["solver.rtol"]


def cmd_spectrum(cfg, out):
    eps, lam = cfg["run.eps"], cfg["run.lambda"]
    tol, rtol = _tol(cfg)
    if eps > 0:
        spec = collar_spectrum(cfg.collar, eps, lam, cfg.bc, tol, rtol, cfg.threads)
    else:
        spec = perp_spectrum(cfg.collar, 0.0, lam, cfg.bc, tol, rtol,
                             t_cut=min(cfg["run.t_cuts"]))
    write_csv(out / "spectrum.csv", ["lambda", "mode_k", "mu", "channel_index", "bc"],
              spec.rows())
    return {"eigenvalues": spec.total, "mode_cutoff": spec.skipped_from,
            "rho_max": spec.rho_max, "notes": spec.notes}


def cmd_count(cfg, out):
    rep = count_report(cfg.collar, cfg["run.lambda"], cfg["run.eps_grid"],
                       rtol=cfg["solver.count_rtol"], workers=cfg.threads)
    write_csv(out / "count.csv",
              ["eps", "log_inv_eps", "n_dirichlet", "n_neumann", "predicted"],
              rep.rows())
    write_json(out / "count.json", rep.to_dict())
    return {"fitted_slope": rep.fitted_slope, "predicted_slope": rep.predicted_slope,
            "relative_deviation": rep.relative_deviation}


def _branches(cfg):
    tol, rtol = _tol(cfg)
    return branches_track(cfg.collar, cfg["run.branches"], cfg["run.branch_grid"],
                          cfg["run.mode"], cfg.bc, cfg["run.t_cuts"], tol, rtol)


def cmd_branch(cfg, out):
    branches = _branches(cfg)
    rows = [(b.index,) + r for b in branches for r in b.rows()]
    write_csv(out / "branch.csv", ["branch", "eps", "lambda", "gap"], rows)
    write_json(out / "branch.json", {"branches": [b.to_dict() for b in branches]})
    return {"decreasing": all(b.decreasing for b in branches)}


def cmd_converge(cfg, out):
    tol, rtol = _tol(cfg)
    mode = cfg["run.mode"] or 1
    reps = []
    for b in branches_track(cfg.collar, cfg["run.branches"], cfg["run.branch_grid"],
                            mode, cfg.bc, cfg["run.t_cuts"], tol, rtol):
        reps.append(eigenfunction_convergence(cfg.collar, b.index,
                                              window=cfg["run.window"], mode=mode,
                                              bc=cfg.bc, t_cuts=cfg["run.t_cuts"],
                                              tol=tol, rtol=rtol, branch=b))
    rows = [(r.index,) + row for r in reps for row in r.rows()]
    write_csv(out / "converge.csv", ["branch", "eps", "l2_dist", "h1_dist"], rows)
    write_json(out / "converge.json", {"reports": [r.to_dict() for r in reps]})
    return {"decreasing": all(r.decreasing for r in reps)}


def cmd_cusp(cfg, out):
    tol, rtol = _tol(cfg)
    m = _mode(cfg.collar, cfg["run.mode"] or 1)
    if m is None or m[0] <= 0:
        raise ConfigError("run.mode does not name a nonconstant fiber mode")
    mu = m[0]
    cuts = cfg["run.t_cuts"]
    rows, verdicts = [], {}
    for side in ("-", "+"):
        prob = CuspProblem(cfg.collar, side, mu, max(cuts), cfg.bc)
        spec = cusp_eigenvalues(prob, count=cfg["run.cusp_count"], t_cuts=cuts,
                                tol=tol, rtol=rtol)
        rows += [(side,) + r for r in spec.rows()]
        ground = cusp_eigenfunction(prob.with_cut(min(cuts)), 1, tol=tol, rtol=rtol)
        decay = decay_check(ground, cfg["run.decay_exponents"])
        grads, stable = gradient_sequence(prob, 1, cuts, rtol=rtol)
        verdicts[side] = {
            "limits": spec.limits.tolist(),
            "certified": spec.certified,
            "monotone": spec.monotone,
            "notes": spec.notes,
            "decay": decay.to_dict(),
            "gradient_integrals": grads,
            "gradient_stable": stable,
        }
    write_csv(out / "cusp.csv", ["side", "t_cut", "index", "lambda"], rows)
    write_json(out / "cusp.json", {"mu": mu, "sides": verdicts})
    return {s: v["decay"]["ok"] for s, v in verdicts.items()}


def cmd_transform_check(cfg, out):
    c = cfg.collar
    eps, h = cfg["run.eps"], cfg["run.transform_step"]
    rng = np.random.default_rng(cfg.seed)
    if eps > 0:
        parts = [("both", TransformData.build(c, eps, h=h))]
    else:
        cut = min(cfg["run.t_cuts"])
        parts = [(s, TransformData.build(c, 0.0, interval=c.side_interval(s, cut), h=h))
                 for s in ("-", "+")]
    rows, summary = [], {}
    for name, data in parts:
        v = np.array([data.potential(x) for x in data.s])
        rows += [(name, s, p) for s, p in zip(data.s, v)]
        fs = random_test_functions(rng, data.s, cfg["run.unitarity_samples"])
        defects = [norm_defect(c, eps, f, data.s, data) for f in fs]
        info = {"s_range": list(data.s_range), "nodes": int(data.s.size),
                "max_norm_defect": max(defects)}
        if eps == 0 and c.a == -1:
            cm, cp = homogeneity_constants(c.profile)
            target = ((cp if name == "+" else cm) * c.bd / 2) ** 2
            info["band_edge"] = target
            info["max_potential_deviation"] = float(np.max(np.abs(v - target)))
        summary[name] = info
    write_csv(out / "transform.csv", ["side", "s", "potential"], rows)
    write_json(out / "transform.json", summary)
    return summary


def cmd_oscillation(cfg, out):
    rows = classical_count_check(cfg["run.r_kind"], cfg["run.m"], cfg["run.a_grid"],
                                 cfg["run.r_amplitude"], rtol=cfg["solver.count_rtol"])
    keys = ["a", "predicted", "dirichlet", "neumann", "deviation_dirichlet",
            "deviation_neumann"]
    write_csv(out / "oscillation.csv", keys, [[r[k] for k in keys] for r in rows])
    dev = [abs(r["deviation_dirichlet"]) for r in rows]
    write_json(out / "oscillation.json", {"rows": rows, "max_abs_deviation": max(dev)})
    return {"max_abs_deviation": max(dev)}


def cmd_validate(cfg, out):
    c = cfg.collar
    ess = essential_spectrum_bottom(c)
    summary = {
        "valid": True,
        "bd": c.bd,
        "homogeneity_constants": list(homogeneity_constants(c.profile)),
        "essential_spectrum_bottom": ess.bottom,
        "regime": ess.regime,
        "side_band_edges": list(ess.sides),
        "mu1": c.fiber.mu1,
    }
    write_json(out / "validate.json", summary)
    return summary


SUBCOMMANDS = {
    "spectrum": cmd_spectrum,
    "count": cmd_count,
    "branch": cmd_branch,
    "converge": cmd_converge,
    "cusp": cmd_cusp,
    "transform-check": cmd_transform_check,
    "oscillation": cmd_oscillation,
    "validate": cmd_validate,
}

SOLVER_ERRORS = (IntegrationError, BracketError, NotAnEigenvalueError,
                 FloatingPointError, ArithmeticError)


def run(subcommand, config_path=None, overrides=None, out=None, seed=None,
        threads=None, stream=None):
    """Run one subcommand; returns the exit status."""
    stream = sys.stderr if stream is None else stream
    t_start = time.perf_counter()
    try:
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        ov = dict(overrides or {})
        if seed is not None:
            ov["output.seed"] = str(seed)
        if threads is not None:
            ov["output.threads"] = str(threads)
        if out is not None:
            ov["output.dir"] = str(out)
        cfg = load_config(config_path, ov)
    except (ConfigError, ValueError) as exc:
        print(f"validation failed: {exc}", file=stream)
        return EXIT_VALIDATION
    outdir = Path(cfg["output.dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    t_load = time.perf_counter()
    status, summary, error = EXIT_OK, None, None
    try:
        summary = SUBCOMMANDS[subcommand](cfg, outdir)
    except ConfigError as exc:
        status, error = EXIT_VALIDATION, f"validation failed: {exc}"
    except SOLVER_ERRORS as exc:
        status, error = EXIT_SOLVER, f"solver failure: {exc}"
    t_end = time.perf_counter()
    manifest = {
        "subcommand": subcommand,
        "config_path": cfg.source,
        "config": cfg.canonical(),
        "config_hash": cfg.digest(),
        "version": __version__,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "status": status,
        "error": error,
        "summary": summary,
        "timings": {"load": t_load - t_start, "run": t_end - t_load,
                    "total": t_end - t_start},
        "python": platform.python_version(),
        "numpy": np.__version__,
        "outputs": sorted(p.name for p in outdir.iterdir()
                          if p.is_file() and not p.name.startswith("manifest")),
    }
    write_json(outdir / f"manifest-{subcommand}.json", manifest)
    if error:
        print(error, file=stream)
    return status


def build_parser():
    ap = argparse.ArgumentParser(
        prog="collarspec",
        description="Spectra of degenerating warped-product collars.")
    ap.add_argument("subcommand", choices=sorted(SUBCOMMANDS))
    ap.add_argument("--config", help="INI config file (defaults: hyperbolic benchmark)")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key, e.g. run.eps=0.01 (repeatable)")
    ap.add_argument("--out", help="output directory (output.dir)")
    ap.add_argument("--seed", type=int, help="random seed (output.seed)")
    ap.add_argument("--threads", type=int, help="worker processes (output.threads)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = parse_overrides(args.set)
    except ConfigError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(args.subcommand, args.config, overrides, args.out, args.seed,
               args.threads)


if __name__ == "__main__":
    sys.exit(main())
