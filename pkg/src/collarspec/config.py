"""Experiment configuration: an INI file with a fixed set of keys.

Every key has a default, so an empty file describes the hyperbolic
benchmark. Keys are addressed as ``section.key`` by ``--set`` overrides.
Unknown sections or keys are rejected, and all collar preconditions are
checked when the file is loaded.
"""

import configparser
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from .metric import CollarConfig, ConfigError, FiberSpectrum, make_profile
from .sturm import BC

__all__ = ["ExperimentConfig", "load_config", "parse_overrides", "SCHEMA"]


def _floats(text):
    return tuple(float(x) for x in str(text).replace(",", " ").split())


def _ints(text):
    return tuple(int(x) for x in str(text).replace(",", " ").split())


def _entries(text):
    """``mu:mult`` pairs, e.g. ``"0:1, 4:2, 9:1"``."""
    out = []
    for item in str(text).replace(",", " ").split():
        mu, _, mult = item.partition(":")
        out.append((float(mu), int(mult or 1)))
    return tuple(out)


def _opt_int(text):
    return None if str(text).strip().lower() in ("", "none", "all") else int(text)


# section -> key -> (parser, default)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "collar": {
        "a": (float, -1.0),
        "b": (float, 1.0),
        "d": (int, 1),
        "t_minus": (float, -1.0),
        "t_plus": (float, 1.0),
    },
    "profile": {
        "kind": (str, "hyperbolic"),
        "params": (_floats, ()),
    },
    "fiber": {
        "source": (str, "circle"),
        "params": (_floats, (1.0,)),
        "entries": (_entries, ()),
        "mu_limit": (float, math.inf),
    },
    "run": {
        "eps": (float, 0.1),
        "eps_grid": (_floats, (1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5, 1e-4,
                               10 ** -4.5, 1e-5)),
        "branch_grid": (_floats, (1e-2, 1e-3, 1e-4)),
        "lambda": (float, 4.0),
        "bc": (str, "dirichlet"),
        "mode": (_opt_int, 1),
        "branches": (_ints, (1, 2, 3)),
        "window": (_floats, (0.3, 0.9)),
        "t_cuts": (_floats, (1e-2, 1e-3, 1e-4)),
        "cusp_count": (int, 3),
        "decay_exponents": (_ints, (1, 2, 4)),
        "r_kind": (str, "inverse-square"),
        "r_amplitude": (float, 1.0),
        "m": (float, 10.0),
        "a_grid": (_floats, (1, 2, 5, 10, 20, 50, 100, 200)),
        "transform_step": (float, 0.005),
        "unitarity_samples": (int, 20),
    },
    "solver": {
        "tol": (float, 1e-10),
        "rtol": (float, 1e-12),
        "count_rtol": (float, 1e-10),
    },
    "output": {
        "dir": (str, "out"),
        "seed": (int, 0),
        "threads": (int, 1),
    },
}


@dataclass
class ExperimentConfig:
    """Resolved experiment settings.

    ``values`` holds every schema key (``section.key``) after defaults and
    overrides; ``collar`` is the validated :class:`CollarConfig`.
    """

    values: Dict[str, object]
    collar: CollarConfig = field(repr=False)
    source: Optional[str] = None

    def __getitem__(self, key):
        return self.values[key]

    @property
    def bc(self):
        return BC.parse(self.values["run.bc"])

    @property
    def seed(self):
        return int(self.values["output.seed"])

    @property
    def threads(self):
        return int(self.values["output.threads"])

    def canonical(self):
        """JSON-safe copy with tuples as lists and infinities as strings."""
        def fix(v):
            if isinstance(v, tuple):
                return [fix(x) for x in v]
            if isinstance(v, float) and not math.isfinite(v):
                return repr(v)
            return v
        return {k: fix(v) for k, v in sorted(self.values.items())}

    def digest(self):
        """SHA-256 of the canonical settings."""
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_overrides(items):
    """``["run.eps=0.01", ...]`` to a dict, rejecting malformed items."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        out[key.strip().lower()] = value.strip()
    return out


def _parse_value(section, key, text):
    parser, _ = SCHEMA[section][key]
    try:
        return parser(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}.{key}: cannot parse {text!r} ({exc})") from exc


def _collar(v):
    if v["collar.a"] > -1:
        raise ConfigError(f"collar.a = {v['collar.a']}: the collar model requires "
                          "a <= -1 (cusp types with a > -1 lie at finite distance)")
    kind = v["profile.kind"]
    if kind == "custom-analytic":
        raise ConfigError("profile.kind = custom-analytic needs Python callables; "
                          "use the library API")
    profile = make_profile(kind, v["profile.params"])
    src = v["fiber.source"]
    if src == "circle":
        if len(v["fiber.params"]) != 1:
            raise ConfigError("fiber.params for a circle is one length")
        fiber = FiberSpectrum.circle(v["fiber.params"][0])
    elif src == "flat-torus":
        fiber = FiberSpectrum.flat_torus(v["fiber.params"])
    elif src == "explicit-list":
        if not v["fiber.entries"]:
            raise ConfigError("fiber.entries is required for an explicit list")
        fiber = FiberSpectrum.explicit(v["fiber.entries"], v["fiber.mu_limit"])
    else:
        raise ConfigError(f"fiber.source {src!r} is not one of circle, flat-torus, "
                          "explicit-list")
    return CollarConfig(v["collar.a"], v["collar.b"], v["collar.d"],
                        (v["collar.t_minus"], v["collar.t_plus"]), profile, fiber)


def _validate_run(v):
    BC.parse(v["run.bc"])
    if not v["run.eps"] >= 0:
        raise ConfigError("run.eps must be nonnegative")
    if not v["run.lambda"] > 0:
        raise ConfigError("run.lambda must be positive")
    for key in ("run.eps_grid", "run.branch_grid"):
        g = v[key]
        if not g or any(e <= 0 or e >= 1 for e in g):
            raise ConfigError(f"{key} must hold values in (0, 1)")
    g = v["run.t_cuts"]
    if len(g) < 2 or any(c <= 0 for c in g):
        raise ConfigError("run.t_cuts needs at least two positive values")
    w = v["run.window"]
    if len(w) != 2 or not w[0] < w[1]:
        raise ConfigError("run.window must be two increasing values")
    if v["run.mode"] is not None and v["run.mode"] < 1:
        raise ConfigError("run.mode must be a nonconstant fiber mode index (>= 1)")
    if not v["run.branches"] or min(v["run.branches"]) < 1:
        raise ConfigError("run.branches are 1-based indices")
    if v["solver.tol"] <= 0 or v["solver.rtol"] <= 0 or v["solver.count_rtol"] <= 0:
        raise ConfigError("solver tolerances must be positive")
    if v["output.threads"] < 1:
        raise ConfigError("output.threads must be at least 1")
    if v["output.seed"] < 0 or v["output.seed"] >= 2 ** 64:
        raise ConfigError("output.seed must be an unsigned 64-bit integer")


def load_config(path=None, overrides=None):
    """Read ``path`` (or only defaults), apply overrides and validate.

    Raises
    ------
    ConfigError
        For a missing file, unknown keys, unparsable values or violated
        preconditions.
    """
    values = {f"{s}.{k}": default for s, keys in SCHEMA.items()
              for k, (_, default) in keys.items()}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {str(p)!r} not found")
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(p.read_text(encoding="utf-8"), source=str(p))
        except configparser.Error as exc:
            raise ConfigError(f"{p}: {exc}") from exc
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, text in cp.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                values[f"{section}.{key}"] = _parse_value(section, key, text)
    for full, text in (overrides or {}).items():
        section, _, key = full.partition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {full}")
        values[full] = _parse_value(section, key, text)
    _validate_run(values)
    collar = _collar(values)
    return ExperimentConfig(values, collar, None if path is None else str(path))
