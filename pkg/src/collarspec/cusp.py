"""One-sided cusp problems at ``eps = 0``.

On each side of the puncture the radial problem of a nonconstant fiber
mode lives on a half-open interval ending at ``t = 0``. It is truncated at
``t_cut`` with a Dirichlet condition; the truncated eigenvalues decrease as
``t_cut -> 0`` and converge extremely fast because the mode is exponentially
suppressed near the tip, where ``mu rho^{-2b}`` dominates.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson

from .liouville import TransformData, transformed_problem
from .metric import ConfigError, sl_coefficients
from .sturm import (BC, EigenSolution, count_eigenvalues, eigenfunction,
                    kth_eigenvalue)

__all__ = [
    "CuspProblem",
    "CuspSpectrum",
    "CuspEigenfunction",
    "DecayReport",
    "cusp_eigenvalues",
    "cusp_eigenfunction",
    "decay_check",
    "gradient_integrability",
    "gradient_sequence",
]

DEFAULT_CUTS = (1e-2, 1e-3, 1e-4)


def _side(side):
    if side in ("+", "plus", 1, "1"):
        return "+"
    if side in ("-", "minus", -1, "-1"):
        return "-"
    raise ConfigError(f"side must be '+' or '-', got {side!r}")


@dataclass(frozen=True)
class CuspProblem:
    """The ``mu`` channel on one side of the puncture, truncated at ``t_cut``."""

    config: object
    side: str
    mu: float
    t_cut: float = 1e-3
    bc_outer: BC = BC.DIRICHLET
    bc_cut: BC = BC.DIRICHLET

    def __post_init__(self):
        object.__setattr__(self, "side", _side(self.side))
        object.__setattr__(self, "bc_outer", BC.parse(self.bc_outer))
        object.__setattr__(self, "bc_cut", BC.parse(self.bc_cut))
        if not self.mu > 0:
            raise ConfigError("cusp channels need mu > 0; the constant mode "
                              "carries essential spectrum")
        lo, hi = self.config.interval
        reach = hi if self.side == "+" else -lo
        if not 0 < self.t_cut < reach:
            raise ConfigError(f"t_cut must lie in (0, {reach}), got {self.t_cut}")

    @property
    def interval(self):
        return self.config.side_interval(self.side, self.t_cut)

    def with_cut(self, t_cut):
        return CuspProblem(self.config, self.side, self.mu, t_cut, self.bc_outer,
                           self.bc_cut)

    def sl_problem(self):
        """Radial problem in ``t`` on the truncated side.

        The compiled phase integrator copes with the ``t^{-2}`` growth of the
        coefficients near the cut, so this is the default solve; the
        Liouville form below is kept as an independent check.
        """
        if self.side == "+":
            bcs = (self.bc_cut, self.bc_outer)
        else:
            bcs = (self.bc_outer, self.bc_cut)
        return sl_coefficients(self.config, 0.0, self.mu, bc=bcs[0],
                               interval=self.interval, bc_right=bcs[1])

    def liouville_problem(self, h=0.005):
        """Same channel in Liouville form ``-f'' + (V + mu rho^{-2b}) f``;
        only available with a Dirichlet outer end."""
        if self.bc_outer is not BC.DIRICHLET or self.bc_cut is not BC.DIRICHLET:
            raise ConfigError("the Liouville form turns a Neumann outer end "
                              "into a Robin condition")
        data = TransformData.build(self.config, 0.0, interval=self.interval, h=h)
        return transformed_problem(data, self.mu)


@dataclass
class CuspSpectrum:
    """Truncated eigenvalues over a ``t_cut`` sequence and their limits."""

    problem: CuspProblem
    t_cuts: Tuple[float, ...]
    table: np.ndarray             # (len(t_cuts), n)
    limits: np.ndarray
    converged: np.ndarray
    floor: float
    monotone: bool = True
    notes: List[str] = field(default_factory=list)

    @property
    def certified(self):
        return bool(np.all(self.converged))

    def rows(self):
        """``(t_cut, index, lam)`` rows followed by the limits (``t_cut = 0``)."""
        out = [(c, k + 1, float(self.table[i, k]))
               for i, c in enumerate(self.t_cuts) for k in range(self.table.shape[1])]
        out += [(0.0, k + 1, float(v)) for k, v in enumerate(self.limits)]
        return out


def _extrapolate(seq, floor, factor=0.5):
    """Limit of a sequence of truncated values and a convergence flag.

    The sequence is converged when its last difference is at most ``floor``
    (the solver resolution; the next truncation effect is smaller still) or
    at most ``factor`` times the previous one, in which case Aitken's
    delta-squared step gives the limit.
    """
    seq = np.asarray(seq, dtype=float)
    if seq.size < 2:
        return float(seq[-1]), False
    d = np.diff(seq)
    if abs(d[-1]) <= floor:
        return float(seq[-1]), True
    if seq.size >= 3 and abs(d[-1]) <= factor * abs(d[-2]) and d[-1] * d[-2] > 0:
        r = d[-1] / d[-2]
        return float(seq[-1] + d[-1] * r / (1.0 - r)), True
    return float(seq[-1]), False


def cusp_eigenvalues(problem, lam_max=None, count=None, t_cuts=DEFAULT_CUTS,
                     tol=1e-10, rtol=1e-12, floor=None, factor=0.5):
    """Eigenvalues of the truncated cusp channel for each ``t_cut``.

    Either ``count`` (the lowest ``count`` eigenvalues) or ``lam_max`` (all
    eigenvalues ``<= lam_max`` at the smallest cut) selects the indices.
    ``floor`` is the absolute difference treated as converged; it defaults
    to ``max(10 tol, 1e-11 |lam|)``, the resolution of the solver itself.
    Dirichlet monotonicity (values do not increase as the cut moves in) is
    checked up to the same floor.
    """
    t_cuts = tuple(sorted((float(c) for c in t_cuts), reverse=True))
    if len(t_cuts) < 2:
        raise ConfigError("need at least two truncation points")
    probs = [problem.with_cut(c).sl_problem() for c in t_cuts]
    if count is None:
        if lam_max is None:
            raise ConfigError("pass lam_max or count")
        count = count_eigenvalues(probs[-1], lam_max, rtol=rtol)
    table = np.full((len(t_cuts), count), np.nan)
    for i, sl in enumerate(probs):
        for k in range(count):
            guess = table[i - 1, k] if i else None
            table[i, k] = kth_eigenvalue(sl, k + 1, tol=tol, rtol=rtol,
                                         guess=guess)
    limits = np.empty(count)
    flags = np.zeros(count, dtype=bool)
    fl = []
    for k in range(count):
        f = floor if floor is not None else max(10 * tol, 1e-11 * abs(table[-1, k]))
        fl.append(f)
        limits[k], flags[k] = _extrapolate(table[:, k], f, factor)
    notes = []
    mono = True
    if problem.bc_cut is BC.DIRICHLET and count:
        mono = bool(np.all(np.diff(table, axis=0) <= max(fl)))
        if not mono:
            notes.append("Dirichlet monotonicity in t_cut violated beyond the floor")
    if count and not flags.all():
        notes.append("truncation differences did not settle for indices "
                     f"{[int(k) + 1 for k in np.flatnonzero(~flags)]}")
    return CuspSpectrum(problem, t_cuts, table, limits, flags,
                        max(fl) if fl else (floor or 0.0), mono, notes)


@dataclass
class CuspEigenfunction:
    problem: CuspProblem
    index: int
    solution: EigenSolution

    @property
    def lam(self):
        return self.solution.lam


def cusp_eigenfunction(problem, k=1, n=4001, tol=1e-11, rtol=1e-12, grid=None):
    """``k``-th eigenfunction of the truncated channel on a uniform ``t`` grid."""
    sl = problem.sl_problem()
    lam = kth_eigenvalue(sl, k, tol=tol, rtol=rtol)
    if grid is None:
        grid = np.linspace(sl.t0, sl.t1, n)
    sol = eigenfunction(sl, lam, grid=grid, match_tol=1e-5, rtol=rtol)
    return CuspEigenfunction(problem, k, sol)


@dataclass
class DecayReport:
    """Monotone decay of ``|t|^{-j} u^2`` towards the tip and the discrete
    convexity inequality ``L(u^2) >= 2 (mu rho^{-2b} - lam) u^2``."""

    exponents: Tuple[int, ...]
    monotone: dict
    convexity_ok: bool
    convexity_worst: float
    flux_ok: bool
    inner_points: int
    notes: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return self.convexity_ok and self.flux_ok and all(self.monotone.values())

    def to_dict(self):
        return {
            "exponents": list(self.exponents),
            "monotone": {str(k): v for k, v in self.monotone.items()},
            "convexity_ok": self.convexity_ok,
            "convexity_worst": self.convexity_worst,
            "flux_ok": self.flux_ok,
            "inner_points": self.inner_points,
            "ok": self.ok,
            "notes": list(self.notes),
        }


def _tip_order(cef):
    """Grid indices ordered from the tip outwards."""
    n = cef.solution.t.size
    return np.arange(n) if cef.problem.side == "+" else np.arange(n)[::-1]


def decay_check(cef, exponents=(0, 1, 2, 3, 4), inner_fraction=0.2,
                slack=1e-6, min_inner=20):
    """Check cusp-form decay and the convexity surrogate on the sample grid.

    ``L(u^2)`` is formed by differencing ``2 p u u'`` with second-order
    one-sided-at-ends differences; ``slack`` is the relative tolerance
    granted to that discretisation. In the Liouville variable
    ``L = rho^{-bd} d/ds rho^{bd} d/ds`` and ``rho^{bd} d/ds = p d/dt``, so
    where ``mu rho^{-2b} >= lam`` the flux ``p (u^2)'`` must be
    nondecreasing; that second-difference test is ``flux_ok``.
    """
    sol = cef.solution
    cfg = cef.problem.config
    t, u, du = sol.t, sol.u, sol.du
    order = _tip_order(cef)
    m = max(3, int(round(inner_fraction * t.size)))
    if m < min_inner:
        raise ConfigError(f"grid too coarse near t_cut: {m} inner points, "
                          f"need {min_inner}")
    inner = order[:m]
    tt = np.abs(t[inner])
    mono = {}
    for j in exponents:
        g = tt ** (-float(j)) * u[inner] ** 2
        # moving away from the tip the values must not decrease
        steps = np.diff(g)
        mono[int(j)] = bool(np.all(steps >= -1e-12 * np.maximum(g[1:], g[:-1])))
    rho = np.array([cfg.profile.rho(0.0, x) for x in t])
    a, b, bd = cfg.a, cfg.b, cfg.bd
    p = rho ** (-a + bd)
    w = rho ** (a + bd)
    flux = 2.0 * p * u * du
    lu2 = np.gradient(flux, t, edge_order=2) / w
    rhs = 2.0 * (cef.problem.mu * rho ** (-2 * b) - sol.lam) * u * u
    margin = lu2 - rhs
    scale = np.abs(lu2) + np.abs(rhs)
    interior = slice(1, t.size - 1)
    rel = margin[interior] / np.where(scale[interior] > 0, scale[interior], 1.0)
    worst = float(rel.min())
    forbidden = cef.problem.mu * rho ** (-2 * b) >= sol.lam
    mid = 0.5 * (flux[1:] + flux[:-1])
    jumps = np.diff(flux)[forbidden[1:] & forbidden[:-1]]
    fscale = np.max(np.abs(mid)) if mid.size else 1.0
    flux_ok = bool(np.all(jumps >= -slack * fscale))
    notes = []
    if not flux_ok:
        notes.append("flux p (u^2)' decreases inside the forbidden region")
    if not all(mono.values()):
        notes.append("decay not monotone for exponents "
                     f"{[j for j, v in mono.items() if not v]}")
    return DecayReport(tuple(int(j) for j in exponents), mono,
                       worst >= -slack, worst, flux_ok, int(m), notes)


def gradient_integrability(cef):
    """``int |du|^2 rho^{-2a} dV`` over the sampled truncated side."""
    sol = cef.solution
    cfg = cef.problem.config
    if not np.any(sol.u):
        return 0.0
    rho = np.array([cfg.profile.rho(0.0, x) for x in sol.t])
    dens = sol.du ** 2 * rho ** (-2 * cfg.a) * rho ** (cfg.a + cfg.bd)
    return float(simpson(dens, x=sol.t))


def gradient_sequence(problem, k=1, t_cuts=DEFAULT_CUTS, n=4001, rtol=1e-12,
                      rel=1e-2):
    """Dirichlet energy of the ``k``-th eigenfunction along a cut sequence.

    Returns the values (largest cut first) and a stabilisation flag: the
    last relative change is below ``rel`` and the sequence is not growing
    geometrically, which would indicate a divergent tail.
    """
    vals = [gradient_integrability(cusp_eigenfunction(problem.with_cut(c), k,
                                                      n=n, rtol=rtol))
            for c in sorted(t_cuts, reverse=True)]
    stable = len(vals) >= 2 and abs(vals[-1] - vals[-2]) <= rel * abs(vals[-1])
    return vals, stable
