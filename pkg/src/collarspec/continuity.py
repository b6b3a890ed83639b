"""Eigenvalue branches and eigenfunctions as the collar degenerates.

Branches are followed by index: ``lam_i(eps)`` is the ``i``-th eigenvalue of
a fixed fiber channel (or of the constant-free spectrum) and its limit
``lam_i(0)`` is the ``i``-th value of the sorted union of the two cusp
sides, each extrapolated in the truncation point.

Eigenfunctions are compared on a window ``[t_a, t_b]`` on one side of the
puncture. On the window both ``u_eps`` and ``u_0`` are computed by a shot
from that side's outer collar end, where the solution is largest. This
avoids resolving the two nearly degenerate localized states of a
symmetric collar, whose splitting is far below double precision.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson

from .cusp import DEFAULT_CUTS, CuspProblem, cusp_eigenvalues
from .metric import ConfigError, max_rho, sl_coefficients
from .spectrum import _mode, perp_ladder
from .sturm import BC, kth_eigenvalue, shot_solution

__all__ = [
    "DEFAULT_BRANCH_GRID",
    "EigenBranch",
    "ConvergenceReport",
    "branch_track",
    "branches_track",
    "branch_limits",
    "eigenfunction_convergence",
]

DEFAULT_BRANCH_GRID = (1e-2, 1e-3, 1e-4)


@dataclass
class EigenBranch:
    """``lam_i(eps)`` along a decreasing ``eps`` grid and its limit."""

    index: int
    mode: Optional[int]
    eps: List[float]
    values: List[float]
    limit: float
    limit_certified: bool
    lower_bounds: List[float]
    notes: List[str] = field(default_factory=list)

    @property
    def gaps(self):
        return [abs(v - self.limit) for v in self.values]

    @property
    def decreasing(self):
        """Gaps strictly decrease over the last three grid points."""
        g = self.gaps[-3:]
        return len(g) >= 2 and all(b < a for a, b in zip(g, g[1:]))

    @property
    def above_lower_bound(self):
        return all(v >= lb for v, lb in zip(self.values, self.lower_bounds))

    def rows(self):
        """``(eps, lam_i, gap)`` per grid point."""
        return [(e, v, g) for e, v, g in zip(self.eps, self.values, self.gaps)]

    def to_dict(self):
        return {
            "index": self.index,
            "mode": self.mode,
            "eps": list(self.eps),
            "values": list(self.values),
            "limit": self.limit,
            "limit_certified": self.limit_certified,
            "gaps": self.gaps,
            "decreasing": self.decreasing,
            "above_lower_bound": self.above_lower_bound,
            "notes": list(self.notes),
        }


@dataclass
class ConvergenceReport:
    """Window distances between normalized ``u_eps`` and ``u_0``."""

    index: int
    window: Tuple[float, float]
    eps: List[float]
    lam_eps: List[float]
    lam_0: float
    l2: List[float]
    h1: List[float]
    normalization: str
    notes: List[str] = field(default_factory=list)

    @property
    def decreasing(self):
        """Both distances decrease over the final three ``eps`` values."""
        ok = True
        for d in (self.l2, self.h1):
            tail = d[-3:]
            ok &= len(tail) >= 2 and all(b < a for a, b in zip(tail, tail[1:]))
        return bool(ok)

    def rows(self):
        """``(eps, L2_dist, H1_dist)`` per grid point."""
        return list(zip(self.eps, self.l2, self.h1))

    def to_dict(self):
        return {
            "index": self.index,
            "window": list(self.window),
            "eps": list(self.eps),
            "lam_eps": list(self.lam_eps),
            "lam_0": self.lam_0,
            "l2": list(self.l2),
            "h1": list(self.h1),
            "normalization": self.normalization,
            "decreasing": self.decreasing,
            "notes": list(self.notes),
        }


def _check_grid(eps_grid):
    eps = [float(e) for e in eps_grid if e != 0]
    if not eps or any(e < 0 for e in eps):
        raise ConfigError("eps grid must hold positive values")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps grid must be strictly decreasing")
    return eps


def _check_exponents(config):
    if config.a > -1 or config.b <= 0:
        raise ConfigError("branch tracking needs a <= -1 and b > 0")


def _channel_mu(config, mode):
    m = _mode(config, mode)
    if m is None or m[0] <= 0:
        raise ConfigError(f"fiber mode {mode} is not a nonconstant mode")
    return m


def _channel_limits(config, mu, n, bc, t_cuts, tol, rtol):
    """Lowest ``n`` eps = 0 eigenvalues of one channel and a certificate."""
    if not config.profile.homogeneous:
        sl = sl_coefficients(config, 0.0, mu, bc=bc)
        vals = [kth_eigenvalue(sl, k, tol=tol, rtol=rtol) for k in range(1, n + 1)]
        return vals, True, []
    vals, ok, notes = [], True, []
    for side in ("-", "+"):
        spec = cusp_eigenvalues(CuspProblem(config, side, mu, bc_outer=bc),
                                count=n, t_cuts=t_cuts, tol=tol, rtol=rtol)
        vals += [float(v) for v in spec.limits]
        ok &= spec.certified
        notes += [f"side {side}: {m}" for m in spec.notes]
    return sorted(vals)[:n], bool(ok), notes


def branch_limits(config, n, mode=1, bc=BC.DIRICHLET, t_cuts=DEFAULT_CUTS,
                  tol=1e-10, rtol=1e-12):
    """``lam_1(0), ..., lam_n(0)`` with a certificate flag and notes.

    With ``mode=None`` the channels are merged (with multiplicity) until the
    ground-state bound of the next channel exceeds the ``n``-th value.
    """
    bc = BC.parse(bc)
    if mode is not None:
        mu, _ = _channel_mu(config, mode)
        return _channel_limits(config, mu, n, bc, t_cuts, tol, rtol)
    rmax = max_rho(config, 0.0)
    out, ok, notes = [], True, []
    k = 0
    while True:
        k += 1
        m = _mode(config, k)
        if m is None:
            break
        mu, mult = m
        if len(out) >= n and mu * rmax ** (-2 * config.b) > out[n - 1]:
            break
        vals, good, nts = _channel_limits(config, mu, n, bc, t_cuts, tol, rtol)
        ok &= good
        notes += [f"mode {k}: {x}" for x in nts]
        out = sorted(out + [v for v in vals for _ in range(mult)])
    return out[:n], bool(ok), notes


def branches_track(config, indices, eps_grid=DEFAULT_BRANCH_GRID, mode=1,
                   bc=BC.DIRICHLET, t_cuts=DEFAULT_CUTS, tol=1e-10, rtol=1e-12):
    """Several branches sharing one set of solves.

    Each ``eps`` solve is seeded with the previous value of the same index
    (the limits for the first point). Two consecutive indices within
    ``max(10 tol, 1e-10 lam)`` of each other (the phase-error floor) are
    reported as ambiguous and followed in index order.
    """
    _check_exponents(config)
    eps = _check_grid(eps_grid)
    indices = sorted({int(i) for i in indices})
    if indices[0] < 1:
        raise ConfigError("branch indices are 1-based")
    bc = BC.parse(bc)
    n = indices[-1] + 1
    limits, certified, lim_notes = branch_limits(config, n, mode, bc, t_cuts,
                                                 tol, rtol)
    if len(limits) < n:
        raise ConfigError(f"only {len(limits)} limit eigenvalues available")
    table = []
    bounds = []
    prev = list(limits)
    for e in eps:
        if mode is None:
            vals = [v for v, _ in perp_ladder(config, e, n, bc, tol, rtol)]
            b = _mode(config, 1)[0]
        else:
            mu, _ = _channel_mu(config, mode)
            sl = sl_coefficients(config, e, mu, bc=bc)
            vals = [kth_eigenvalue(sl, k, tol=tol, rtol=rtol, guess=prev[k - 1])
                    for k in range(1, n + 1)]
            b = mu
        bounds.append(b * max_rho(config, e) ** (-2 * config.b))
        table.append(vals)
        prev = vals
    out = []
    for i in indices:
        notes = list(lim_notes)
        if not certified:
            notes.append("limit not certified by the truncation sequence")
        for e, vals in zip(eps, table):
            for j in (i - 1, i + 1):
                if 1 <= j <= n and abs(vals[j - 1] - vals[i - 1]) <= max(10 * tol, 1e-10 * abs(vals[i - 1])):
                    notes.append(f"eps={e!r}: branches {min(i, j)} and "
                                 f"{max(i, j)} coincide within tolerance; "
                                 "followed by index")
        values = [vals[i - 1] for vals in table]
        branch = EigenBranch(i, mode, eps, values, limits[i - 1], certified,
                             [lb if i == 1 else -math.inf for lb in bounds], notes)
        if not branch.decreasing:
            branch.notes.append("gaps do not decrease over the last three points")
        if any(v <= 0 for v in values):
            branch.notes.append("nonpositive branch value")
        out.append(branch)
    return out


def branch_track(config, i, eps_grid=DEFAULT_BRANCH_GRID, mode=1, bc=BC.DIRICHLET,
                 t_cuts=DEFAULT_CUTS, tol=1e-10, rtol=1e-12):
    """The ``i``-th branch ``lam_i(eps)`` and its gaps to ``lam_i(0)``."""
    return branches_track(config, [i], eps_grid, mode, bc, t_cuts, tol, rtol)[0]


def _window_side(config, window):
    ta, tb = float(window[0]), float(window[1])
    lo, hi = config.interval
    if not ta < tb:
        raise ConfigError("window must satisfy t_a < t_b")
    if 0 < ta and tb <= hi:
        return "+", ta, tb
    if lo <= ta and tb < 0:
        return "-", ta, tb
    raise ConfigError("window must lie on one side of t = 0 inside the collar")


def _normalize(u, du, w, grid):
    norm = math.sqrt(simpson(u * u * w, x=grid))
    return u / norm, du / norm


def eigenfunction_convergence(config, i=1, eps_grid=DEFAULT_BRANCH_GRID,
                              window=(0.3, 0.9), mode=1, bc=BC.DIRICHLET,
                              n=801, t_cuts=DEFAULT_CUTS, tol=1e-10, rtol=1e-12,
                              branch=None):
    """Window distances between the ``i``-th channel eigenfunctions.

    Both functions are normalized to unit norm on the window with the
    ``eps = 0`` weight ``w_0 = rho_0^{a+bd}`` (the volume density of
    ``dV_0`` per fiber mode). Signs are fixed so the weighted window mean is
    positive; if that mean is negligible the sign maximizing the
    correlation with ``u_0`` is used instead. The H1 distance adds the
    energy density of the lifted difference,
    ``(rho_0^{-2a} |du'|^2 + mu rho_0^{-2b} |du|^2) w_0``.
    """
    _check_exponents(config)
    side, ta, tb = _window_side(config, window)
    mu, _ = _channel_mu(config, mode)
    bc = BC.parse(bc)
    if branch is None:
        branch = branch_track(config, i, eps_grid, mode, bc, t_cuts, tol, rtol)
    grid = np.linspace(ta, tb, n)
    rho0 = np.array([config.profile.rho(0.0, x) for x in grid])
    w0 = rho0 ** (config.a + config.bd)
    energy = rho0 ** (-2 * config.a) * w0
    zeroth = mu * rho0 ** (-2 * config.b) * w0
    from_right = side == "+"
    notes = []
    norm_desc = ("unit L2(window, rho_0^(a+bd) dt) norm; sign from positive "
                 "weighted window mean")

    def solution(eps, lam):
        if config.profile.homogeneous and eps == 0:
            sl = CuspProblem(config, side, mu, t_cuts[-1], bc).sl_problem()
        else:
            sl = sl_coefficients(config, eps, mu, bc=bc)
        u, du = shot_solution(sl, lam, grid, from_right=from_right, rtol=rtol)
        return _normalize(u, du, w0, grid)

    u0, du0 = solution(0.0, branch.limit)
    scale = math.sqrt(simpson(w0, x=grid))
    m0 = simpson(u0 * w0, x=grid)
    if abs(m0) < 1e-3 * scale:
        raise ConfigError("the limit eigenfunction has no window mean; "
                          "choose another window")
    if m0 < 0:
        u0, du0 = -u0, -du0
    l2, h1 = [], []
    for e, lam in zip(branch.eps, branch.values):
        u, du = solution(e, lam)
        mean = simpson(u * w0, x=grid)
        if abs(mean) >= 1e-3 * scale:
            sgn = 1.0 if mean > 0 else -1.0
        else:
            sgn = 1.0 if simpson(u * u0 * w0, x=grid) >= 0 else -1.0
            notes.append(f"eps={e!r}: window mean negligible, sign by correlation")
        d = sgn * u - u0
        dd = sgn * du - du0
        a2 = simpson(d * d * w0, x=grid)
        g2 = simpson(dd * dd * energy + d * d * zeroth, x=grid)
        l2.append(math.sqrt(max(a2, 0.0)))
        h1.append(math.sqrt(max(a2 + g2, 0.0)))
    rep = ConvergenceReport(branch.index, (ta, tb), list(branch.eps),
                            list(branch.values), branch.limit, l2, h1, norm_desc,
                            notes)
    if not rep.decreasing:
        rep.notes.append("distances do not decrease over the final three eps")
    return rep
