"""Liouville normal form of the radial operator.

With ``s = alpha(t) = int rho^a dt`` and ``U f = rho^{-bd/2} (f o alpha)``,
``U`` is unitary from ``L^2(ds)`` onto ``L^2(rho^{a+bd} dt)`` and

    U^{-1} (-L) U = -d^2/ds^2 + V(s),
    V = (bd/2) rho^{-2a-2} (rho rho'' + ((bd - 2a - 2)/2) rho'^2),

evaluated at ``t = alpha^{-1}(s)``. For the hyperbolic profile with
``a = -1`` and ``b = d = 1`` this is ``1/4 + sech(s)^2 / 4``.
"""

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, simpson

from .metric import ConfigError
from .sturm import BC, SLProblem

__all__ = [
    "alpha",
    "alpha_inverse",
    "conjugated_potential",
    "potential_at_t",
    "TransformData",
    "unitary_push",
    "norm_defect",
    "random_test_functions",
    "transformed_problem",
]

QUAD_EPSABS = 1e-14
QUAD_EPSREL = 1e-13
INVERSE_TOL = 1e-12


def _default_origin(config, eps, t):
    if eps > 0:
        return 0.0
    lo, hi = config.interval
    return hi if t > 0 else lo


def _check_domain(config, eps, t0, t):
    if eps == 0 and (min(t0, t) <= 0.0 <= max(t0, t)):
        raise ConfigError("at eps = 0 the transform is one-sided; t and t0 "
                          "must lie strictly on the same side of 0")


def _alpha_increment(config, eps, t0, t):
    """``int_{t0}^{t} rho^a`` by adaptive Gauss-Kronrod."""
    if t == t0:
        return 0.0
    rho, a = config.profile.rho, config.a
    pts = [0.0] if eps > 0 and min(t0, t) < 0.0 < max(t0, t) else None
    val, _ = quad(lambda u: rho(eps, u) ** a, t0, t, points=pts,
                  epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400)
    return val


def alpha(config, eps, t, t0=None):
    """Arclength-type coordinate ``int_{t0}^{t} rho(eps, u)^a du``.

    ``t0`` defaults to 0 for ``eps > 0`` and to the interval endpoint on the
    side of ``t`` for ``eps = 0`` (so that ``alpha(t) = log t`` on the plus
    side when ``a = -1``, ``c_+ = 1`` and ``t+ = 1``).
    """
    if t0 is None:
        t0 = _default_origin(config, eps, t)
    _check_domain(config, eps, t0, t)
    return _alpha_increment(config, eps, t0, t)


def alpha_inverse(config, eps, s, t0=None, bracket=None, tol=INVERSE_TOL):
    """Solve ``alpha(t) = s`` by bracketed Newton with bisection fallback."""
    lo, hi = bracket if bracket is not None else _side_bracket(config, eps, s, t0)
    if t0 is None:
        t0 = _default_origin(config, eps, 0.5 * (lo + hi))
    rho, a = config.profile.rho, config.a
    flo = alpha(config, eps, lo, t0) - s
    fhi = alpha(config, eps, hi, t0) - s
    if flo > 0 or fhi < 0:
        raise ConfigError(f"s={s} is outside alpha([{lo}, {hi}])")
    t = lo - flo * (hi - lo) / (fhi - flo)
    ft = alpha(config, eps, t, t0) - s
    for _ in range(200):
        if ft > 0:
            hi = t
        else:
            lo = t
        step = ft / rho(eps, t) ** a
        tn = t - step
        if not lo < tn < hi:
            tn = 0.5 * (lo + hi)
        if abs(tn - t) <= tol * max(1.0, abs(t)):
            return tn
        ft = ft + _alpha_increment(config, eps, t, tn)
        t = tn
    return t


def _side_bracket(config, eps, s, t0):
    lo, hi = config.interval
    if eps > 0:
        return lo, hi
    if t0 is None:
        raise ConfigError("at eps = 0 pass the side through t0 or bracket")
    # walk toward the puncture until alpha crosses s (alpha -> -inf there)
    end = hi if t0 > 0 else lo
    near = 0.5 * end
    for _ in range(2000):
        val = alpha(config, eps, near, t0)
        if (val <= s) if t0 > 0 else (val >= s):
            break
        near *= 0.5
    return (near, end) if t0 > 0 else (end, near)


def potential_at_t(config, eps, t):
    """The conjugated potential ``V`` expressed at the point ``t``."""
    a, bd = config.a, config.bd
    r, r1, r2 = config.profile.derivs(eps, t)
    return 0.5 * bd * r ** (-2 * a - 2) * (r * r2 + 0.5 * (bd - 2 * a - 2) * r1 * r1)


def conjugated_potential(config, eps, s, t0=None, bracket=None):
    """``V(s)``; inverts ``alpha`` by root finding at each call."""
    return potential_at_t(config, eps, alpha_inverse(config, eps, s, t0, bracket))


def _hermite(x0, x1, y0, y1, d0, d1, x):
    h = x1 - x0
    u = (x - x0) / h
    u2 = u * u
    u3 = u2 * u
    return ((2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * d0
            + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * h * d1)


@dataclass
class TransformData:
    """Tabulated ``t(s)`` on a uniform ``s`` grid, with cubic Hermite
    interpolation in both directions using ``dt/ds = rho^{-a}``.

    Build with :meth:`build`. Nodes are exact inverses (to ``INVERSE_TOL``);
    between nodes the interpolation error is ``O(h^4)``.
    """

    config: object
    eps: float
    t0: float
    s: np.ndarray
    t: np.ndarray
    dtds: np.ndarray

    @classmethod
    def build(cls, config, eps, interval=None, t0=None, h=0.005):
        lo, hi = config.interval if interval is None else interval
        if eps == 0 and lo <= 0.0 <= hi:
            raise ConfigError("at eps = 0 pass a one-sided interval")
        if t0 is None:
            t0 = 0.0 if eps > 0 else (hi if lo > 0 else lo)
        rho, a = config.profile.rho, config.a
        s_lo = alpha(config, eps, lo, t0)
        s_hi = alpha(config, eps, hi, t0)
        n = max(16, int(math.ceil((s_hi - s_lo) / h)))
        s = np.linspace(s_lo, s_hi, n + 1)
        t = np.empty_like(s)
        t[0], t[-1] = lo, hi
        tk = lo
        for k in range(1, n):
            target = s[k] - s[k - 1]
            # Newton on g(x) = int_{t_{k-1}}^{x} rho^a - target, safeguarded
            a_lo, a_hi = tk, hi
            x = tk + target * rho(eps, tk) ** (-a)
            if not a_lo < x < a_hi:
                x = 0.5 * (a_lo + a_hi)
            for _ in range(100):
                g = _alpha_increment(config, eps, tk, x) - target
                if g > 0:
                    a_hi = x
                else:
                    a_lo = x
                xn = x - g * rho(eps, x) ** (-a)
                if not a_lo <= xn <= a_hi:
                    xn = 0.5 * (a_lo + a_hi)
                done = abs(xn - x) <= INVERSE_TOL * max(abs(x), 1e-300) + 1e-300
                x = xn
                if done:
                    break
            t[k] = tk = x
        dtds = np.array([rho(eps, x) ** (-a) for x in t])
        return cls(config, float(eps), float(t0), s, t, dtds)

    @property
    def s_range(self):
        return float(self.s[0]), float(self.s[-1])

    def t_of_s(self, s):
        """Interpolated ``alpha^{-1}(s)`` (scalar)."""
        grid = self.s
        k = min(max(bisect.bisect_right(grid, s) - 1, 0), len(grid) - 2)
        return _hermite(grid[k], grid[k + 1], self.t[k], self.t[k + 1],
                        self.dtds[k], self.dtds[k + 1], s)

    def s_of_t(self, t):
        """Interpolated ``alpha(t)`` (scalar)."""
        grid = self.t
        k = min(max(bisect.bisect_right(grid, t) - 1, 0), len(grid) - 2)
        return _hermite(grid[k], grid[k + 1], self.s[k], self.s[k + 1],
                        1.0 / self.dtds[k], 1.0 / self.dtds[k + 1], t)

    def potential(self, s):
        return potential_at_t(self.config, self.eps, self.t_of_s(s))

    def rho_of_s(self, s):
        return self.config.profile.rho(self.eps, self.t_of_s(s))


def unitary_push(config, eps, f_samples, s_grid, data=None, t0=None):
    """Map samples of ``f(s)`` to ``(t_grid, U f)``.

    Raises
    ------
    ConfigError
        On grid/sample length mismatch or nodes outside the collar.
    """
    f = np.asarray(f_samples, dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    if f.shape != s_grid.shape or f.ndim != 1:
        raise ConfigError(f"samples {f.shape} do not match grid {s_grid.shape}")
    if data is None:
        lo, hi = config.interval
        if eps == 0:
            side_t = hi if s_grid[0] <= 0 else lo
            raise ConfigError("at eps = 0 pass TransformData for the side "
                              f"(e.g. built with t0={side_t})")
        data = TransformData.build(config, eps, t0=t0)
    s_lo, s_hi = data.s_range
    tol = 1e-12 * max(1.0, abs(s_lo), abs(s_hi))
    if s_grid.min() < s_lo - tol or s_grid.max() > s_hi + tol:
        raise ConfigError("s grid extends outside alpha(I)")
    t = np.array([data.t_of_s(x) for x in s_grid])
    rho = config.profile.rho
    scale = np.array([rho(eps, x) ** (-0.5 * config.bd) for x in t])
    return t, scale * f


def norm_defect(config, eps, f_samples, s_grid, data):
    """Relative defect ``| ||Uf||_{L2(w dt)}^2 / ||f||_{L2(ds)}^2 - 1 |``.

    Both integrals use Simpson's rule on the same nodes (uniform in ``s``,
    their images in ``t``), so the defect measures the transform itself and
    not a resampling error.
    """
    f = np.asarray(f_samples, dtype=float)
    t, g = unitary_push(config, eps, f, s_grid, data=data)
    w = np.array([config.profile.rho(eps, x) ** (config.a + config.bd) for x in t])
    lhs = simpson(f * f, x=s_grid)
    rhs = simpson(g * g * w, x=t)
    return abs(rhs / lhs - 1.0)


def random_test_functions(rng, s_grid, count, modes=6):
    """``count`` smooth functions vanishing at the ends of ``s_grid``.

    Each is a sine series with ``modes`` standard-normal coefficients.
    """
    s0, s1 = float(s_grid[0]), float(s_grid[-1])
    x = (np.asarray(s_grid) - s0) / (s1 - s0)
    k = np.arange(1, modes + 1)
    basis = np.sin(np.pi * np.outer(k, x))
    return rng.standard_normal((count, modes)) @ basis


def transformed_problem(data, mu, bc=BC.DIRICHLET, bc_right=None):
    """``-f'' + (V + mu rho^{-2b}) f = lam f`` on ``alpha(I)``.

    Dirichlet conditions are preserved by ``U``; Neumann conditions in ``t``
    become Robin conditions in ``s`` and are not reproduced here.
    """
    config, eps = data.config, data.eps
    rho = config.profile.rho
    b = config.b
    mu = float(mu)

    def q(s):
        t = data.t_of_s(s)
        v = potential_at_t(config, eps, t)
        if mu:
            v += mu * rho(eps, t) ** (-2 * b)
        return v

    def one(s):
        return 1.0

    s0, s1 = data.s_range
    return SLProblem(one, q, one, s0, s1, BC.parse(bc), BC.parse(bc_right or bc),
                     label=f"liouville eps={eps!r} mu={mu!r}")
