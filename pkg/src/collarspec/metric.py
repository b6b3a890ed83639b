"""Warped collar metrics ``rho^{2a} dt^2 + rho^{2b} h`` and their radial
Sturm-Liouville coefficients.

Separating the fiber Laplacian, the mode with fiber eigenvalue ``mu``
satisfies ``-L u + mu rho^{-2b} u = lam u`` where
``L = rho^{-a-bd} d/dt rho^{-a+bd} d/dt``. In self-adjoint form that is
``-(p u')' + q u = lam w u`` with

    p = rho^{-a+bd},   w = rho^{a+bd},   q = mu rho^{a+bd-2b}.
"""

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import fastphase
from .sturm import BC, SLProblem

__all__ = [
    "ConfigError",
    "ProfileKind",
    "ProfileRho",
    "FiberSpectrum",
    "CollarConfig",
    "make_profile",
    "frozen_profile",
    "homogeneity_constants",
    "sl_coefficients",
    "max_rho",
]


class ConfigError(ValueError):
    """A parameter combination violates a module precondition."""


class ProfileKind(str, Enum):
    HYPERBOLIC = "hyperbolic"
    LINEAR_PAIR = "linear-pair"
    CUSTOM = "custom-analytic"


def _smoothstep(x):
    """C^3 step from 0 (x <= -1) to 1 (x >= 1) and its two derivatives."""
    if x <= -1.0:
        return 0.0, 0.0, 0.0
    if x >= 1.0:
        return 1.0, 0.0, 0.0
    y = 0.5 * (x + 1.0)
    y2 = y * y
    y3 = y2 * y
    s = y3 * y * (35.0 - 84.0 * y + 70.0 * y2 - 20.0 * y3)
    ds = 140.0 * y3 * (1.0 - y) ** 3
    d2s = 420.0 * y2 * (1.0 - y) ** 2 * (1.0 - 2.0 * y)
    return s, 0.5 * ds, 0.25 * d2s


@dataclass(frozen=True)
class ProfileRho:
    """Degree-one homogeneous profile ``rho(eps, t)``.

    ``hyperbolic`` with optional scale ``kappa``: ``kappa sqrt(eps^2 + t^2)``.
    ``linear-pair`` with slopes ``(c_minus, c_plus)``:
    ``sqrt(eps^2 + (c(t/eps) t)^2)`` where ``c`` switches smoothly from
    ``c_minus`` to ``c_plus`` on ``|t| <= eps``; at ``eps = 0`` this is
    ``c_pm |t|``. ``custom-analytic`` carries user callables
    ``(rho, rho_t, rho_tt)``, each ``f(eps, t)``.
    """

    kind: ProfileKind
    params: Tuple[float, ...] = ()
    funcs: Optional[Tuple[Callable, Callable, Callable]] = None
    homogeneous: bool = True

    def rho(self, eps, t):
        return self.derivs(eps, t)[0]

    def rho_t(self, eps, t):
        return self.derivs(eps, t)[1]

    def rho_tt(self, eps, t):
        return self.derivs(eps, t)[2]

    def derivs(self, eps, t):
        """``(rho, d rho/dt, d^2 rho/dt^2)`` at one point."""
        kind = self.kind
        if kind is ProfileKind.HYPERBOLIC:
            kappa = self.params[0] if self.params else 1.0
            r = math.hypot(eps, t)
            if r == 0.0:
                # the puncture: rho vanishes, derivatives are undefined
                return 0.0, math.nan, math.inf
            return kappa * r, kappa * t / r, kappa * (eps / r) ** 2 / r
        if kind is ProfileKind.LINEAR_PAIR:
            cm, cp = self.params
            if eps == 0.0:
                c = cp if t > 0 else cm
                return c * abs(t), math.copysign(c, t), 0.0
            x = t / eps
            s, ds, d2s = _smoothstep(x)
            dc = cp - cm
            c = cm + dc * s
            c1 = dc * ds
            c2 = dc * d2s
            g = c * t
            g1 = c + c1 * x
            g2 = (2.0 * c1 + c2 * x) / eps
            r = math.hypot(eps, g)
            r1 = g1 * (g / r)
            r2 = (g1 * g1 + g * g2 - r1 * r1) / r
            return r, r1, r2
        f, f1, f2 = self.funcs
        return f(eps, t), f1(eps, t), f2(eps, t)

    def rho_array(self, eps, t):
        return np.array([self.rho(eps, x) for x in np.ravel(t)]).reshape(np.shape(t))


def make_profile(kind, params=()):
    """Instantiate a built-in profile.

    >>> make_profile("hyperbolic").rho(3.0, 4.0)
    5.0
    """
    try:
        kind = ProfileKind(kind)
    except ValueError:
        raise ConfigError(f"unknown profile kind {kind!r}") from None
    params = tuple(float(v) for v in params)
    if kind is ProfileKind.HYPERBOLIC:
        if len(params) > 1:
            raise ConfigError("hyperbolic takes at most one scale parameter")
        if params and params[0] <= 0:
            raise ConfigError("hyperbolic scale must be positive")
    elif kind is ProfileKind.LINEAR_PAIR:
        if len(params) != 2:
            raise ConfigError("linear-pair needs slopes (c_minus, c_plus)")
        if min(params) <= 0:
            raise ConfigError(f"linear-pair slopes must be positive, got {params}")
    else:
        raise ConfigError("custom-analytic profiles are built with "
                          "ProfileRho(kind, funcs=(rho, rho_t, rho_tt))")
    return ProfileRho(kind, params)


def frozen_profile(profile, eps0):
    """The eps-independent family ``rho(eps0, t)`` (not homogeneous)."""
    return ProfileRho(
        ProfileKind.CUSTOM,
        (float(eps0),),
        funcs=(lambda e, t: profile.rho(eps0, t),
               lambda e, t: profile.rho_t(eps0, t),
               lambda e, t: profile.rho_tt(eps0, t)),
        homogeneous=False,
    )


def homogeneity_constants(profile):
    """``(c_minus, c_plus) = (rho(0, -1), rho(0, 1))``."""
    cm = profile.rho(0.0, -1.0)
    cp = profile.rho(0.0, 1.0)
    if not (math.isfinite(cm) and math.isfinite(cp)):
        raise ConfigError("profile is not finite at (0, +-1)")
    if cm <= 0 or cp <= 0:
        raise ConfigError(f"homogeneity constants must be positive, got {(cm, cp)}")
    return cm, cp


class FiberSource(str, Enum):
    CIRCLE = "circle"
    FLAT_TORUS = "flat-torus"
    EXPLICIT = "explicit-list"


@dataclass(frozen=True)
class FiberSpectrum:
    """Spectrum of the cross-section Laplacian, enumerated on demand.

    ``circle``: params ``(length,)``, eigenvalues ``(2 pi k / length)^2``.
    ``flat-torus``: params are the side lengths of a rectangular torus.
    ``explicit-list``: ``entries`` is taken as the complete spectrum up to
    ``mu_limit`` (default: its largest entry).
    """

    source: FiberSource
    params: Tuple[float, ...] = ()
    entries: Tuple[Tuple[float, int], ...] = ()
    mu_limit: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "source", FiberSource(self.source))
        if self.source is FiberSource.EXPLICIT:
            ent = tuple((float(m), int(k)) for m, k in self.entries)
            if not ent or ent[0] != (0.0, 1):
                raise ConfigError("fiber spectrum must start with (0, 1)")
            if len(ent) > 1 and ent[1][0] <= 0:
                raise ConfigError("mu_1 must be positive")
            if any(b[0] < a[0] for a, b in zip(ent, ent[1:])):
                raise ConfigError("fiber spectrum must be nondecreasing")
            if any(k < 1 for _, k in ent):
                raise ConfigError("multiplicities must be positive")
            object.__setattr__(self, "entries", ent)
            if self.mu_limit == math.inf:
                object.__setattr__(self, "mu_limit", ent[-1][0])
        elif min(self.params, default=0.0) <= 0 or not self.params:
            raise ConfigError(f"{self.source.value} needs positive lengths")
        elif self.source is FiberSource.CIRCLE and len(self.params) != 1:
            raise ConfigError("circle takes a single circumference")

    @classmethod
    def circle(cls, length=1.0):
        return cls(FiberSource.CIRCLE, (float(length),))

    @classmethod
    def flat_torus(cls, lengths):
        return cls(FiberSource.FLAT_TORUS, tuple(float(x) for x in lengths))

    @classmethod
    def explicit(cls, entries, mu_limit=math.inf):
        return cls(FiberSource.EXPLICIT, (), tuple(entries), mu_limit)

    @property
    def dim(self):
        if self.source is FiberSource.CIRCLE:
            return 1
        if self.source is FiberSource.FLAT_TORUS:
            return len(self.params)
        return None

    @property
    def mu1(self):
        modes = self.modes(self._probe_limit())
        return modes[1][0]

    def _probe_limit(self):
        if self.source is FiberSource.EXPLICIT:
            return self.mu_limit
        return (2.0 * math.pi / min(self.params)) ** 2 * 1.0000001

    def modes(self, mu_max):
        """``[(mu_k, multiplicity_k), ...]`` with ``mu_k <= mu_max``."""
        if self.source is FiberSource.EXPLICIT:
            if mu_max > self.mu_limit:
                raise ConfigError(
                    f"explicit fiber list is complete only up to {self.mu_limit}")
            return [e for e in self.entries if e[0] <= mu_max]
        if self.source is FiberSource.CIRCLE:
            (length,) = self.params
            kmax = int(math.floor(math.sqrt(max(mu_max, 0.0)) * length / (2 * math.pi)))
            out = [(0.0, 1)]
            out += [((2 * math.pi * k / length) ** 2, 2) for k in range(1, kmax + 1)]
            return [e for e in out if e[0] <= mu_max]
        freqs = [2 * math.pi / length for length in self.params]
        ranges = [range(-int(math.sqrt(max(mu_max, 0.0)) / f) - 1,
                        int(math.sqrt(max(mu_max, 0.0)) / f) + 2) for f in freqs]
        vals = []
        for n in itertools.product(*ranges):
            mu = sum((ni * f) ** 2 for ni, f in zip(n, freqs))
            if mu <= mu_max:
                vals.append(mu)
        vals.sort()
        out = []
        for mu in vals:
            if out and abs(mu - out[-1][0]) <= 1e-12 * max(1.0, mu):
                out[-1] = (out[-1][0], out[-1][1] + 1)
            else:
                out.append((mu, 1))
        return out


@dataclass(frozen=True)
class CollarConfig:
    """Exponents, fiber and profile of a collar ``I x M``."""

    a: float
    b: float
    d: int
    interval: Tuple[float, float]
    profile: ProfileRho
    fiber: FiberSpectrum

    def __post_init__(self):
        if not self.a <= -1:
            raise ConfigError(f"a <= -1 is required (got a={self.a})")
        if not self.b > 0:
            raise ConfigError(f"b > 0 is required (got b={self.b})")
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"fiber dimension d must be a positive integer (got {self.d})")
        lo, hi = self.interval
        if not lo < 0 < hi:
            raise ConfigError(f"interval must satisfy t- < 0 < t+ (got {self.interval})")
        if self.fiber.dim is not None and self.fiber.dim != self.d:
            raise ConfigError(f"fiber dimension {self.fiber.dim} does not match d={self.d}")
        object.__setattr__(self, "interval", (float(lo), float(hi)))

    @property
    def bd(self):
        return self.b * self.d

    def side_interval(self, side, t_cut):
        """``[t_cut, t+]`` for side ``+`` and ``[t-, -t_cut]`` for side ``-``."""
        lo, hi = self.interval
        if side in ("+", "plus", 1):
            return (t_cut, hi)
        return (lo, -t_cut)


def sl_coefficients(config, eps, mu, bc=BC.DIRICHLET, interval=None, bc_right=None):
    """Radial problem of the fiber mode ``mu`` at parameter ``eps``.

    Raises
    ------
    ConfigError
        If ``eps = 0`` and the interval contains ``t = 0`` (homogeneous
        profiles only; an eps-independent profile is regular there).
    """
    t0, t1 = config.interval if interval is None else interval
    if eps < 0:
        raise ConfigError("eps must be nonnegative")
    if eps == 0 and config.profile.homogeneous and t0 <= 0.0 <= t1:
        raise ConfigError("eps = 0 makes the coefficients singular at t = 0; "
                          "restrict the interval to one side")
    rho = config.profile.rho
    a, b, bd = config.a, config.b, config.bd
    ep, ew, eq = -a + bd, a + bd, a + bd - 2 * b
    mu = float(mu)

    def p(t):
        return rho(eps, t) ** ep

    def w(t):
        return rho(eps, t) ** ew

    if mu == 0.0:
        def q(t):
            return 0.0
    else:
        def q(t):
            return mu * rho(eps, t) ** eq

    def coeffs(t):
        r = rho(eps, t)
        rw = r ** ew
        return r ** ep, (mu * r ** eq if mu else 0.0), rw

    bc = BC.parse(bc)
    return SLProblem(p, q, w, t0, t1, bc, BC.parse(bc_right or bc),
                     label=f"eps={eps!r} mu={mu!r}", coeffs=coeffs,
                     kernel=_kernel(config.profile, eps, ep, ew, eq, mu))


def _kernel(profile, eps, ep, ew, eq, mu):
    """Compiled-integrator description for built-in profiles, else None."""
    if profile.kind is ProfileKind.HYPERBOLIC:
        par = np.array([profile.params[0] if profile.params else 1.0])
        kind = fastphase.HYPERBOLIC
    elif profile.kind is ProfileKind.LINEAR_PAIR:
        par = np.array(profile.params, dtype=float)
        kind = fastphase.LINEAR_PAIR
    else:
        return None
    return (kind, par, float(eps), float(ep), float(ew), float(eq), float(mu))


def max_rho(config, eps, interval=None, samples=201, tol=1e-12):
    """``max rho(eps, .)`` on the closed interval.

    Coarse sampling locates the best cell, golden-section search refines
    inside its neighbours, and the endpoints are always candidates.
    """
    lo, hi = config.interval if interval is None else interval
    rho = config.profile.rho
    grid = np.linspace(lo, hi, samples)
    vals = np.array([rho(eps, x) for x in grid])
    best = max(vals[0], vals[-1])
    i = int(np.argmax(vals))
    if 0 < i < samples - 1:
        a, b = grid[i - 1], grid[i + 1]
        g = (math.sqrt(5.0) - 1.0) / 2.0
        c, d = b - g * (b - a), a + g * (b - a)
        fc, fd = rho(eps, c), rho(eps, d)
        while b - a > tol * max(1.0, abs(a)):
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - g * (b - a)
                fc = rho(eps, c)
            else:
                a, c, fc = c, d, fd
                d = a + g * (b - a)
                fd = rho(eps, d)
        best = max(best, fc, fd, vals[i])
    return float(best)
