"""Collar spectrum assembled from fiber-mode channels.

Each fiber eigenvalue ``mu_k`` (multiplicity ``m_k``) contributes the
eigenvalues of its radial problem ``m_k`` times. A channel cannot hold
eigenvalues below ``mu_k (max rho)^{-2b}``, which certifies that channels
above ``Lambda (max rho)^{2b}`` are empty.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .metric import ConfigError, homogeneity_constants, max_rho, sl_coefficients
from .sturm import BC, count_eigenvalues, eigenvalues_below, kth_eigenvalue

__all__ = [
    "Channel",
    "SpectrumEntry",
    "ModeIndexedSpectrum",
    "EssentialSpectrum",
    "collar_spectrum",
    "collar_count",
    "perp_spectrum",
    "perp_ladder",
    "channel_ladder",
    "essential_spectrum_bottom",
]


@dataclass
class Channel:
    """Radial eigenvalues of one fiber mode."""

    mode: int
    mu: float
    multiplicity: int
    eigenvalues: List[float]

    @property
    def count(self):
        return self.multiplicity * len(self.eigenvalues)


@dataclass(frozen=True, order=True)
class SpectrumEntry:
    lam: float
    mode: int
    index: int
    mu: float = field(compare=False)


@dataclass
class ModeIndexedSpectrum:
    """Per-mode eigenvalues ``<= lam_max`` and their merged list.

    ``merged`` repeats each eigenvalue by its fiber multiplicity and is sorted
    by ``(lam, mode, index)``; ``index`` is the 1-based position within the
    channel.
    """

    eps: float
    lam_max: float
    bc: BC
    channels: List[Channel]
    rho_max: float
    skipped_from: float
    notes: List[str] = field(default_factory=list)

    @property
    def merged(self):
        out = []
        for ch in self.channels:
            for j, lam in enumerate(ch.eigenvalues, start=1):
                out.extend([SpectrumEntry(lam, ch.mode, j, ch.mu)] * ch.multiplicity)
        out.sort()
        return out

    @property
    def total(self):
        return sum(ch.count for ch in self.channels)

    def values(self):
        return np.array([e.lam for e in self.merged])

    def rows(self):
        """``(lam, mode_k, mu, channel_index, bc)`` rows of the merged list."""
        return [(e.lam, e.mode, e.mu, e.index, self.bc.value) for e in self.merged]


def _map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _channel_job(args):
    config, eps, k, mu, mult, lam_max, bc, tol, rtol = args
    problem = sl_coefficients(config, eps, mu, bc=bc)
    try:
        vals = eigenvalues_below(problem, lam_max, tol=tol, rtol=rtol)
    except Exception as exc:  # annotate with the channel that failed
        raise type(exc)(f"mode {k} (mu={mu}): {exc}") from exc
    return Channel(k, mu, mult, vals)


def _count_job(args):
    config, eps, k, mu, mult, lam_max, bc, rtol = args
    problem = sl_coefficients(config, eps, mu, bc=bc)
    try:
        return mult * count_eigenvalues(problem, lam_max, rtol=rtol)
    except Exception as exc:
        raise type(exc)(f"mode {k} (mu={mu}): {exc}") from exc


def _modes(config, eps, lam_max, skip_constant):
    rmax = max_rho(config, eps)
    cutoff = lam_max * rmax ** (2 * config.b)
    modes = list(enumerate(config.fiber.modes(cutoff)))
    if skip_constant:
        modes = [m for m in modes if m[1][0] > 0]
    return modes, rmax, cutoff


def collar_spectrum(config, eps, lam_max, bc=BC.DIRICHLET, tol=1e-10, rtol=1e-10,
                    workers=1, skip_constant=False):
    """All collar eigenvalues ``<= lam_max`` at ``eps > 0``."""
    if not eps > 0:
        raise ConfigError("collar_spectrum needs eps > 0; use perp_spectrum "
                          "with t_cut for the cusp limit")
    if not lam_max > 0:
        raise ConfigError("lam_max must be positive")
    bc = BC.parse(bc)
    modes, rmax, cutoff = _modes(config, eps, lam_max, skip_constant)
    jobs = [(config, eps, k, mu, mult, lam_max, bc, tol, rtol)
            for k, (mu, mult) in modes]
    channels = _map(_channel_job, jobs, workers)
    return ModeIndexedSpectrum(eps, lam_max, bc, channels, rmax, cutoff)


def collar_count(config, eps, lam_max, bc=BC.DIRICHLET, rtol=1e-10, workers=1,
                 skip_constant=False):
    """Total count ``N(lam_max)`` with multiplicity (no eigenvalue solves)."""
    bc = BC.parse(bc)
    modes, _, _ = _modes(config, eps, lam_max, skip_constant)
    jobs = [(config, eps, k, mu, mult, lam_max, bc, rtol) for k, (mu, mult) in modes]
    return sum(_map(_count_job, jobs, workers))


def perp_spectrum(config, eps, lam_max, bc=BC.DIRICHLET, tol=1e-10, rtol=1e-10,
                  workers=1, t_cut=1e-4):
    """Spectrum with the constant mode removed.

    At ``eps = 0`` each channel is the union of the two truncated cusp
    problems (Dirichlet at ``+-t_cut``, ``bc`` at the outer ends).
    """
    if eps > 0:
        return collar_spectrum(config, eps, lam_max, bc, tol, rtol, workers,
                               skip_constant=True)
    from .cusp import CuspProblem

    bc = BC.parse(bc)
    modes, rmax, cutoff = _modes(config, 0.0, lam_max, True)
    channels = []
    for k, (mu, mult) in modes:
        vals = []
        for side in ("-", "+"):
            sl = CuspProblem(config, side, mu, t_cut, bc).sl_problem()
            vals += eigenvalues_below(sl, lam_max, tol=tol, rtol=rtol)
        channels.append(Channel(k, mu, mult, sorted(vals)))
    spec = ModeIndexedSpectrum(0.0, lam_max, bc, channels, rmax, cutoff)
    spec.notes.append(f"cusp channels truncated at t_cut={t_cut}")
    return spec


def channel_ladder(config, eps, mu, n, bc=BC.DIRICHLET, tol=1e-10, rtol=1e-10,
                   t_cut=None, guesses=None):
    """Lowest ``n`` eigenvalues of the ``mu`` channel.

    At ``eps = 0`` this is the sorted union of both truncated cusp sides
    (requires ``t_cut``).
    """
    bc = BC.parse(bc)
    if eps > 0:
        sl = sl_coefficients(config, eps, mu, bc=bc)
        out = []
        for j in range(n):
            g = guesses[j] if guesses is not None and j < len(guesses) else None
            out.append(kth_eigenvalue(sl, j + 1, tol=tol, rtol=rtol, guess=g))
        return out
    from .cusp import CuspProblem

    if t_cut is None:
        raise ConfigError("eps = 0 needs t_cut")
    vals = []
    for side in ("-", "+"):
        sl = CuspProblem(config, side, mu, t_cut, bc).sl_problem()
        vals += [kth_eigenvalue(sl, j + 1, tol=tol, rtol=rtol) for j in range(n)]
    return sorted(vals)[:n]


def perp_ladder(config, eps, n, bc=BC.DIRICHLET, tol=1e-10, rtol=1e-10, t_cut=1e-4):
    """Lowest ``n`` eigenvalues of the constant-free spectrum, with
    multiplicity, as ``[(lam, mode), ...]``.

    Channels are added in order of ``mu`` until the ground-state bound
    ``mu (max rho)^{-2b}`` exceeds the current ``n``-th value.
    """
    rmax = max_rho(config, eps)
    out = []
    k = 0
    while True:
        k += 1
        mode = _mode(config, k)
        if mode is None:
            break
        mu, mult = mode
        if len(out) >= n and mu * rmax ** (-2 * config.b) > out[n - 1][0]:
            break
        vals = channel_ladder(config, eps, mu, n, bc, tol, rtol, t_cut)
        out.extend((v, k) for v in vals for _ in range(mult))
        out.sort()
    return out[:n]


def _mode(config, k):
    """The ``k``-th distinct fiber eigenvalue, or None past an explicit list."""
    bound = 1.0
    fiber = config.fiber
    while True:
        try:
            modes = fiber.modes(bound)
        except ConfigError:
            modes = fiber.modes(fiber.mu_limit)
            return modes[k] if k < len(modes) else None
        if len(modes) > k:
            return modes[k]
        bound *= 4.0


@dataclass(frozen=True)
class EssentialSpectrum:
    bottom: float
    regime: str
    sides: Tuple[float, float]


def essential_spectrum_bottom(config):
    """Bottom ``m`` of the essential spectrum at ``eps = 0``.

    ``a = -1``: ``m = min over sides of (c_pm b d / 2)^2`` (marginally
    complete); ``a < -1``: ``m = 0`` (overcomplete).
    """
    if config.a > -1:
        raise ConfigError("essential spectrum classification needs a <= -1")
    cm, cp = homogeneity_constants(config.profile)
    sides = ((cm * config.bd / 2) ** 2, (cp * config.bd / 2) ** 2)
    if config.a == -1:
        return EssentialSpectrum(min(sides), "marginally complete", sides)
    return EssentialSpectrum(0.0, "overcomplete", (0.0, 0.0))
