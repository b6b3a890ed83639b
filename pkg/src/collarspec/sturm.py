"""Regular Sturm-Liouville problems ``-(p u')' + q u = lam w u``.

Eigenvalue counting uses the Prufer phase: with ``u = r sin(theta)`` and
``p u' = r cos(theta)`` the phase obeys

    theta' = cos(theta)^2 / p + (lam w - q) sin(theta)^2,

which is increasing in ``lam`` and crosses multiples of pi only upwards, so
the terminal phase counts eigenvalues exactly. The independent check is a
three-point finite-difference discretisation (:func:`matrix_oracle`).
"""

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import eigh_tridiagonal

from . import fastphase
from .odeint import IntegrationError, integrate

__all__ = [
    "BC",
    "SLProblem",
    "EigenSolution",
    "NotAnEigenvalueError",
    "BracketError",
    "IntegrationError",
    "prufer_phase",
    "count_eigenvalues",
    "kth_eigenvalue",
    "eigenvalues_below",
    "SplitBracket",
    "split_bracket",
    "eigenfunction",
    "shot_solution",
    "matrix_oracle",
    "oracle_modes",
    "richardson_oracle",
]

LAMBDA_MAX = 1e8
K_MAX = 100_000
GUESS_WIDTH = 1e-6


class BC(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())

    @property
    def launch(self):
        """Prufer angle at the left endpoint."""
        return 0.0 if self is BC.DIRICHLET else 0.5 * math.pi

    @property
    def target(self):
        """Smallest admissible terminal angle at the right endpoint."""
        return math.pi if self is BC.DIRICHLET else 0.5 * math.pi


class NotAnEigenvalueError(ValueError):
    """Shooting from both ends fails to match at any grid node."""


class BracketError(RuntimeError):
    """No bracket for the requested eigenvalue below ``LAMBDA_MAX``."""


@dataclass(frozen=True)
class SLProblem:
    """``-(p u')' + q u = lam w u`` on ``[t0, t1]``.

    ``p``, ``q``, ``w`` are scalar callables. ``coeffs``, if given, returns
    ``(p, q, w)`` at once and is used on the hot path. ``kernel`` describes
    power-law coefficients for the compiled phase integrator (see
    :mod:`collarspec.fastphase`). ``label`` is free-form provenance (e.g.
    the fiber mode a radial problem came from).
    """

    p: Callable[[float], float]
    q: Callable[[float], float]
    w: Callable[[float], float]
    t0: float
    t1: float
    bc_left: BC = BC.DIRICHLET
    bc_right: BC = BC.DIRICHLET
    label: str = ""
    coeffs: Optional[Callable[[float], tuple]] = None
    kernel: Optional[tuple] = None

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise ValueError(f"need t0 < t1, got [{self.t0}, {self.t1}]")
        object.__setattr__(self, "bc_left", BC.parse(self.bc_left))
        object.__setattr__(self, "bc_right", BC.parse(self.bc_right))

    def without_kernel(self):
        """Copy that always uses the pure Python integration path."""
        return dataclasses.replace(self, kernel=None)

    def with_bc(self, bc_left, bc_right=None):
        bc_right = bc_left if bc_right is None else bc_right
        return SLProblem(self.p, self.q, self.w, self.t0, self.t1,
                         BC.parse(bc_left), BC.parse(bc_right), self.label,
                         self.coeffs, self.kernel)

    def restricted(self, t0, t1, bc_left, bc_right):
        """The same coefficients on ``[t0, t1]`` with new end conditions."""
        return SLProblem(self.p, self.q, self.w, t0, t1, BC.parse(bc_left),
                         BC.parse(bc_right), self.label, self.coeffs,
                         self.kernel)

    def shifted(self, c):
        """Same problem with ``q`` replaced by ``q + c w``."""
        p, q, w = self.p, self.q, self.w
        return SLProblem(p, lambda t: q(t) + c * w(t), w, self.t0, self.t1,
                         self.bc_left, self.bc_right, self.label)

    def sample(self, t):
        """Coefficient arrays ``(p, q, w)`` at the points ``t``."""
        t = np.asarray(t, dtype=float)
        p = np.array([self.p(x) for x in t.ravel()]).reshape(t.shape)
        q = np.array([self.q(x) for x in t.ravel()]).reshape(t.shape)
        w = np.array([self.w(x) for x in t.ravel()]).reshape(t.shape)
        return p, q, w


@dataclass
class EigenSolution:
    """Sampled eigenfunction with unit ``w``-weighted L2 norm."""

    lam: float
    t: np.ndarray
    u: np.ndarray
    du: np.ndarray
    match_point: float = float("nan")
    mismatch: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def samples(self):
        return list(zip(self.t, self.u, self.du))


class _Coefficients:
    """``1/p`` and ``lam w - q`` with a one-entry cache keyed on ``t``.

    Newton iterations inside a stage re-evaluate at the same abscissa, so
    the cache removes most coefficient calls.
    """

    __slots__ = ("p", "q", "w", "coeffs", "lam", "_t", "_ip", "_k")

    def __init__(self, problem, lam):
        self.p, self.q, self.w = problem.p, problem.q, problem.w
        self.coeffs = problem.coeffs
        self.lam = lam
        self._t = None

    def __call__(self, t):
        if t != self._t:
            if self.coeffs is not None:
                p, q, w = self.coeffs(t)
            else:
                p, q, w = self.p(t), self.q(t), self.w(t)
            self._ip = 1.0 / p
            self._k = self.lam * w - q
            self._t = t
        return self._ip, self._k

    def rhs(self, t, theta):
        ip, k = self(t)
        c = math.cos(theta)
        s = math.sin(theta)
        return ip * c * c + k * s * s

    def jac(self, t, theta):
        ip, k = self(t)
        return math.sin(2.0 * theta) * (k - ip)

    def log_amplitude(self, t, theta):
        ip, k = self(t)
        return (ip - k) * math.sin(theta) * math.cos(theta)


def prufer_phase(problem, lam, rtol=1e-10, atol=None, reverse=False):
    """Terminal Prufer angle of the solution launched from one end.

    With ``reverse=False`` the solution starts at ``t0`` from the left
    boundary condition and the angle at ``t1`` is returned; otherwise it
    starts at ``t1`` from the right boundary condition and the angle at
    ``t0`` is returned.
    """
    atol = rtol if atol is None else atol
    if reverse:
        a, b = problem.t1, problem.t0
        theta0 = problem.bc_right.target
    else:
        a, b = problem.t0, problem.t1
        theta0 = problem.bc_left.launch
    if problem.kernel is not None:
        ys, _ = fastphase.run(problem.kernel, lam, a, theta0, b, rtol, atol)
        return float(ys[-1])
    coef = _Coefficients(problem, lam)
    theta, _ = integrate(coef.rhs, coef.jac, a, theta0, b, rtol=rtol,
                         atol=atol)
    return theta


def _count_from_phase(theta, target):
    n = math.floor((theta - target) / math.pi) + 1
    return max(n, 0)


def count_eigenvalues(problem, lam, rtol=1e-10):
    """Number of eigenvalues ``<= lam``.

    Raises
    ------
    IntegrationError
        If the phase integration stalls (the exception carries ``t``).
    """
    theta = prufer_phase(problem, lam, rtol=rtol)
    return _count_from_phase(theta, problem.bc_right.target)


def _phase_mismatch(problem, lam, k, rtol):
    theta = prufer_phase(problem, lam, rtol=rtol)
    return theta - (problem.bc_right.target + (k - 1) * math.pi)


def kth_eigenvalue(problem, k, tol=1e-10, rtol=1e-10, lam_max=LAMBDA_MAX,
                   guess=None):
    """The ``k``-th eigenvalue (``k = 1`` is the lowest).

    The bracket grows by doubling from ``[0, 1]`` (downwards as well when
    the potential allows negative eigenvalues), or outwards from
    ``guess -+ 1e-6 max(1, |guess|)`` when an estimate is supplied. Inside it the terminal
    phase mismatch is monotone; bisection steps are interleaved with
    Illinois (modified regula falsi) steps, and the bracket is kept until
    its width is at most ``tol``. The midpoint is returned.
    """
    if k < 1:
        raise ValueError("k is 1-based")
    if k > K_MAX:
        raise BracketError(f"k={k} exceeds safeguard {K_MAX}")
    if guess is not None and math.isfinite(guess):
        lo, hi, f_lo, f_hi = _guess_bracket(problem, k, guess, rtol, lam_max)
        if f_lo < 0.0 <= f_hi:
            return _refine(problem, k, lo, hi, f_lo, f_hi, tol, rtol)
    lo, hi = 0.0, 1.0
    f_lo = _phase_mismatch(problem, lo, k, rtol)
    while f_lo >= 0.0:
        hi, lo = lo, (2.0 * lo if lo < 0 else -1.0)
        f_lo = _phase_mismatch(problem, lo, k, rtol)
        if lo < -lam_max:
            raise BracketError(f"no lower bracket for k={k} above {-lam_max}")
    f_hi = _phase_mismatch(problem, hi, k, rtol)
    while f_hi < 0.0:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        if hi > lam_max:
            raise BracketError(f"eigenvalue {k} not bracketed below {lam_max}")
        f_hi = _phase_mismatch(problem, hi, k, rtol)
    return _refine(problem, k, lo, hi, f_lo, f_hi, tol, rtol)


def _guess_bracket(problem, k, guess, rtol, lam_max):
    """Expand ``guess -+ delta`` geometrically until the mismatch changes sign."""
    delta = GUESS_WIDTH * max(1.0, abs(guess))
    lo, hi = guess - delta, guess + delta
    f_hi = None
    for _ in range(60):
        f_lo = _phase_mismatch(problem, lo, k, rtol)
        if f_lo < 0.0:
            break
        hi, f_hi, lo = lo, f_lo, lo - delta
        delta *= 16.0
    for _ in range(60):
        if f_hi is None:
            f_hi = _phase_mismatch(problem, hi, k, rtol)
        if f_hi >= 0.0 or hi > lam_max:
            break
        lo, f_lo, hi, f_hi = hi, f_hi, hi + delta, None
        delta *= 16.0
    return lo, hi, f_lo, f_hi


def _refine(problem, k, lo, hi, f_lo, f_hi, tol, rtol):
    # Illinois iteration on the bracket, with a bisection whenever three
    # probes fail to halve it. Once the secant model pins the root to within
    # tol/4 of the latest probe, the next probe is placed just across it so
    # the bracket closes at once.
    fa, fb = f_lo, f_hi
    side = 0
    ref_width, since = hi - lo, 0
    last, closing = None, False
    while hi - lo > tol:
        x = None
        if since >= 3:
            x = 0.5 * (lo + hi)
        elif last is not None and not closing:
            xl, fl = last
            slope = (f_hi - f_lo) / (hi - lo)
            if slope > 0 and abs(fl / slope) < 0.25 * tol:
                if fl < 0.0:
                    x = min(xl + 0.5 * tol, hi - 0.25 * tol)
                else:
                    x = max(xl - 0.5 * tol, lo + 0.25 * tol)
                closing = True
        else:
            closing = False
        if x is None:
            x = (lo * fb - hi * fa) / (fb - fa)
            x = min(max(x, lo + 0.25 * tol), hi - 0.25 * tol)
        fx = _phase_mismatch(problem, x, k, rtol)
        last = (x, fx)
        if fx < 0.0:
            lo, fa, f_lo = x, fx, fx
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            hi, fb, f_hi = x, fx, fx
            if side == 1:
                fa *= 0.5
            side = 1
        since += 1
        if hi - lo <= 0.5 * ref_width:
            ref_width, since = hi - lo, 0
    return 0.5 * (lo + hi)


def eigenvalues_below(problem, lam, tol=1e-10, rtol=1e-10):
    """All eigenvalues ``<= lam`` in ascending order."""
    n = count_eigenvalues(problem, lam, rtol=rtol)
    return [kth_eigenvalue(problem, k, tol=tol, rtol=rtol)
            for k in range(1, n + 1)]


@dataclass
class SplitBracket:
    """Eigenvalues of a problem bracketed by decoupling it at ``split``.

    ``lower[k]`` merges the two halves with Neumann conditions at the split
    and ``upper[k]`` with Dirichlet conditions; by min-max the ``k``-th
    eigenvalue of the whole problem lies in ``[lower[k], upper[k]]``.
    """

    split: float
    lower: np.ndarray
    upper: np.ndarray
    values: np.ndarray
    certified: np.ndarray


def split_bracket(problem, split, n, tol=1e-10, rtol=1e-10, guesses=None):
    """Lowest ``n`` eigenvalues via Dirichlet-Neumann decoupling at ``split``.

    Where the two bounds agree to within ``tol`` their midpoint is returned
    and flagged as certified; otherwise the whole problem is solved directly
    for that index, seeded with the bracket midpoint. This is effective when
    the eigenfunctions are exponentially small at ``split`` (a tunnelling
    barrier between two wells), where a direct solve only sees a near jump
    of the phase.
    """
    if not problem.t0 < split < problem.t1:
        raise ValueError("split must lie strictly inside the interval")
    halves = {}
    for bc in (BC.NEUMANN, BC.DIRICHLET):
        left = problem.restricted(problem.t0, split, problem.bc_left, bc)
        right = problem.restricted(split, problem.t1, bc, problem.bc_right)
        vals = []
        for part in (left, right):
            for j in range(n):
                g = None
                if guesses is not None:
                    g = guesses[bc][len(vals)] if len(guesses[bc]) > len(vals) else None
                vals.append(kth_eigenvalue(part, j + 1, tol=tol, rtol=rtol, guess=g))
        halves[bc] = np.sort(np.array(vals))[:n]
    lower, upper = halves[BC.NEUMANN], halves[BC.DIRICHLET]
    ok = (upper - lower) <= tol
    values = 0.5 * (lower + upper)
    for k in np.flatnonzero(~ok):
        values[k] = kth_eigenvalue(problem, int(k) + 1, tol=tol, rtol=rtol,
                                   guess=values[k])
    return SplitBracket(float(split), lower, upper, values, ok)


def _shoot(problem, lam, grid, reverse, rtol):
    """Prufer angle and log-amplitude of a one-sided shot at every node."""
    coef = _Coefficients(problem, lam)
    n = len(grid)
    theta = np.empty(n)
    logr = np.empty(n)
    if reverse:
        order = range(n - 1, -1, -1)
        t_start, t_end = problem.t1, problem.t0
        theta0 = problem.bc_right.target
    else:
        order = range(n)
        t_start, t_end = problem.t0, problem.t1
        theta0 = problem.bc_left.launch
    nodes = [grid[i] for i in order]
    inner = [x for x in nodes if x != t_start and x != t_end]
    out = iter(order)
    seen = []

    def record(t, y, z):
        seen.append((y, z))

    if nodes[0] == t_start:
        seen.append((theta0, 0.0))
    if problem.kernel is not None:
        ys, zs = fastphase.run(problem.kernel, lam, t_start, theta0, t_end,
                               rtol, rtol, stops=inner)
        seen.extend(zip(ys[:-1], zs[:-1]))
        y1, z1 = ys[-1], zs[-1]
    else:
        y1, z1 = integrate(coef.rhs, coef.jac, t_start, theta0, t_end,
                           rtol=rtol, atol=rtol, aux=coef.log_amplitude,
                           stops=inner, on_stop=record)
    if nodes[-1] == t_end:
        seen.append((y1, z1))
    for i, (y, z) in zip(out, seen):
        theta[i] = y
        logr[i] = z
    return theta, logr


def eigenfunction(problem, lam, grid=None, match=None, match_tol=1e-6,
                  rtol=1e-11):
    """Sampled eigenfunction for the eigenvalue ``lam``.

    Both ends are shot towards each other in Prufer variables. The shots
    are glued at ``match`` if given, otherwise at the node where their
    phases agree (``|sin(dtheta)| <= match_tol``) and the product of their
    amplitudes is largest, which keeps each shot on the side where it is
    integrated in the stable direction.

    The result has unit ``w``-weighted L2 norm (Simpson rule on ``grid``)
    and is oriented so that ``u' > 0`` (Dirichlet) or ``u > 0`` (Neumann)
    at the left endpoint.

    Raises
    ------
    NotAnEigenvalueError
        If no node satisfies the phase-matching tolerance.
    """
    if grid is None:
        grid = np.linspace(problem.t0, problem.t1, 2001)
    grid = np.asarray(grid, dtype=float)
    if grid[0] < problem.t0 or grid[-1] > problem.t1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be increasing inside [t0, t1]")
    thL, lrL = _shoot(problem, lam, grid, False, rtol)
    thR, lrR = _shoot(problem, lam, grid, True, rtol)
    mism = np.abs(np.sin(thL - thR))
    if match is None:
        ok = np.flatnonzero(mism <= match_tol)
        if ok.size == 0:
            raise NotAnEigenvalueError(
                f"lam={lam!r}: best phase mismatch {mism.min():.3e} "
                f"exceeds {match_tol:.1e}")
        m = ok[np.argmax(lrL[ok] + lrR[ok])]
    else:
        m = int(np.argmin(np.abs(grid - match)))
        if mism[m] > match_tol:
            raise NotAnEigenvalueError(
                f"lam={lam!r}: phase mismatch {mism[m]:.3e} at t={grid[m]!r}")
    sign = 1.0 if math.cos(thL[m] - thR[m]) > 0 else -1.0
    shift = lrL[m] - lrR[m]
    logr = np.where(np.arange(grid.size) <= m, lrL, lrR + shift)
    theta = np.where(np.arange(grid.size) <= m, thL, thR)
    sgn = np.where(np.arange(grid.size) <= m, 1.0, sign)
    amp = np.exp(logr - logr.max())
    u = sgn * amp * np.sin(theta)
    pdu = sgn * amp * np.cos(theta)
    p, _, w = problem.sample(grid)
    du = pdu / p
    norm = math.sqrt(simpson(u * u * w, x=grid))
    return EigenSolution(lam=lam, t=grid, u=u / norm, du=du / norm,
                         match_point=float(grid[m]), mismatch=float(mism[m]))


def shot_solution(problem, lam, grid, from_right=False, rtol=1e-11):
    """Solution satisfying one boundary condition, sampled on ``grid``.

    The shot starts at ``t1`` (``from_right``) or ``t0`` and is only
    integrated across ``grid``, so it stays accurate when the other end lies
    in a region where the solution is exponentially suppressed. Returns
    ``(u, du)`` scaled to ``max |u| = 1``; for an eigenvalue ``lam`` this is
    the eigenfunction up to a constant.
    """
    grid = np.asarray(grid, dtype=float)
    if grid[0] < problem.t0 or grid[-1] > problem.t1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be increasing inside [t0, t1]")
    if from_right:
        sub = problem.restricted(grid[0], problem.t1, BC.DIRICHLET, problem.bc_right)
    else:
        sub = problem.restricted(problem.t0, grid[-1], problem.bc_left, BC.DIRICHLET)
    theta, logr = _shoot(sub, lam, grid, from_right, rtol)
    amp = np.exp(logr - logr.max())
    u = amp * np.sin(theta)
    p, _, _ = sub.sample(grid)
    du = amp * np.cos(theta) / p
    scale = np.max(np.abs(u))
    if scale == 0:
        raise NotAnEigenvalueError("shot vanishes on the grid")
    return u / scale, du / scale


def _fd_matrices(problem, n):
    """Symmetric tridiagonal FD pencil ``(diag, off, mass, nodes, keep)``."""
    t = np.linspace(problem.t0, problem.t1, n + 1)
    h = t[1] - t[0]
    mid = 0.5 * (t[:-1] + t[1:])
    pm = np.array([problem.p(x) for x in mid])
    _, q, w = problem.sample(t)
    c = np.ones(n + 1)
    c[0] = c[-1] = 0.5
    diag = np.zeros(n + 1)
    diag[:-1] += pm / h
    diag[1:] += pm / h
    diag += c * h * q
    off = -pm / h
    mass = c * h * w
    keep = np.ones(n + 1, dtype=bool)
    if problem.bc_left is BC.DIRICHLET:
        keep[0] = False
    if problem.bc_right is BC.DIRICHLET:
        keep[-1] = False
    idx = np.flatnonzero(keep)
    d = diag[idx]
    e = off[idx[:-1]]
    m = mass[idx]
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))
            and np.all(np.isfinite(m))):
        raise FloatingPointError("finite-difference pencil has non-finite entries")
    s = 1.0 / np.sqrt(m)
    return d * s * s, e * s[:-1] * s[1:], s, t, idx


def matrix_oracle(problem, n=2000):
    """Eigenvalues of the three-point FD discretisation, ascending.

    ``n`` is the number of grid intervals; ``p`` is taken at cell midpoints
    and ``q``, ``w`` at nodes. Neumann ends keep the boundary node with a
    half cell (trapezoid mass), Dirichlet ends drop it.
    """
    if n < 16:
        raise ValueError("n must be at least 16")
    d, e, _, _, _ = _fd_matrices(problem, n)
    return eigh_tridiagonal(d, e, eigvals_only=True)


def oracle_modes(problem, n, count):
    """Lowest ``count`` oracle eigenpairs on the full node grid.

    Returns ``(values, nodes, vectors)`` with vectors of shape
    ``(count, n + 1)`` normalised in the discrete ``w``-weighted norm and
    zero at Dirichlet ends.
    """
    d, e, s, t, idx = _fd_matrices(problem, n)
    vals, vecs = eigh_tridiagonal(d, e, select="i",
                                  select_range=(0, count - 1))
    full = np.zeros((count, t.size))
    full[:, idx] = (vecs * s[:, None]).T
    return vals, t, full


def richardson_oracle(problem, n, count):
    """Second-order Richardson extrapolation of the lowest ``count`` values
    from grids with ``n`` and ``2n`` intervals."""
    coarse = matrix_oracle(problem, n)[:count]
    fine = matrix_oracle(problem, 2 * n)[:count]
    return (4.0 * fine - coarse) / 3.0
