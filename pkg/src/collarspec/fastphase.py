"""Compiled Prufer integration for power-law radial coefficients.

Radial problems built from the built-in profiles have ``p = rho^ep``,
``w = rho^ew`` and ``q = mu rho^eq``. For those the phase equation is
integrated by a numba-compiled copy of the SDIRK 4(3) scheme in
:mod:`collarspec.odeint` (same tableau, same step control), which removes
the interpreter overhead per stage. Anything else goes through the pure
Python path; the two are cross-checked in the test suite.
"""

import math

import numpy as np
from numba import njit

from . import odeint

HYPERBOLIC = 0
LINEAR_PAIR = 1

_A = np.zeros((5, 5))
for _i, _row in enumerate(odeint.A):
    for _j, _v in enumerate(_row):
        _A[_i, _j] = _v
_C = np.array(odeint.C)
_E = np.array(odeint.E)
_GAMMA = odeint.GAMMA
_SAFETY = odeint.SAFETY
_MAX_GROW = odeint.MAX_GROW
_MIN_SHRINK = odeint.MIN_SHRINK
_NEWTON_MAXIT = odeint.NEWTON_MAXIT
_NEWTON_KAPPA = odeint.NEWTON_KAPPA
_MAX_STEPS = odeint.MAX_STEPS

OK = 0
UNDERFLOW = 1
BUDGET = 2


@njit(cache=True)
def _rho(kind, par, eps, t):
    if kind == HYPERBOLIC:
        return par[0] * math.sqrt(eps * eps + t * t)
    cm = par[0]
    cp = par[1]
    if eps == 0.0:
        return (cp if t > 0 else cm) * abs(t)
    x = t / eps
    if x <= -1.0:
        c = cm
    elif x >= 1.0:
        c = cp
    else:
        y = 0.5 * (x + 1.0)
        y2 = y * y
        y3 = y2 * y
        c = cm + (cp - cm) * y3 * y * (35.0 - 84.0 * y + 70.0 * y2 - 20.0 * y3)
    g = c * t
    return math.sqrt(eps * eps + g * g)


@njit(cache=True)
def _coef(kind, par, eps, ep, ew, eq, mu, lam, t):
    r = _rho(kind, par, eps, t)
    lr = math.log(r)
    ip = math.exp(-ep * lr)
    k = lam * math.exp(ew * lr)
    if mu != 0.0:
        k -= mu * math.exp(eq * lr)
    return ip, k


@njit(cache=True)
def _step(kind, par, eps, ep, ew, eq, mu, lam, t, y, h, tol_scale, ks, kz):
    hg = h * _GAMMA
    pred = y
    Y = y
    for i in range(5):
        ti = t + _C[i] * h
        base = y
        for j in range(i):
            base += h * _A[i, j] * ks[j]
        Y = pred if i > 0 else y
        ip, k = _coef(kind, par, eps, ep, ew, eq, mu, lam, ti)
        ok = False
        for _ in range(_NEWTON_MAXIT):
            c = math.cos(Y)
            s = math.sin(Y)
            G = Y - base - hg * (ip * c * c + k * s * s)
            dY = G / (1.0 - hg * (2.0 * s * c) * (k - ip))
            Y -= dY
            if not math.isfinite(Y):
                return 0.0, 0.0, 0.0, False
            if abs(dY) <= _NEWTON_KAPPA * tol_scale:
                ok = True
                break
        if not ok:
            return 0.0, 0.0, 0.0, False
        kk = (Y - base) / hg
        ks[i] = kk
        kz[i] = (ip - k) * math.sin(Y) * math.cos(Y)
        if i < 4:
            pred = Y + h * (_C[i + 1] - _C[i]) * kk
    err = 0.0
    for i in range(5):
        err += _E[i] * ks[i]
    err *= h
    ip, k = _coef(kind, par, eps, ep, ew, eq, mu, lam, t)
    err /= 1.0 - hg * math.sin(2.0 * y) * (k - ip)
    dz = hg * kz[4]
    for j in range(4):
        dz += h * _A[4, j] * kz[j]
    return Y, dz, err, True


@njit(cache=True)
def integrate_phase(kind, par, eps, ep, ew, eq, mu, lam, t0, y0, t1, rtol, atol,
                    stops):
    """Phase and log-amplitude at each stop and at ``t1``.

    Returns ``(ys, zs, status, t_fail)`` where ``ys[-1], zs[-1]`` belong to
    ``t1`` and the other entries to ``stops`` (in integration order).
    """
    nst = stops.size
    ys = np.empty(nst + 1)
    zs = np.empty(nst + 1)
    ks = np.empty(5)
    kz = np.empty(5)
    span = t1 - t0
    if span == 0.0:
        ys[:] = y0
        zs[:] = 0.0
        return ys, zs, OK, t0
    direction = 1.0 if span > 0 else -1.0
    h = direction * min(1e-3 * abs(span), abs(span))
    t = t0
    y = y0
    z = 0.0
    nsteps = 0
    fac = _MAX_GROW
    for kt in range(nst + 1):
        target = stops[kt] if kt < nst else t1
        while direction * (target - t) > 0.0:
            hstep = h
            last = direction * (t + hstep - target) >= 0.0
            if last:
                hstep = target - t
            while True:
                if t + hstep == t:
                    return ys, zs, UNDERFLOW, t
                scale = atol + rtol * abs(y)
                ynew, dz, err, good = _step(kind, par, eps, ep, ew, eq, mu, lam,
                                            t, y, hstep, scale, ks, kz)
                if not good:
                    hstep *= 0.5
                    last = False
                    continue
                errmax = abs(err) / (atol + rtol * max(abs(y), abs(ynew)))
                fac = _SAFETY * errmax ** -0.25 if errmax > 0 else _MAX_GROW
                if errmax <= 1.0:
                    break
                hstep *= max(_MIN_SHRINK, fac)
                last = False
            t = target if last else t + hstep
            y = ynew
            z += dz
            nsteps += 1
            if nsteps > _MAX_STEPS:
                return ys, zs, BUDGET, t
            h = hstep * min(_MAX_GROW, max(_MIN_SHRINK, fac))
            if last and abs(h) < abs(hstep):
                h = hstep
        ys[kt] = y
        zs[kt] = z
    return ys, zs, OK, t


def run(kernel, lam, t0, y0, t1, rtol, atol, stops=None):
    """Python front end: raises :class:`odeint.IntegrationError` on failure."""
    kind, par, eps, ep, ew, eq, mu = kernel
    st = np.asarray(stops if stops is not None else (), dtype=float)
    ys, zs, status, tf = integrate_phase(kind, par, float(eps), float(ep),
                                         float(ew), float(eq), float(mu),
                                         float(lam), float(t0), float(y0),
                                         float(t1), float(rtol), float(atol), st)
    if status == UNDERFLOW:
        raise odeint.IntegrationError("step size underflow", tf)
    if status == BUDGET:
        raise odeint.IntegrationError("step budget exhausted", tf)
    return ys, zs
