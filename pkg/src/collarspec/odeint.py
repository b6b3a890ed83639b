"""Adaptive embedded SDIRK 4(3) integrator for scalar stiff ODEs.

Five-stage, L-stable, stiffly accurate singly diagonally implicit
Runge-Kutta pair (gamma = 1/4) of Hairer & Wanner, with an embedded
third-order solution for step-size control. Sturm-Liouville phase
equations become stiff wherever the potential exceeds the spectral
parameter; explicit pairs are stability-limited there and non stiffly
accurate linearly implicit pairs suffer order reduction.

The state is a single float. An optional slaved variable ``z`` with
``z' = aux(t, y)`` (independent of ``z``) is carried along: that is how
the Prufer log-amplitude rides on the phase.
"""

import math

GAMMA = 0.25
C = (0.25, 0.75, 11.0 / 20.0, 0.5, 1.0)
A = (
    (),
    (0.5,),
    (17.0 / 50.0, -1.0 / 25.0),
    (371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0),
    (25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0),
)
# b - b_hat; b is the last row of A (stiffly accurate)
E = (-9.0 / 48.0, -81.0 / 96.0, 25.0 / 32.0, 0.0, 0.25)

SAFETY = 0.9
MAX_GROW = 4.0
MIN_SHRINK = 0.2
NEWTON_MAXIT = 8
NEWTON_KAPPA = 0.03
MAX_STEPS = 2_000_000


class IntegrationError(RuntimeError):
    """Step-size underflow or step budget exhausted at ``t``."""

    def __init__(self, message, t):
        super().__init__(f"{message} at t={t!r}")
        self.t = t


def _step(rhs, jac, aux, t, y, h, tol_scale):
    """One SDIRK step. Returns (y_new, dz, err) or None if Newton fails."""
    hg = h * GAMMA
    ks = []
    kz = []
    pred = y
    for i in range(5):
        ti = t + C[i] * h
        base = y
        for aij, kj in zip(A[i], ks):
            base += h * aij * kj
        Y = pred if i else y
        ok = False
        for _ in range(NEWTON_MAXIT):
            G = Y - base - hg * rhs(ti, Y)
            dY = G / (1.0 - hg * jac(ti, Y))
            Y -= dY
            if not math.isfinite(Y):
                return None
            if abs(dY) <= NEWTON_KAPPA * tol_scale:
                ok = True
                break
        if not ok:
            return None
        k = (Y - base) / hg
        ks.append(k)
        if aux is not None:
            kz.append(aux(ti, Y))
        # next-stage predictor: extrapolate with the latest slope
        pred = Y + h * (C[i + 1] - C[i]) * k if i < 4 else Y
    err = h * sum(e * k for e, k in zip(E, ks))
    # damp the stiff part of the estimate
    err /= 1.0 - hg * jac(t, y)
    dz = 0.0
    if aux is not None:
        dz = h * sum(a * k for a, k in zip(A[4], kz[:4])) + hg * kz[4]
    return Y, dz, err


def integrate(rhs, jac, t0, y0, t1, rtol=1e-10, atol=1e-10, h0=None,
              aux=None, z0=0.0, stops=None, on_stop=None):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> float``.
    jac : callable
        ``jac(t, y) -> df/dy``.
    t0, t1 : float
        Limits; ``t1 < t0`` integrates backwards.
    rtol, atol : float
        Local error tolerance ``atol + rtol * |y|``.
    h0 : float, optional
        Initial step magnitude (default: 1e-3 of the span).
    aux : callable, optional
        Right-hand side ``aux(t, y)`` of the slaved variable ``z``.
    stops : sequence of float, optional
        Points strictly between ``t0`` and ``t1`` (in integration order) where
        ``on_stop(t, y, z)`` is called with the solution landed on exactly.

    Returns
    -------
    (y1, z1) : tuple of float

    Raises
    ------
    IntegrationError
        When the step size underflows or the step budget runs out.
    """
    span = t1 - t0
    if span == 0.0:
        return y0, z0
    direction = 1.0 if span > 0 else -1.0
    h = direction * min(abs(h0) if h0 else 1e-3 * abs(span), abs(span))
    t, y, z = t0, y0, z0
    targets = list(stops or ()) + [t1]
    nsteps = 0
    for k, target in enumerate(targets):
        while direction * (target - t) > 0.0:
            hstep = h
            last = direction * (t + hstep - target) >= 0.0
            if last:
                hstep = target - t
            while True:
                if t + hstep == t:
                    raise IntegrationError("step size underflow", t)
                scale = atol + rtol * abs(y)
                res = _step(rhs, jac, aux, t, y, hstep, scale)
                if res is None:
                    hstep *= 0.5
                    last = False
                    continue
                ynew, dz, err = res
                errmax = abs(err) / (atol + rtol * max(abs(y), abs(ynew)))
                fac = SAFETY * errmax ** -0.25 if errmax > 0 else MAX_GROW
                if errmax <= 1.0:
                    break
                hstep *= max(MIN_SHRINK, fac)
                last = False
            t = target if last else t + hstep
            y = ynew
            z += dz
            nsteps += 1
            if nsteps > MAX_STEPS:
                raise IntegrationError("step budget exhausted", t)
            h = hstep * min(MAX_GROW, max(MIN_SHRINK, fac))
            if last and abs(h) < abs(hstep):
                h = hstep
        if on_stop is not None and k < len(targets) - 1:
            on_stop(t, y, z)
    return y, z
