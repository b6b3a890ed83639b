"""Eigenvalue accumulation as the collar degenerates.

For ``a = -1`` the number of collar eigenvalues below ``Lambda`` grows like

    N(eps) ~ (c_+ sqrt(Lambda - (c_+ bd/2)^2)_+
              + c_- sqrt(Lambda - (c_- bd/2)^2)_+) log(1/eps) / pi,

which comes from the one-dimensional zero count ``N_M(a) = a sqrt(M)/pi +
O(1)`` for ``-u'' + r u = mu u`` on ``[0, a]`` with integrable ``r``.
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .metric import ConfigError, homogeneity_constants
from .spectrum import collar_count
from .sturm import BC, SLProblem, count_eigenvalues

__all__ = [
    "DEFAULT_EPS_GRID",
    "CountReport",
    "predicted_count",
    "predicted_slope",
    "count_report",
    "slope_fit",
    "classical_count_check",
    "R_KINDS",
]

DEFAULT_EPS_GRID = tuple(10.0 ** (-e) for e in (2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0))


def predicted_slope(config, lam):
    """Coefficient of ``log(1/eps)`` in the predicted count."""
    if config.a != -1:
        raise ConfigError("the counting law is stated for a = -1")
    if not lam > 0:
        raise ConfigError("Lambda must be positive")
    cm, cp = homogeneity_constants(config.profile)
    bd = config.bd
    total = 0.0
    for c in (cm, cp):
        total += c * math.sqrt(max(0.0, lam - (c * bd / 2.0) ** 2))
    return total / math.pi


def predicted_count(config, lam, eps):
    """Leading term of ``N_Lambda(eps)``.

    >>> from collarspec.metric import CollarConfig, FiberSpectrum, make_profile
    >>> cfg = CollarConfig(-1, 1, 1, (-1, 1), make_profile("hyperbolic"),
    ...                    FiberSpectrum.circle())
    >>> round(predicted_count(cfg, 4.0, math.exp(-10)), 3)
    12.328
    """
    if not 0 < eps < 1:
        raise ConfigError("eps must lie in (0, 1)")
    return predicted_slope(config, lam) * math.log(1.0 / eps)


def slope_fit(eps, counts):
    """OLS slope of ``counts`` against ``log(1/eps)`` and its standard error."""
    x = np.log(1.0 / np.asarray(eps, dtype=float))
    y = np.asarray(counts, dtype=float)
    if x.size != y.size:
        raise ConfigError("eps and counts differ in length")
    if x.size < 4:
        raise ConfigError("slope fit needs at least 4 points")
    if np.ptp(x) < 2.0 * math.log(10.0) * (1 - 1e-12):
        raise ConfigError("slope fit needs an eps grid spanning 2 decades")
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xm
    dof = x.size - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx)
    return slope, stderr


@dataclass
class CountReport:
    lam: float
    eps: List[float]
    dirichlet: List[int]
    neumann: List[int]
    predicted: List[float]
    predicted_slope: float
    fit_dirichlet: tuple
    fit_neumann: tuple
    monotone: bool
    notes: List[str] = field(default_factory=list)

    @property
    def fitted_slope(self):
        return self.fit_dirichlet[0]

    @property
    def relative_deviation(self):
        return abs(self.fitted_slope - self.predicted_slope) / self.predicted_slope

    @property
    def residuals(self):
        s = self.fitted_slope
        x = np.log(1.0 / np.asarray(self.eps))
        y = np.asarray(self.dirichlet, dtype=float)
        return (y - (y.mean() + s * (x - x.mean()))).tolist()

    def rows(self):
        """``(eps, log(1/eps), N_D, N_N, predicted)`` per grid point."""
        return [(e, math.log(1.0 / e), nd, nn, p) for e, nd, nn, p in
                zip(self.eps, self.dirichlet, self.neumann, self.predicted)]

    def to_dict(self):
        sd, ed = self.fit_dirichlet
        sn, en = self.fit_neumann
        return {
            "lambda": self.lam,
            "eps": list(self.eps),
            "dirichlet": list(self.dirichlet),
            "neumann": list(self.neumann),
            "predicted": list(self.predicted),
            "predicted_slope": self.predicted_slope,
            "fitted_slope": sd,
            "fitted_slope_stderr": ed,
            "fitted_slope_neumann": sn,
            "fitted_slope_neumann_stderr": en,
            "relative_deviation": self.relative_deviation,
            "residuals": self.residuals,
            "monotone": self.monotone,
            "notes": list(self.notes),
        }


def count_report(config, lam, eps_grid=DEFAULT_EPS_GRID, rtol=1e-10, workers=1):
    """Dirichlet and Neumann collar counts over ``eps_grid`` and slope fits."""
    eps_grid = sorted((float(e) for e in eps_grid), reverse=True)
    nd = [collar_count(config, e, lam, BC.DIRICHLET, rtol, workers) for e in eps_grid]
    nn = [collar_count(config, e, lam, BC.NEUMANN, rtol, workers) for e in eps_grid]
    pred = [predicted_count(config, lam, e) for e in eps_grid]
    mono = all(b >= a for a, b in zip(nd, nd[1:])) and \
        all(b >= a for a, b in zip(nn, nn[1:]))
    notes = [] if mono else ["counts are not nondecreasing as eps decreases"]
    return CountReport(lam, eps_grid, nd, nn, pred, predicted_slope(config, lam),
                       slope_fit(eps_grid, nd), slope_fit(eps_grid, nn), mono, notes)


def _r_inverse_square(amp):
    return lambda s: amp / (1.0 + s * s)


def _r_exponential(amp):
    return lambda s: amp * math.exp(-s)


def _r_zero(amp):
    return lambda s: 0.0


R_KINDS = {
    "inverse-square": _r_inverse_square,
    "exponential": _r_exponential,
    "zero": _r_zero,
}


def classical_count_check(r_kind, M, a_grid, amplitude=1.0, rtol=1e-10):
    """Zero count of ``-u'' + r u = mu u`` on ``[0, a]`` against ``a sqrt(M)/pi``.

    Counts eigenvalues in ``[0, M]`` inclusive; negative eigenvalues (possible
    for signed ``r``) are excluded and 0 is counted only if it is an
    eigenvalue.

    Returns
    -------
    list of dict
        One row per ``a`` with Dirichlet and Neumann counts and deviations.
    """
    if r_kind not in R_KINDS:
        raise ConfigError(f"r kind {r_kind!r} is not a built-in integrable kind "
                          f"({sorted(R_KINDS)})")
    if not M > 0:
        raise ConfigError("M must be positive")
    a_grid = [float(a) for a in a_grid]
    if any(b <= a for a, b in zip(a_grid, a_grid[1:])) or a_grid[0] <= 0:
        raise ConfigError("a_grid must be positive and increasing")
    r = R_KINDS[r_kind](float(amplitude))
    rows = []
    for a in a_grid:
        row = {"a": a, "predicted": a * math.sqrt(M) / math.pi}
        for bc in (BC.DIRICHLET, BC.NEUMANN):
            prob = SLProblem(lambda s: 1.0, r, lambda s: 1.0, 0.0, a, bc, bc)
            n = count_eigenvalues(prob, M, rtol=rtol)
            # eigenvalues strictly below 0 are not part of [0, M]
            n -= count_eigenvalues(prob, -1e-12, rtol=rtol)
            row[bc.value] = n
            row[f"deviation_{bc.value}"] = n - row["predicted"]
        rows.append(row)
    return rows
