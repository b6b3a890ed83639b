import dataclasses
import math

import numpy as np
import pytest

from collarspec.cusp import (CuspProblem, _extrapolate, cusp_eigenfunction, cusp_eigenvalues,
                             decay_check, gradient_integrability, gradient_sequence)
from collarspec.metric import ConfigError
from collarspec.sturm import BC, kth_eigenvalue

MU1 = (2 * math.pi) ** 2


def test_extrapolate_geometric_and_stalled():
    lim, ok = _extrapolate([1 + 0.1, 1 + 0.01, 1 + 0.001], floor=1e-12)
    assert ok and lim == pytest.approx(1.0, abs=1e-14)
    lim, ok = _extrapolate([1.0, 2.0, 3.5], floor=1e-12)
    assert not ok and lim == 3.5
    assert _extrapolate([2.0, 2.0 + 1e-13], floor=1e-12) == (2.0 + 1e-13, True)


@pytest.mark.parametrize("side", ["+", "-"])
def test_truncation_monotone_and_settling(hyperbolic, side):
    spec = cusp_eigenvalues(CuspProblem(hyperbolic, side, MU1), count=2,
                            t_cuts=(0.4, 0.3, 0.2))
    d = np.diff(spec.table, axis=0)
    assert spec.monotone and np.all(d < 0)
    assert np.all(np.abs(d[1]) < np.abs(d[0]))


def test_limits_certified_at_small_cuts(hyperbolic):
    spec = cusp_eigenvalues(CuspProblem(hyperbolic, "+", MU1), count=2)
    assert spec.certified and spec.monotone
    assert np.all(np.abs(np.diff(spec.table, axis=0)) <= spec.floor)
    rows = spec.rows()
    assert len(rows) == 3 * 2 + 2 and rows[-2][0] == 0.0


def test_sides_agree_for_symmetric_profile(hyperbolic):
    plus = cusp_eigenvalues(CuspProblem(hyperbolic, "+", MU1), count=2)
    minus = cusp_eigenvalues(CuspProblem(hyperbolic, "-", MU1), count=2)
    assert plus.limits == pytest.approx(minus.limits, rel=1e-9)


def test_liouville_form_agrees(hyperbolic):
    prob = CuspProblem(hyperbolic, "+", MU1, t_cut=1e-2)
    lam_t = kth_eigenvalue(prob.sl_problem(), 1, tol=1e-10, rtol=1e-12)
    lam_s = kth_eigenvalue(prob.liouville_problem(), 1, tol=1e-10, rtol=1e-11)
    assert lam_s == pytest.approx(lam_t, rel=1e-7)


def test_neumann_cut_lies_below(hyperbolic):
    dir_ = cusp_eigenvalues(CuspProblem(hyperbolic, "+", MU1), count=1,
                            t_cuts=(0.4, 0.3))
    neu = cusp_eigenvalues(CuspProblem(hyperbolic, "+", MU1, bc_cut=BC.NEUMANN), count=1,
                           t_cuts=(0.4, 0.3))
    assert np.all(neu.table < dir_.table)
    # Neumann values rise towards the limit as the cut moves in
    assert neu.table[1, 0] >= neu.table[0, 0]


@pytest.fixture(scope="module")
def ground():
    from collarspec.metric import CollarConfig, FiberSpectrum, make_profile
    cfg = CollarConfig(-1, 1, 1, (-1, 1), make_profile("hyperbolic"), FiberSpectrum.circle())
    return cusp_eigenfunction(CuspProblem(cfg, "+", MU1, t_cut=1e-3))


def test_decay_orders(ground):
    rep = decay_check(ground, exponents=(0, 1, 2, 4))
    assert rep.ok, rep.notes
    assert rep.to_dict()["ok"] is True


def test_decay_grid_too_coarse(hyperbolic):
    cef = cusp_eigenfunction(CuspProblem(hyperbolic, "+", MU1, t_cut=1e-2), n=51)
    with pytest.raises(ConfigError, match="grid too coarse"):
        decay_check(cef)


def test_gradient_zero_and_scaling(ground):
    sol = ground.solution
    zero = dataclasses.replace(ground, solution=dataclasses.replace(sol, u=0 * sol.u,
                                                                    du=0 * sol.du))
    assert gradient_integrability(zero) == 0.0
    double = dataclasses.replace(ground, solution=dataclasses.replace(sol, u=2 * sol.u,
                                                                      du=2 * sol.du))
    assert gradient_integrability(double) == pytest.approx(4 * gradient_integrability(ground),
                                                          rel=1e-13)


def test_gradient_stabilises(hyperbolic):
    vals, stable = gradient_sequence(CuspProblem(hyperbolic, "+", MU1))
    assert stable
    assert max(vals) - min(vals) < 1e-6 * vals[-1]


def test_validation(hyperbolic):
    with pytest.raises(ConfigError):
        CuspProblem(hyperbolic, "+", 0.0)
    with pytest.raises(ConfigError):
        CuspProblem(hyperbolic, "+", MU1, t_cut=1.5)
    with pytest.raises(ConfigError):
        CuspProblem(hyperbolic, "up", MU1)
    with pytest.raises(ConfigError):
        CuspProblem(hyperbolic, "+", MU1, bc_outer=BC.NEUMANN).liouville_problem()
    with pytest.raises(ConfigError):
        cusp_eigenvalues(CuspProblem(hyperbolic, "+", MU1), count=1, t_cuts=(1e-2,))
    with pytest.raises(ConfigError):
        cusp_eigenvalues(CuspProblem(hyperbolic, "+", MU1))
