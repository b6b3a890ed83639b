import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from collarspec.liouville import (TransformData, alpha, alpha_inverse,
                                  conjugated_potential, norm_defect, potential_at_t,
                                  random_test_functions, transformed_problem,
                                  unitary_push)
from collarspec.metric import CollarConfig, ConfigError, FiberSpectrum, make_profile
from collarspec.sturm import BC, kth_eigenvalue
from collarspec.metric import sl_coefficients


@pytest.fixture(scope="module")
def steep():
    """a = -2 over the hyperbolic profile: an overcomplete cusp."""
    return CollarConfig(-2, 1, 1, (-1, 1), make_profile("hyperbolic"),
                        FiberSpectrum.circle())


@given(st.floats(1e-4, 1.0), st.floats(-1.0, 1.0))
def test_alpha_is_asinh(hyperbolic, eps, t):
    assert alpha(hyperbolic, eps, t) == pytest.approx(math.asinh(t / eps), abs=1e-10)


@given(st.floats(1e-6, 1.0))
def test_alpha_at_eps_zero_is_log(hyperbolic, t):
    assert alpha(hyperbolic, 0.0, t, t0=1.0) == pytest.approx(math.log(t), abs=1e-10)


def test_alpha_vanishes_at_origin(hyperbolic):
    assert alpha(hyperbolic, 0.1, 0.0) == 0.0
    assert alpha(hyperbolic, 0.0, 0.5, t0=0.5) == 0.0


@given(st.floats(1e-3, 0.5), st.floats(-0.99, 0.99))
def test_alpha_inverse_round_trip(hyperbolic, eps, t):
    s = alpha(hyperbolic, eps, t)
    assert alpha_inverse(hyperbolic, eps, s) == pytest.approx(t, abs=1e-12)


def test_alpha_inverse_cusp_side(hyperbolic):
    assert alpha_inverse(hyperbolic, 0.0, -3.0, t0=1.0) == pytest.approx(math.exp(-3.0),
                                                                         rel=1e-12)


@pytest.mark.parametrize("params,d,fiber,edges", [
    ((), 1, FiberSpectrum.circle(), (0.25, 0.25)),
    ((2.0, 1.0), 2, FiberSpectrum.flat_torus((1.0, 1.0)), (4.0, 1.0)),
])
def test_potential_constant_on_cusp(params, d, fiber, edges):
    kind = "linear-pair" if params else "hyperbolic"
    cfg = CollarConfig(-1, 1, d, (-1, 1), make_profile(kind, params), fiber)
    for side, edge in zip(("-", "+"), edges):
        data = TransformData.build(cfg, 0.0, interval=cfg.side_interval(side, 1e-4))
        v = np.array([data.potential(x) for x in data.s])
        assert np.max(np.abs(v - edge)) < 1e-10


@given(st.floats(1e-3, 1.0), st.floats(-8.0, 8.0))
def test_hyperbolic_potential_closed_form(hyperbolic, eps, s):
    t = eps * math.sinh(s)
    if abs(t) > 1.0:
        return
    expected = (2 * eps ** 2 + t * t) / (4 * (eps ** 2 + t * t))
    assert conjugated_potential(hyperbolic, eps, s) == pytest.approx(expected, rel=1e-8)


def test_hyperbolic_potential_limits(hyperbolic):
    assert potential_at_t(hyperbolic, 1e-3, 0.0) == pytest.approx(0.5)
    assert potential_at_t(hyperbolic, 1e-3, 1.0) == pytest.approx(0.25, abs=1e-6)


def test_overcomplete_potential_asymptotics(steep):
    # k (c (a+1) s)^-2 with k = (bd/4)(bd - 2a - 2) = 3/4
    for s in (-1e2, -1e3, -1e4):
        v = conjugated_potential(steep, 0.0, s, t0=1.0)
        assert v / (0.75 * s ** -2) == pytest.approx(1.0, abs=3.0 / abs(s))


def test_push_of_constant(hyperbolic):
    data = TransformData.build(hyperbolic, 0.1)
    t, g = unitary_push(hyperbolic, 0.1, np.ones_like(data.s), data.s, data=data)
    rho = np.array([hyperbolic.profile.rho(0.1, x) for x in t])
    assert np.allclose(g, rho ** -0.5, rtol=1e-13)


def test_push_needs_side_data_at_eps_zero(hyperbolic):
    with pytest.raises(ConfigError):
        unitary_push(hyperbolic, 0.0, np.ones(3), np.array([-2.0, -1.0, 0.0]))


@pytest.mark.parametrize("eps", [0.1, 0.01, 0.0])
def test_norm_preserved(hyperbolic, eps):
    if eps:
        data = TransformData.build(hyperbolic, eps)
    else:
        data = TransformData.build(hyperbolic, 0.0, interval=(1e-3, 1.0))
    fs = random_test_functions(np.random.default_rng(7), data.s, 20)
    assert max(norm_defect(hyperbolic, eps, f, data.s, data) for f in fs) < 1e-8


def test_tabulated_inverse_accuracy(hyperbolic):
    data = TransformData.build(hyperbolic, 0.05)
    for s in np.linspace(data.s[0], data.s[-1], 37)[1:-1]:
        assert data.t_of_s(s) == pytest.approx(0.05 * math.sinh(s), abs=1e-10)


def test_eigenvalues_invariant_under_transform(hyperbolic):
    eps = 0.1
    data = TransformData.build(hyperbolic, eps)
    s_form = transformed_problem(data, 0.0)
    t_form = sl_coefficients(hyperbolic, eps, 0.0, bc=BC.DIRICHLET)
    for k in (1, 2):
        a = kth_eigenvalue(t_form, k, tol=1e-10, rtol=1e-12)
        b = kth_eigenvalue(s_form, k, tol=1e-10, rtol=1e-11)
        assert b == pytest.approx(a, rel=1e-6)
