import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from collarspec.metric import (CollarConfig, ConfigError, FiberSpectrum, ProfileKind,
                               ProfileRho, frozen_profile, homogeneity_constants,
                               make_profile, max_rho, sl_coefficients)
from collarspec.sturm import BC, count_eigenvalues, matrix_oracle

MU1 = (2 * math.pi) ** 2
PROFILES = [make_profile("hyperbolic"), make_profile("hyperbolic", (1.7,)),
            make_profile("linear-pair", (2.0, 3.0)),
            make_profile("linear-pair", (0.5, 1.5))]


def test_hyperbolic_values():
    hyp = make_profile("hyperbolic")
    assert hyp.rho(0.0, -3.0) == 3.0
    assert hyp.rho(3.0, 4.0) == 5.0


def test_hyperbolic_metric_coefficients():
    # dt^2/(eps^2+t^2) + (eps^2+t^2) dx^2 for a=-1, b=1
    hyp = make_profile("hyperbolic")
    eps, t = 0.3, 0.7
    r = hyp.rho(eps, t)
    assert r ** (2 * -1) == pytest.approx(1.0 / (eps ** 2 + t ** 2))
    assert r ** 2 == pytest.approx(eps ** 2 + t ** 2)


def test_homogeneity_constants():
    assert homogeneity_constants(make_profile("hyperbolic")) == (1.0, 1.0)
    assert homogeneity_constants(make_profile("linear-pair", (2.0, 3.0))) == (2.0, 3.0)
    assert homogeneity_constants(make_profile("hyperbolic", (2.5,))) == pytest.approx(
        (2.5, 2.5))


@given(st.sampled_from(PROFILES), st.floats(0.0, 2.0), st.floats(-1.0, 1.0),
       st.floats(0.1, 10.0))
def test_degree_one_homogeneity(profile, eps, t, lam):
    assert profile.rho(lam * eps, lam * t) == pytest.approx(
        lam * profile.rho(eps, t), rel=1e-12, abs=1e-300)


@given(st.sampled_from(PROFILES), st.floats(0.01, 1.0), st.floats(-1.5, 1.5))
def test_analytic_derivatives_match_differences(profile, eps, t):
    h = 1e-5 * max(eps, 1e-2)
    r, r1, r2 = profile.derivs(eps, t)
    rp, rm = profile.rho(eps, t + h), profile.rho(eps, t - h)
    assert r1 == pytest.approx((rp - rm) / (2 * h), rel=1e-6, abs=1e-6)
    assert r2 == pytest.approx((rp - 2 * r + rm) / h ** 2, rel=1e-3, abs=1e-3 / eps)


def test_linear_pair_switch_is_monotone_and_smooth():
    prof = make_profile("linear-pair", (2.0, 1.0))
    eps = 0.1
    t = np.linspace(-0.3, 0.3, 601)
    r = prof.rho_array(eps, t)
    assert np.all(r > 0)
    assert prof.rho(eps, 0.5) == pytest.approx(math.hypot(eps, 0.5))
    assert prof.rho(eps, -0.5) == pytest.approx(math.hypot(eps, 1.0))


def test_unknown_profile_rejected():
    with pytest.raises(ConfigError):
        make_profile("elliptic")


def test_frozen_profile_ignores_eps():
    fro = frozen_profile(make_profile("hyperbolic"), 1.0)
    assert fro.rho(0.0, 0.5) == fro.rho(0.3, 0.5) == pytest.approx(math.hypot(1.0, 0.5))
    assert not fro.homogeneous


def test_circle_modes():
    modes = FiberSpectrum.circle(1.0).modes(MU1 * 4 + 1e-9)
    assert modes == [(0.0, 1), (pytest.approx(MU1), 2), (pytest.approx(4 * MU1), 2)]
    assert FiberSpectrum.circle(2.0).mu1 == pytest.approx(math.pi ** 2)


def test_torus_modes_merge_multiplicities():
    modes = FiberSpectrum.flat_torus((1.0, 1.0)).modes(2 * MU1 + 1e-9)
    assert [m for _, m in modes] == [1, 4, 4]
    assert [mu for mu, _ in modes] == pytest.approx([0.0, MU1, 2 * MU1])


def test_explicit_list_complete_only_to_limit():
    fib = FiberSpectrum.explicit([(0.0, 1), (3.0, 2)], mu_limit=10.0)
    assert fib.modes(5.0) == [(0.0, 1), (3.0, 2)]
    with pytest.raises(ConfigError):
        fib.modes(11.0)


@pytest.mark.parametrize("kw", [dict(a=-0.5), dict(b=0.0), dict(d=0),
                                dict(interval=(0.1, 1.0)), dict(d=2)])
def test_config_preconditions(kw):
    base = dict(a=-1, b=1, d=1, interval=(-1, 1), profile=make_profile("hyperbolic"),
                fiber=FiberSpectrum.circle())
    base.update(kw)
    with pytest.raises(ConfigError):
        CollarConfig(**base)


def test_constant_mode_coefficients(hyperbolic):
    sl = sl_coefficients(hyperbolic, 0.2, 0.0)
    for t in (-0.7, 0.0, 0.4):
        p, q, w = sl.coeffs(t)
        assert p == pytest.approx(0.04 + t * t)
        assert q == 0.0
        assert w == pytest.approx(1.0)


def test_mu1_potential_at_origin(hyperbolic):
    # q = mu rho^(a+bd-2b) = (2 pi)^2 * 0.1^-2
    sl = sl_coefficients(hyperbolic, 0.1, MU1)
    assert sl.q(0.0) == pytest.approx(MU1 * 100.0, rel=1e-12)


def test_mu1_ground_state_above_minimax_bound(hyperbolic):
    sl = sl_coefficients(hyperbolic, 0.1, MU1)
    bound = MU1 * max_rho(hyperbolic, 0.1) ** -2
    assert count_eigenvalues(sl, bound * (1 - 1e-9), rtol=1e-11) == 0
    assert matrix_oracle(sl, 4000)[0] > bound


def test_eps_zero_needs_one_side(hyperbolic):
    with pytest.raises(ConfigError):
        sl_coefficients(hyperbolic, 0.0, MU1)
    sl = sl_coefficients(hyperbolic, 0.0, MU1, interval=(0.01, 1.0))
    assert sl.t0 == 0.01


def test_max_rho_endpoint_and_interior(hyperbolic):
    assert max_rho(hyperbolic, 0.1) == pytest.approx(math.hypot(0.1, 1.0), rel=1e-12)
    bump = CollarConfig(-1, 1, 1, (-1, 1),
                        ProfileRho(ProfileKind.CUSTOM, (), funcs=(
                            lambda e, t: 2.0 - (t - 0.3) ** 2,
                            lambda e, t: -2 * (t - 0.3),
                            lambda e, t: -2.0), homogeneous=False),
                        FiberSpectrum.circle())
    assert max_rho(bump, 0.0) == pytest.approx(2.0, rel=1e-12)
