import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from collarspec.asymptotics import (classical_count_check, count_report, predicted_count,
                                    predicted_slope, slope_fit)
from collarspec.metric import CollarConfig, ConfigError, FiberSpectrum, make_profile


def test_predicted_slope_hyperbolic(hyperbolic):
    assert predicted_slope(hyperbolic, 4.0) == pytest.approx(2 * math.sqrt(3.75) / math.pi)


def test_band_edge_gives_zero(hyperbolic):
    assert predicted_slope(hyperbolic, 0.25) == 0.0
    assert predicted_slope(hyperbolic, 0.1) == 0.0


def test_predicted_slope_asymmetric_profile():
    cfg = CollarConfig(-1, 1, 1, (-1, 1), make_profile("linear-pair", (2.0, 1.0)),
                       FiberSpectrum.circle())
    # the c = 2 side has band edge 1 and contributes nothing below it
    got = predicted_count(cfg, 0.9, 1e-3)
    assert got == pytest.approx(math.sqrt(0.65) * math.log(1e3) / math.pi, rel=1e-14)


def test_counting_law_preconditions(hyperbolic):
    steep = CollarConfig(-2, 1, 1, (-1, 1), make_profile("hyperbolic"),
                         FiberSpectrum.circle())
    with pytest.raises(ConfigError):
        predicted_slope(steep, 4.0)
    with pytest.raises(ConfigError):
        predicted_slope(hyperbolic, 0.0)
    with pytest.raises(ConfigError):
        predicted_count(hyperbolic, 4.0, 1.0)


@given(st.floats(-5, 5), st.floats(0.1, 5))
def test_slope_fit_exact_line(c, s):
    eps = np.logspace(-1, -5, 6)
    counts = c + s * np.log(1 / eps)
    slope, err = slope_fit(eps, counts)
    assert slope == pytest.approx(s, rel=1e-10, abs=1e-12)
    assert err < 1e-8


def test_slope_fit_rejects_bad_input():
    with pytest.raises(ConfigError):
        slope_fit([1e-2, 1e-3, 1e-4, 1e-5], [1, 2, 3])
    with pytest.raises(ConfigError):
        slope_fit([1e-2, 1e-3, 1e-4], [1, 2, 3])
    with pytest.raises(ConfigError):
        slope_fit([1e-2, 2e-3, 1e-3, 5e-4], [1, 2, 3, 4])


def test_free_counts_are_exact():
    m = 10.0
    for row in classical_count_check("zero", m, (1.5, 2.0, 5.0, 10.0)):
        n = math.floor(row["a"] * math.sqrt(m) / math.pi)
        assert row["dirichlet"] == n
        assert row["neumann"] == n + 1


@pytest.mark.parametrize("kind", ["inverse-square", "exponential"])
def test_classical_deviation_bounded(kind):
    rows = classical_count_check(kind, 10.0, (5.0, 20.0, 50.0))
    for row in rows:
        assert abs(row["deviation_dirichlet"]) < 2
        assert abs(row["deviation_neumann"]) < 2
        assert 0 <= row["neumann"] - row["dirichlet"] <= 2


def test_classical_check_validation():
    with pytest.raises(ConfigError):
        classical_count_check("cubic", 10.0, (1.0,))
    with pytest.raises(ConfigError):
        classical_count_check("zero", -1.0, (1.0,))
    with pytest.raises(ConfigError):
        classical_count_check("zero", 10.0, (2.0, 1.0))


def test_count_report_consistency(hyperbolic):
    rep = count_report(hyperbolic, 4.0)
    assert rep.monotone and not rep.notes
    assert all(d <= n for d, n in zip(rep.dirichlet, rep.neumann))
    (sd, ed), (sn, en) = rep.fit_dirichlet, rep.fit_neumann
    assert abs(sd - sn) < 2 * max(ed, en)
    assert len(rep.rows()) == 7
    assert rep.to_dict()["predicted_slope"] == pytest.approx(predicted_slope(hyperbolic, 4.0))
