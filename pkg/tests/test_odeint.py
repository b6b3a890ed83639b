import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from collarspec.odeint import IntegrationError, integrate


@given(st.floats(-3.0, 3.0), st.floats(0.1, 2.0))
def test_linear_decay_matches_exponential(k, span):
    y, _ = integrate(lambda t, y: k * y, lambda t, y: k, 0.0, 1.0, span,
                     rtol=1e-12, atol=1e-14)
    assert y == pytest.approx(math.exp(k * span), rel=1e-9)


def test_stiff_relaxation_is_stable():
    # y' = -1e6 (y - cos t): L-stable scheme follows the slow manifold
    k = 1e6
    y, _ = integrate(lambda t, y: -k * (y - math.cos(t)), lambda t, y: -k,
                     0.0, 0.0, 1.0, rtol=1e-10, atol=1e-12)
    slow = (k * k * math.cos(1.0) + k * math.sin(1.0)) / (k * k + 1)
    assert y == pytest.approx(slow, abs=1e-8)


def test_backward_integration():
    y, _ = integrate(lambda t, y: y, lambda t, y: 1.0, 1.0, math.e, 0.0,
                     rtol=1e-12, atol=1e-14)
    assert y == pytest.approx(1.0, rel=1e-10)


def test_aux_variable_integrates_quadrature():
    _, z = integrate(lambda t, y: 0.0, lambda t, y: 0.0, 0.0, 0.0, 2.0,
                     aux=lambda t, y: t * t, rtol=1e-12, atol=1e-12)
    assert z == pytest.approx(8.0 / 3.0, rel=1e-10)


def test_stops_land_exactly():
    seen = []
    stops = [0.25, 0.5, 0.75]
    integrate(lambda t, y: y, lambda t, y: 1.0, 0.0, 1.0, 1.0, stops=stops,
              on_stop=lambda t, y, z: seen.append((t, y)), rtol=1e-12, atol=1e-14)
    assert [t for t, _ in seen] == stops
    assert np.allclose([y for _, y in seen], np.exp(stops), rtol=1e-10)


def test_blow_up_raises():
    with pytest.raises(IntegrationError):
        integrate(lambda t, y: y * y, lambda t, y: 2 * y, 0.0, 1.0, 2.0,
                  rtol=1e-10, atol=1e-10)
