import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from gausscurv.growth import W0_AT_ORIGIN, laplacian_w0, w0, w0_derivative
from gausscurv.quadrature import PolarGrid


@given(st.floats(1.0, 1e12))
def test_log_outside_unit_disk(r):
    assert w0(r) == math.log(r)


def test_c1_at_unit_radius():
    e = 1e-9
    assert abs(w0(1 - e) - w0(1 + e)) < 1e-8
    assert abs(w0_derivative(1 - e) - w0_derivative(1 + e)) < 1e-8
    assert w0_derivative(0.0) == 0.0
    assert w0(0.0) == pytest.approx(W0_AT_ORIGIN)


def test_laplacian_integral_is_two_pi():
    val, _ = integrate.quad(lambda r: 2 * math.pi * r * laplacian_w0(r), 0, 1, epsabs=0, epsrel=1e-13)
    assert val == pytest.approx(2 * math.pi, abs=1e-10)
    g = PolarGrid((0.0, 0.5, 1.0, 2.0), 16, 16)
    x, y = g.node_coordinates()
    assert g.integrate(laplacian_w0(np.hypot(x, y))) == pytest.approx(2 * math.pi, abs=1e-12)


@given(st.floats(0.01, 0.99))
def test_laplacian_matches_finite_differences(r):
    h = 1e-4
    lap = (w0(r + h) - 2 * w0(r) + w0(r - h)) / h**2 + (w0(r + h) - w0(r - h)) / (2 * h * r)
    assert lap == pytest.approx(float(laplacian_w0(r)), abs=1e-5)


def test_laplacian_vanishes_outside():
    assert np.all(laplacian_w0(np.array([1.0, 1.5, 10.0])) == 0.0)
