import math

import numpy as np
import pytest

from nonlin_tomo.errors import SpecfunDomainError
from nonlin_tomo.geometry import InclusionSet, StarCurve, interior_quadrature
from nonlin_tomo.specfun import (J1_FIRST_ZERO, MeanValueFactorQuery, ascending_series, bessel_j, bessel_y,
                                 hankel1, hankel_asymptotic, mean_value, mean_value_factor, oracle_bessel_j,
                                 y0_series)


def test_values_at_origin():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(2, 0.0) == 0.0


@pytest.mark.parametrize("n", [0, 1, 2])
@pytest.mark.parametrize("x", [0.1, 1.0, 2.404825557695773, 5.0, 10.0, 11.5])
def test_series_oracle_agrees(n, x):
    assert bessel_j(n, x) == pytest.approx(ascending_series(n, x), abs=1e-10)


@pytest.mark.parametrize("n", [0, 1])
@pytest.mark.parametrize("x", [20.0, 40.0, 80.0])
def test_asymptotic_oracle_agrees(n, x):
    h = hankel1(n, x)
    assert abs(h - hankel_asymptotic(n, x)) <= 1e-9 * abs(h)
    assert oracle_bessel_j(n, x) == pytest.approx(float(h.real), abs=1e-9)


@pytest.mark.parametrize("x", [0.5, 2.0, 5.0])
def test_y0_series(x):
    assert bessel_y(0, x) == pytest.approx(y0_series(x), abs=1e-10)


@pytest.mark.parametrize("x", [0.3, 1.0, 7.5, 30.0])
def test_wronskian(x):
    w = bessel_j(0, x) * bessel_y(1, x) - bessel_j(1, x) * bessel_y(0, x)
    assert w == pytest.approx(-2.0 / (math.pi * x), rel=1e-12)


def test_hankel_modulus_large_argument():
    assert abs(hankel1(0, 80.0)) == pytest.approx(math.sqrt(2.0 / (math.pi * 80.0)), rel=1e-3)


def test_hankel_rejects_origin_and_orders():
    with pytest.raises(SpecfunDomainError):
        hankel1(0, 0.0)
    with pytest.raises(SpecfunDomainError):
        hankel1(0, np.array([1.0, -1.0]))
    with pytest.raises(SpecfunDomainError):
        hankel1(2, 1.0)
    with pytest.raises(SpecfunDomainError):
        bessel_j(3, 1.0)


def test_mean_value_factor_special_points():
    assert mean_value_factor(2, 0.0) == 1.0
    assert abs(mean_value_factor(2, J1_FIRST_ZERO)) < 1e-12
    assert mean_value_factor(3, math.pi) == pytest.approx(3.0 / math.pi ** 2, rel=1e-12)
    z = 1e-7
    assert mean_value_factor(2, z) == pytest.approx(1.0 - z * z / 8.0, abs=1e-15)
    assert mean_value_factor(2, 1e-6) == pytest.approx(2.0 * bessel_j(1, 1e-6) / 1e-6, rel=1e-12)


def test_mean_value_factor_vectorised():
    z = np.array([0.0, 0.5, 2.0])
    out = mean_value_factor(2, z)
    assert out.shape == (3,)
    assert out[1] == pytest.approx(2.0 * bessel_j(1, 0.5) / 0.5)
    assert isinstance(mean_value_factor(2, 0.5), float)


def test_mean_value_factor_domain():
    with pytest.raises(SpecfunDomainError):
        mean_value_factor(4, 1.0)
    with pytest.raises(SpecfunDomainError):
        mean_value_factor(2, -0.1)
    with pytest.raises(SpecfunDomainError):
        MeanValueFactorQuery(2, -1.0)
    assert mean_value(MeanValueFactorQuery(2, 1.0)) == pytest.approx(2.0 * bessel_j(1, 1.0))


@pytest.mark.parametrize("r", [0.05, 0.1, 0.2])
def test_mean_value_property_for_plane_waves(r):
    kappa, x0, d = 10.0, np.array([0.1, -0.2]), np.array([0.6, 0.8])
    quad = interior_quadrature(InclusionSet.of([StarCurve.circle(x0, r)], 16, 32))
    integral = np.sum(quad.weights * np.exp(1j * kappa * quad.nodes @ d))
    predicted = math.pi * r * r * mean_value_factor(2, kappa * r) * np.exp(1j * kappa * x0 @ d)
    assert abs(integral - predicted) < 1e-10
