import math

import numpy as np
import pytest

from nonlin_tomo.eqdiscs import (BRANCH_MAX, WeightToRadiusProblem, build_starting_guesses, radius_from_weight,
                                 weight_from_radius)
from nonlin_tomo.errors import OutOfBranchError
from nonlin_tomo.forward import DiscreteMeasure, InclusionSource, point_source_traces, solve_source_problem
from nonlin_tomo.geometry import InclusionSet, StarCurve, discs_centroid, interior_quadrature
from nonlin_tomo.specfun import J0_FIRST_ZERO

KAPPA = 10.0
F = 0.3 + 0.2j


def _constant(f=F):
    return lambda x: np.full(np.atleast_2d(x).shape[0], f, dtype=complex)


def _problem(weight, f=F):
    return WeightToRadiusProblem(abs(weight), abs(KAPPA ** 2 * f), KAPPA)


@pytest.mark.parametrize("kr", [0.2, 1.0, 2.0])
def test_radius_round_trip(kr):
    r = kr / KAPPA
    assert radius_from_weight(_problem(weight_from_radius(r, KAPPA, F))) == pytest.approx(r, rel=1e-12)


def test_weight_matches_disc_quadrature():
    r, center, d = 0.15, np.array([0.2, 0.1]), np.array([0.6, 0.8])
    quad = interior_quadrature(InclusionSet.of([StarCurve.circle(center, r)], 16, 32))
    integral = KAPPA ** 2 * F * np.sum(quad.weights * np.exp(1j * KAPPA * quad.nodes @ d))
    point = weight_from_radius(r, KAPPA, F) * np.exp(1j * KAPPA * center @ d)
    assert abs(integral - point) < 1e-10 * abs(point)


def test_weight_is_monotone_on_the_branch():
    r = np.linspace(1e-3, J0_FIRST_ZERO / KAPPA, 200)
    w = np.abs([weight_from_radius(v, KAPPA, F) for v in r])
    assert np.all(np.diff(w) > 0)
    assert w[-1] == pytest.approx(2 * math.pi * abs(KAPPA ** 2 * F) * BRANCH_MAX / KAPPA ** 2)


def test_zero_weight_is_out_of_branch():
    with pytest.raises(OutOfBranchError) as exc:
        radius_from_weight(_problem(0.0))
    assert exc.value.attainable == 0.0


def test_large_weight_reports_the_attainable_maximum():
    attainable = 2 * math.pi * abs(KAPPA ** 2 * F) * BRANCH_MAX / KAPPA ** 2
    with pytest.raises(OutOfBranchError) as exc:
        radius_from_weight(_problem(1.1 * attainable))
    assert exc.value.attainable == pytest.approx(attainable)
    assert radius_from_weight(_problem((1 - 1e-6) * attainable)) == pytest.approx(J0_FIRST_ZERO / KAPPA, rel=1e-3)


def test_invalid_problem():
    with pytest.raises(ValueError):
        WeightToRadiusProblem(-1.0, 1.0, KAPPA)
    with pytest.raises(ValueError):
        WeightToRadiusProblem(1.0, 0.0, KAPPA)


def test_disc_and_equivalent_point_source_share_boundary_data(domain):
    r, center = 0.15, (0.2, 0.1)
    incl = InclusionSet.of([StarCurve.circle(center, r)], domain.radial_order, domain.angular_order)
    src = InclusionSource(incl, np.full(len(interior_quadrature(incl)), F))
    disc = solve_source_problem(src, KAPPA, domain, eval_points=np.zeros((0, 2)))
    point = point_source_traces(np.array([center]), KAPPA, domain)[:, 0] * weight_from_radius(r, KAPPA, F)
    assert np.max(np.abs(disc.neumann - point)) < 1e-8 * np.max(np.abs(point))


def test_starting_guesses_for_separated_sources():
    radii = (0.1, 0.08)
    mu = DiscreteMeasure(np.array([[0.3, 0.0], [-0.3, 0.1]]),
                         np.array([weight_from_radius(r, KAPPA, F) for r in radii]))
    guess = build_starting_guesses(mu, _constant(), KAPPA, order=2)
    assert [d.radius for d in guess.discs] == pytest.approx(list(radii))
    assert guess.objects == ((0, (0,)), (1, (1,)))
    for c, d in zip(guess.curves, guess.discs):
        assert c.center == pytest.approx(d.center)
        assert c.a[0] == pytest.approx(d.radius, rel=1e-10)
        assert c.order == 2
    assert guess.object_weights == pytest.approx(tuple(mu.weights))


def test_starting_guess_merges_overlapping_discs():
    mu = DiscreteMeasure(np.array([[0.25, 0.0], [0.35, 0.0]]),
                         np.array([weight_from_radius(0.08, KAPPA, F)] * 2))
    guess = build_starting_guesses(mu, _constant(), KAPPA)
    assert guess.objects == ((0, (0, 1)),)
    (curve,) = guess.curves
    assert curve.center == pytest.approx((0.3, 0.0))
    assert 0.08 < curve.a[0] < J0_FIRST_ZERO / KAPPA
    assert guess.object_weights[0] == pytest.approx(complex(np.sum(mu.weights)))


def test_merged_object_is_centred_on_the_area_weighted_centroid():
    mu = DiscreteMeasure(np.array([[0.2, 0.1], [0.3, 0.1]]),
                         np.array([weight_from_radius(0.09, KAPPA, F), weight_from_radius(0.05, KAPPA, F)]))
    sampled = []

    def f_fn(x):
        sampled.append(np.array(x, dtype=float))
        return _constant()(x)

    guess = build_starting_guesses(mu, f_fn, KAPPA)
    (curve,) = guess.curves
    expected = discs_centroid(guess.discs)
    assert curve.center == pytest.approx(expected)
    assert expected[0] < 0.25
    assert sampled[-1][0] == pytest.approx(expected)


def test_out_of_branch_sources_are_clipped():
    mu = DiscreteMeasure(np.array([[0.0, 0.0]]), np.array([100.0 + 0j]))
    guess = build_starting_guesses(mu, _constant(), KAPPA)
    assert guess.discs[0].radius == pytest.approx(J0_FIRST_ZERO / KAPPA)
    assert guess.curves[0].a[0] == pytest.approx(J0_FIRST_ZERO / KAPPA)


def test_empty_measure_is_rejected():
    with pytest.raises(ValueError):
        build_starting_guesses(DiscreteMeasure.empty(), _constant(), KAPPA)
