import math

import numpy as np
import pytest

from nonlin_tomo.eqdiscs import weight_from_radius
from nonlin_tomo.errors import InvalidCurveError
from nonlin_tomo.geometry import (Disc, InclusionSet, StarCurve, area_centroid, contains_point, curves_overlap,
                                  discs_centroid, initial_curve_from_discs, interior_quadrature, merge_discs,
                                  polygon_area, symmetric_difference_area)


def test_curve_validation():
    with pytest.raises(InvalidCurveError):
        StarCurve((0.0, 0.0), (0.1, 0.2), (0.0,))  # r(π) < 0
    with pytest.raises(InvalidCurveError):
        StarCurve((0.0, 0.0), (0.1, 0.01), ())
    with pytest.raises(InvalidCurveError):
        StarCurve.from_params((0.0, 0.0), [0.1, 0.01])
    with pytest.raises(InvalidCurveError):
        Disc((0.0, 0.0), 0.0)


def test_params_and_order():
    c = StarCurve((0.1, -0.2), (0.2, 0.03, 0.01), (0.02, -0.01))
    assert c.order == 2
    assert np.allclose(c.params, [0.2, 0.03, 0.01, 0.02, -0.01])
    assert c.with_params(c.params) == c
    assert c.with_order(1) == StarCurve((0.1, -0.2), (0.2, 0.03), (0.02,))
    assert c.with_order(3).params.tolist() == [0.2, 0.03, 0.01, 0.0, 0.02, -0.01, 0.0]
    t = np.linspace(0.0, 2.0 * np.pi, 7)
    assert np.allclose(c.basis(t) @ c.params, c.radius(t))


def test_radius_derivatives_match_finite_differences():
    c = StarCurve((0.0, 0.0), (0.2, 0.03, 0.01), (0.02, -0.01))
    t, h = np.linspace(0.1, 6.0, 11), 1e-5
    assert np.allclose(c.radius_derivative(t), (c.radius(t + h) - c.radius(t - h)) / (2 * h), atol=1e-8)
    d2 = (c.radius(t + h) - 2 * c.radius(t) + c.radius(t - h)) / h ** 2
    assert np.allclose(c.radius_derivative(t, 2), d2, atol=1e-4)


def test_fit_and_phantom_shapes():
    c = StarCurve.fit((0.0, 0.0), lambda t: 0.2 + 0.05 * np.cos(2 * t) - 0.01 * np.sin(t), 3)
    assert c.a == pytest.approx((0.2, 0.0, 0.05, 0.0), abs=1e-14)
    assert c.b == pytest.approx((-0.01, 0.0, 0.0), abs=1e-14)

    e = StarCurve.from_any({"shape": "ellipse", "center": [0.1, 0.2], "axes": [0.2, 0.1], "order": 16})
    assert e.radius(np.array([0.0, np.pi / 2])) == pytest.approx([0.2, 0.1], abs=1e-4)
    circ = StarCurve.from_any({"shape": "circle", "center": [0.1, 0.2], "radius": 0.15})
    assert circ == StarCurve.circle((0.1, 0.2), 0.15)
    star = StarCurve.from_any({"center": [0.0, 0.1], "a": [0.14, 0.04], "b": [0.0]})
    assert star.to_dict() == {"center": [0.0, 0.1], "a": [0.14, 0.04], "b": [0.0]}


def test_containment():
    c = StarCurve.circle((0.1, 0.2), 0.2)
    assert contains_point(c, np.array([0.1, 0.2]))
    assert not contains_point(c, np.array([0.1, 0.45]))
    inside = contains_point(c, np.array([[0.1, 0.3], [0.35, 0.2], [0.0, 0.1]]))
    assert inside.tolist() == [True, False, True]


STAR = StarCurve((0.1, -0.05), (0.2, 0.05, 0.03), (0.02, -0.04))


def _winding_inside(c, x, n=1024):
    t = 2.0 * np.pi * np.arange(n) / n
    poly = c.points(t)
    out = np.zeros(x.shape[0], dtype=bool)
    for s in range(0, x.shape[0], 500):
        d = poly[None, :, :] - x[s:s + 500, None, :]
        ang = np.arctan2(d[..., 1], d[..., 0])
        step = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
        step = (step + np.pi) % (2.0 * np.pi) - np.pi
        out[s:s + 500] = np.abs(np.round(step.sum(axis=1) / (2.0 * np.pi))) == 1
    return out


def test_containment_agrees_with_winding_number(rng):
    x = STAR.center + rng.uniform(-0.35, 0.35, size=(10_000, 2))
    dx, dy = (x - STAR.center).T
    clear = np.abs(np.hypot(dx, dy) - STAR.radius(np.arctan2(dy, dx))) > 1e-3
    assert clear.sum() > 9_000
    inside = contains_point(STAR, x)
    assert inside[clear].tolist() == _winding_inside(STAR, x[clear]).tolist()
    assert 0 < inside.sum() < len(x)


def test_containment_near_the_boundary():
    t = 2.0 * np.pi * np.arange(360) / 360
    r = STAR.radius(t)
    ray = np.stack([np.cos(t), np.sin(t)], axis=-1)
    center = np.asarray(STAR.center)
    assert contains_point(STAR, center + 0.999 * r[:, None] * ray).all()
    assert not contains_point(STAR, center + 1.001 * r[:, None] * ray).any()


def test_area_and_centroid():
    area, centroid = area_centroid(StarCurve.circle((0.3, -0.1), 0.2))
    assert area == pytest.approx(math.pi * 0.04, rel=1e-13)
    assert centroid == pytest.approx((0.3, -0.1), abs=1e-14)

    a0, a1 = 0.3, 0.05
    area, centroid = area_centroid(StarCurve((0.0, 0.0), (a0, a1), (0.0,)))
    exact_area = math.pi * (a0 ** 2 + a1 ** 2 / 2.0)
    # ∫ r³ cos t dt for r = a0 + a1 cos t
    moment = math.pi * (3 * a0 ** 2 * a1 + 0.75 * a1 ** 3)
    assert area == pytest.approx(exact_area, rel=1e-13)
    assert centroid[0] == pytest.approx(moment / (3 * exact_area), rel=1e-12)
    assert centroid[1] == pytest.approx(0.0, abs=1e-14)


def test_interior_quadrature_integrates_area_and_first_moments():
    e = StarCurve.from_any({"shape": "ellipse", "center": [0.2, -0.1], "axes": [0.2, 0.1], "angle": 0.4})
    c = StarCurve.circle((-0.3, 0.3), 0.1)
    quad = interior_quadrature(InclusionSet.of([e, c], 16, 64))
    assert len(quad) == 2 * 16 * 64
    for idx, curve in enumerate((e, c)):
        sl = quad.object_slice(idx)
        area, centroid = area_centroid(curve)
        assert np.sum(quad.weights[sl]) == pytest.approx(area, rel=1e-12)
        mean = (quad.weights[sl] @ quad.nodes[sl]) / area
        assert mean == pytest.approx(centroid, abs=1e-12)
        assert np.all(quad.owner[sl] == idx)
        assert np.all(contains_point(curve, quad.nodes[sl]))


def test_empty_inclusion_set():
    s = InclusionSet.of([])
    assert len(interior_quadrature(s)) == 0
    assert s.params.size == 0
    assert not s.contains(np.array([0.0, 0.0]))[0]


def test_inclusion_set_params_split_per_object():
    s = InclusionSet.of([StarCurve.circle((0.3, 0.0), 0.1, order=1), StarCurve.circle((-0.3, 0.0), 0.12)])
    p = s.params
    assert p.tolist() == [0.1, 0.0, 0.0, 0.12]
    moved = s.with_params(p + np.array([0.01, 0.02, 0.0, -0.02]))
    assert moved.objects[0].a == pytest.approx((0.11, 0.02))
    assert moved.objects[1].a == pytest.approx((0.10,))
    assert moved.radial_order == s.radial_order


def test_merge_discs():
    separate = [Disc((0.0, 0.0), 0.1), Disc((0.5, 0.0), 0.1)]
    assert merge_discs(separate) == [(0, [0]), (1, [1])]

    chain = [Disc((0.0, 0.0), 0.1), Disc((0.6, 0.0), 0.1), Disc((0.15, 0.0), 0.1), Disc((0.3, 0.0), 0.1)]
    assert merge_discs(chain) == [(0, [0, 2, 3]), (1, [1])]

    tangent = [Disc((0.0, 0.0), 0.1), Disc((0.2, 0.0), 0.1)]
    assert merge_discs(tangent) == [(0, [0, 1])]
    assert merge_discs([]) == []


def test_merge_discs_ignores_input_order(rng):
    discs = [Disc((0.0, 0.0), 0.1), Disc((0.6, 0.0), 0.1), Disc((0.15, 0.0), 0.1), Disc((0.3, 0.0), 0.1),
             Disc((-0.4, 0.4), 0.05), Disc((0.65, 0.05), 0.04), Disc((-0.2, -0.5), 0.1)]

    def components(ds, labels):
        return {frozenset(labels[i] for i in members) for _, members in merge_discs(ds)}

    expected = components(discs, list(range(len(discs))))
    assert expected == {frozenset({0, 2, 3}), frozenset({1, 5}), frozenset({4}), frozenset({6})}
    for _ in range(10):
        perm = rng.permutation(len(discs))
        assert components([discs[i] for i in perm], perm.tolist()) == expected


def test_discs_centroid_is_area_weighted():
    c = discs_centroid([Disc((0.0, 0.0), 0.2), Disc((0.3, 0.0), 0.1)])
    assert c[0] == pytest.approx(0.3 * 0.01 / 0.05)
    assert c[1] == 0.0


def test_initial_curve_reproduces_single_disc():
    kappa, f, r = 10.0, 0.25 + 0.1j, 0.1
    lam = weight_from_radius(r, kappa, f)
    curve = initial_curve_from_discs([Disc((0.2, 0.1), 0.07)], lam, f, kappa, order=2)
    assert curve.center == pytest.approx((0.2, 0.1))
    assert curve.a[0] == pytest.approx(r, abs=1e-10)
    assert curve.order == 2
    with pytest.raises(InvalidCurveError):
        initial_curve_from_discs([], lam, f, kappa)


def test_overlap_detection():
    a = StarCurve.circle((0.0, 0.0), 0.2)
    b = StarCurve.circle((0.3, 0.0), 0.2)
    far = StarCurve.circle((0.0, 0.6), 0.1)
    assert curves_overlap(a, b)
    assert not curves_overlap(a, far)
    assert InclusionSet.of([a, b, far]).overlapping_pairs() == [(0, 1)]


def test_symmetric_difference_area():
    a = StarCurve.circle((0.1, 0.1), 0.2)
    assert symmetric_difference_area(a, a) == 0.0
    b = StarCurve.circle((0.1, 0.1), 0.25)
    assert symmetric_difference_area(a, b) == pytest.approx(math.pi * (0.25 ** 2 - 0.2 ** 2), rel=2e-2)


def test_polygon_area():
    square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    assert polygon_area(square) == 1.0
    t = 2 * np.pi * np.arange(2000) / 2000
    c = StarCurve.circle((0.0, 0.0), 0.3)
    assert polygon_area(c.points(t)) == pytest.approx(math.pi * 0.09, rel=1e-5)
