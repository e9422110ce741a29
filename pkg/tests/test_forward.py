import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import special

from nonlin_tomo.config import DomainConfig, Excitation
from nonlin_tomo.errors import SingularityError
from nonlin_tomo.forward import (BoundaryTrace, DiscreteMeasure, InclusionSource, arc_indices, boundary_nodes,
                                 extract_trace, flux_moment, free_space_field, fundamental, fundamental_field,
                                 green_impedance, harmonic_cascade, impedance_correction, neumann_from_dirichlet,
                                 plane_wave, plane_wave_normal, point_source_traces, resample_trace,
                                 solve_source_problem, source_moment, volume_potential_inside)
from nonlin_tomo.geometry import InclusionSet, StarCurve, interior_quadrature

from conftest import SMALL_DATA, SMALL_INVERSION

KAPPA = 10.0
DIRECTIONS = [np.array([math.cos(t), math.sin(t)]) for t in 2.0 * np.pi * np.arange(16) / 16]


def _point(x=0.2, y=0.1, w=1.0 + 0j):
    return DiscreteMeasure(np.array([[x, y]]), np.array([w]))


def test_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((2, 2)), np.ones(3))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([[0.1, 0.1], [0.1, 0.1]]), np.ones(2))
    mu = DiscreteMeasure.from_any({"points": [[0.1, 0.0]], "weights": [[1.0, -2.0]]})
    assert mu.weights[0] == 1.0 - 2.0j
    assert len(mu + _point()) == 2
    assert len(DiscreteMeasure.from_any(None)) == 0
    with pytest.raises(SingularityError):
        _point(1.0, 0.0).check_interior(1.0)


def test_empty_source_gives_zero_field(domain):
    fld = solve_source_problem(DiscreteMeasure.empty(), KAPPA, domain)
    assert np.all(fld.dirichlet == 0)
    assert np.all(fld.neumann == 0)


def test_field_at_source_location_is_rejected():
    with pytest.raises(SingularityError):
        free_space_field(_point(), KAPPA, np.array([[0.2, 0.1]]))


def test_impedance_condition_holds(domain):
    fld = solve_source_problem(_point(), KAPPA, domain)
    assert fld.beta == 1j * KAPPA
    residual = fld.neumann + fld.beta * fld.dirichlet
    assert np.max(np.abs(residual)) < 1e-10 * np.max(np.abs(fld.neumann))


def test_impedance_correction_reproduces_a_helmholtz_solution(domain):
    x0 = np.array([0.1, -0.2])

    def u(x):
        return special.j0(KAPPA * np.hypot(*(np.atleast_2d(x) - x0).T))

    _, pts, nu = boundary_nodes(domain.radius, domain.boundary_nodes)
    d = pts - x0
    r = np.hypot(d[:, 0], d[:, 1])
    dnu = -KAPPA * special.j1(KAPPA * r) * np.sum(d * nu, axis=1) / r
    interior = np.array([[0.0, 0.0], [0.3, 0.2], [-0.4, 0.1]])
    fld = impedance_correction(-u(pts), -dnu, KAPPA, domain, interior)
    assert np.max(np.abs(fld.dirichlet - u(pts))) < 1e-8
    assert np.max(np.abs(fld.neumann - dnu)) < 1e-8
    assert np.max(np.abs(fld.values - u(interior))) < 1e-8


@pytest.mark.parametrize("d", DIRECTIONS)
def test_moment_identity_for_point_source(domain, d):
    mu = DiscreteMeasure(np.array([[0.2, 0.1], [-0.3, 0.25]]), np.array([1.0 + 0.5j, -0.4j]))
    fld = solve_source_problem(mu, KAPPA, domain)
    _, pts, nu = boundary_nodes(domain.radius, domain.boundary_nodes)
    lhs = flux_moment(fld, plane_wave(KAPPA, d, pts), plane_wave_normal(KAPPA, d, pts, nu))
    rhs = source_moment(mu, KAPPA, lambda x: plane_wave(KAPPA, d, x))
    assert abs(lhs - rhs) < 1e-6 * KAPPA * np.sum(np.abs(mu.weights))


@pytest.mark.parametrize("d", DIRECTIONS)
def test_moment_identity_for_inclusion(domain, d):
    incl = InclusionSet.of([StarCurve.circle((0.2, 0.1), 0.15)], 16, 32)
    src = InclusionSource(incl, np.full(len(interior_quadrature(incl)), 0.3 + 0.1j))
    fld = solve_source_problem(src, KAPPA, domain)
    _, pts, nu = boundary_nodes(domain.radius, domain.boundary_nodes)
    lhs = flux_moment(fld, plane_wave(KAPPA, d, pts), plane_wave_normal(KAPPA, d, pts, nu))
    rhs = source_moment(src, KAPPA, lambda x: plane_wave(KAPPA, d, x))
    quad = src.rule()
    assert abs(lhs - rhs) < 1e-6 * KAPPA ** 3 * np.sum(quad.weights * np.abs(src.f))


def test_green_function_reciprocity(domain):
    x, y = (0.3, 0.1), (-0.2, 0.25)
    assert abs(green_impedance(x, y, KAPPA, domain) - green_impedance(y, x, KAPPA, domain)) < 1e-8


def test_volume_potential_solves_the_source_equation():
    c = StarCurve.circle((0.2, 0.1), 0.15)
    incl = InclusionSet.of([c], 16, 32)
    f = 0.3 + 0.1j
    src = InclusionSource(incl, np.full(len(interior_quadrature(incl)), f))
    h = 1e-3
    shifts = np.array([[0.0, 0.0], [h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
    for x, expected in [((0.2, 0.1), KAPPA ** 2 * f), ((0.25, 0.12), KAPPA ** 2 * f),
                        ((0.5, 0.1), 0.0), ((-0.1, 0.3), 0.0)]:
        u = free_space_field(src, KAPPA, np.asarray(x) + shifts)
        lap = (u[1] + u[2] + u[3] + u[4] - 4.0 * u[0]) / h ** 2
        assert abs(lap + KAPPA ** 2 * u[0] - expected) < 1e-3 * KAPPA ** 2 * abs(f)


def test_volume_potential_of_a_disc_matches_the_closed_form():
    a, center = 0.15, np.array([0.2, 0.1])
    incl = InclusionSet.of([StarCurve.circle(tuple(center), a)], 16, 32)
    quad = interior_quadrature(incl)
    f = 0.3 + 0.1j
    u = volume_potential_inside(InclusionSource(incl, np.full(len(quad), f), quad), KAPPA)
    r = np.hypot(*(quad.nodes - center).T)
    z = KAPPA * a
    expected = f * (1.0 - 0.5j * np.pi * z * special.hankel1(1, z) * special.j0(KAPPA * r))
    inner = r < 0.9 * a
    assert np.max(np.abs(u[inner] - expected[inner])) < 1e-2 * np.max(np.abs(expected))


def test_transducer_excitation_satisfies_the_impedance_condition(domain):
    exc = Excitation(kind="transducers", points=((0.8, 0.0), (0.0, -0.7)), weights=(1.0 + 0j, 0.5j))
    fld = fundamental_field(replace(domain, excitation=exc))
    assert fld.m == 1
    assert fld.kappa == pytest.approx(domain.kappa1)
    residual = fld.neumann + fld.beta * fld.dirichlet
    assert np.max(np.abs(residual)) < 1e-8 * np.max(np.abs(fld.neumann))
    with pytest.raises(ValueError):
        fundamental_field(replace(domain, excitation=Excitation(kind="horn")))


def test_plane_wave_excitation_is_the_background_field(domain):
    fld = fundamental_field(domain)
    _, pts, _ = boundary_nodes(domain.radius, domain.boundary_nodes)
    assert np.allclose(fld.dirichlet, plane_wave(domain.kappa1, np.array([1.0, 0.0]), pts, 1.0))


def _helmholtz_residual(u_fn, x, h=1e-3):
    shifts = np.array([[0.0, 0.0], [h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
    u = u_fn(np.asarray(x) + shifts)
    return (u[1] + u[2] + u[3] + u[4] - 4.0 * u[0]) / h ** 2 + KAPPA ** 2 * u[0], u[0]


def test_fundamental_solution_is_homogeneous_away_from_the_pole():
    for x in [(0.3, 0.0), (0.1, -0.45), (-0.6, 0.2)]:
        res, u0 = _helmholtz_residual(lambda p: fundamental(KAPPA, np.hypot(p[:, 0], p[:, 1])), x)
        assert abs(res) < 1e-3 * KAPPA ** 2 * abs(u0)


def test_point_source_field_solves_helmholtz_with_impedance(domain):
    mu = DiscreteMeasure(np.array([[0.2, 0.1]]), np.array([1.0 - 0.3j]))
    fld = solve_source_problem(mu, KAPPA, domain)
    for x in [(-0.3, 0.2), (0.5, -0.4), (0.0, 0.6)]:
        res, u0 = _helmholtz_residual(fld.evaluate, x)
        assert abs(res) < 1e-3 * KAPPA ** 2 * max(abs(u0), 1e-2)
    residual = fld.neumann + fld.beta * fld.dirichlet
    assert np.max(np.abs(residual)) < 1e-10 * np.max(np.abs(fld.neumann))
    cols = point_source_traces(mu.points, KAPPA, domain, "neumann")
    assert np.allclose(cols[:, 0] * mu.weights[0], fld.neumann, atol=1e-12)


def test_point_source_columns_match_single_solves(domain):
    pts = np.array([[0.2, 0.1], [-0.3, 0.25]])
    cols = point_source_traces(pts, KAPPA, domain, "neumann")
    assert cols.shape == (domain.boundary_nodes, 2)
    fld = solve_source_problem(_point(-0.3, 0.25), KAPPA, domain)
    assert np.allclose(cols[:, 1], fld.neumann, atol=1e-12)
    dcols = point_source_traces(pts, KAPPA, domain, "dirichlet")
    assert np.allclose(dcols[:, 1], fld.dirichlet, atol=1e-12)


def test_traces_converge_under_refinement(domain):
    fine = replace(domain, boundary_nodes=2 * domain.boundary_nodes)
    coarse = point_source_traces(np.array([[0.2, 0.1]]), KAPPA, domain)[:, 0]
    refined = point_source_traces(np.array([[0.2, 0.1]]), KAPPA, fine)[::2, 0]
    assert np.max(np.abs(coarse - refined)) < 1e-9 * np.max(np.abs(refined))


# ------------------------------------------------------------------ cascade

def test_cascade_without_inclusions_is_zero(domain):
    fields = harmonic_cascade(domain, InclusionSet.of([]), harmonics=3)
    assert [f.m for f in fields] == [1, 2, 3]
    assert np.all(fields[1].neumann == 0) and np.all(fields[2].neumann == 0)

    incl = InclusionSet.of([StarCurve.circle((0.2, 0.1), 0.15)])
    silent = harmonic_cascade(replace(domain, eta0=0.0), incl)
    assert np.all(silent[1].neumann == 0)
    assert silent[1].values.size == domain.radial_order * domain.angular_order


def test_cascade_rejects_unsupported_settings(domain):
    incl = InclusionSet.of([StarCurve.circle((0.2, 0.1), 0.15)])
    with pytest.raises(ValueError):
        harmonic_cascade(domain, incl, harmonics=4)
    with pytest.raises(ValueError):
        harmonic_cascade(domain, incl, variant="a")


def test_cascade_wavenumbers_and_eta_scaling(domain):
    incl = InclusionSet.of([StarCurve.circle((0.2, 0.1), 0.15)])
    one = harmonic_cascade(domain, incl, harmonics=3)
    two = harmonic_cascade(replace(domain, eta0=2.0), incl, harmonics=3)
    assert [f.kappa for f in one] == [5.0, 10.0, 15.0]
    assert np.allclose(two[1].neumann, 2.0 * one[1].neumann, rtol=1e-12, atol=0)
    assert np.allclose(two[2].neumann, 4.0 * one[2].neumann, rtol=1e-12, atol=0)
    assert np.max(np.abs(one[1].neumann)) > 0


def test_dirichlet_and_neumann_data_are_interchangeable(domain):
    incl = InclusionSet.of([StarCurve.circle((0.2, 0.1), 0.15)])
    p2 = harmonic_cascade(domain, incl)[1]
    g = neumann_from_dirichlet(p2.dirichlet, 2, domain.kappa1, domain.gamma)
    assert np.max(np.abs(g - p2.neumann)) < 1e-10 * np.max(np.abs(p2.neumann))


def test_data_and_inversion_resolutions_differ_slightly():
    incl = InclusionSet.of([StarCurve.circle((0.2, 0.1), 0.15)])
    data = harmonic_cascade(DomainConfig().with_resolution(SMALL_DATA), incl)[1]
    inv = harmonic_cascade(DomainConfig().with_resolution(SMALL_INVERSION), incl)[1]
    g_data = resample_trace(extract_trace(data), SMALL_INVERSION.boundary_nodes)
    g_inv = extract_trace(inv)
    diff = np.max(np.abs(g_data.samples - g_inv.samples)) / np.max(np.abs(g_inv.samples))
    assert 0.0 < diff < 1e-5


# ------------------------------------------------------------------ data

def test_arc_indices():
    assert arc_indices(8, 1.0).tolist() == list(range(8))
    assert arc_indices(8, 0.5).tolist() == [0, 1, 6, 7]
    assert arc_indices(8, 0.25, math.pi / 2).tolist() == [1, 2]
    with pytest.raises(ValueError):
        arc_indices(8, 0.0)
    with pytest.raises(ValueError):
        arc_indices(8, 1.5)


def _trace():
    return BoundaryTrace(2, "neumann", 0.5, 0.0, 8, 1.0, np.array([0, 1, 6, 7]),
                         np.array([1.0, 2.0, 3.0, 4.0], dtype=complex))


def test_trace_validation_and_norm():
    tr = _trace()
    assert tr.norm() == pytest.approx(math.sqrt(30.0 * 2.0 * math.pi / 8.0))
    assert tr.angles[1] == pytest.approx(math.pi / 4)
    with pytest.raises(ValueError):
        BoundaryTrace(2, "neumann", 0.0, 0.0, 8, 1.0, np.arange(1), np.zeros(1, dtype=complex))
    with pytest.raises(ValueError):
        BoundaryTrace(2, "robin", 1.0, 0.0, 8, 1.0, np.arange(1), np.zeros(1, dtype=complex))


def test_resample_trace():
    tr = _trace()
    assert resample_trace(tr, 8) is tr
    coarse = resample_trace(tr, 4)
    assert coarse.indices.tolist() == [0, 3]
    assert coarse.samples.tolist() == [1.0, 3.0]
    with pytest.raises(ValueError):
        resample_trace(tr, 3)


def test_extract_trace_on_arc(domain):
    fld = solve_source_problem(_point(), KAPPA, domain)
    tr = extract_trace(fld, 0.25, "dirichlet", math.pi)
    assert tr.samples.size == domain.boundary_nodes // 4
    assert np.allclose(tr.samples, fld.dirichlet[tr.indices])
    assert np.all(np.abs(tr.angles - math.pi) <= math.pi / 4 + 1e-12)
