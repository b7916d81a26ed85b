"""Chart fields, linearizations, critical points, and manifold graphs.

Oracles: central finite differences for every Jacobian, numpy's eigensolver
for every spectrum helper, and hand-derived eigenvalue formulas for the
finite equilibria.
"""

import cmath
import math

import numpy as np
import pytest

from conftest import ALL_CHARTS, fd_jacobian, random_states, spectrum_close

from blowprof import (
    ModelParams,
    coefficient_pack,
    critical_point,
    derived_constants,
    finite_critical_points,
    infinity_critical_points,
    validate_params,
)
from blowprof.errors import ManifoldError
from blowprof.vectorfields import (
    ChartId,
    PointId,
    chart_dim,
    chart_variables,
    eigenvalues_3x3,
    eval_field,
    jacobian,
    manifold_approx,
    normal_form_P3,
    p3_quadratic_tables,
)

P240 = validate_params(2.0, 4.0, 0.5)
P352 = validate_params(3.0, 5.0, 2.0)
P22 = validate_params(2.0, 2.0, 0.2)
TRIPLES = (P240, P352, P22, validate_params(1.5, 4.0, 1.0))


def closed_form_finite_spectra(params):
    """Independent eigenvalue formulas for the four finite equilibria."""
    m, N, sigma = params.m, params.N, params.sigma
    h0 = math.sqrt(2.0 / (m + 1.0))
    sbar = math.sqrt(2.0 * (m * N - N + 2.0))
    X2, Y2 = (m - 1.0) / sbar, 2.0 / sbar
    # the in-plane 2x2 block at the origin-profile point, entrywise closed form
    a11 = 0.5 * (m - 1.0) * Y2 - 2.0 * X2
    a12 = 0.5 * (m - 1.0) * X2
    a21 = -(N - 1.0) * Y2
    a22 = -(m + 1.0) * Y2 - (N - 1.0) * X2
    tr, det = a11 + a22, a11 * a22 - a12 * a21
    disc = cmath.sqrt(tr * tr - 4.0 * det)
    p2 = (
        0.5 * (tr + disc),
        0.5 * (tr - disc),
        (m - 1.0) * (sigma + 2.0) / sbar,
    )
    return {
        PointId.P0: ((m - 1.0) * h0 / 2.0, -(m + 1.0) * h0, (m - 1.0) * h0),
        PointId.P1: (-(m - 1.0) * h0 / 2.0, (m + 1.0) * h0, -(m - 1.0) * h0),
        PointId.P2: p2,
        PointId.P3: (0.0, 1j * math.sqrt(m - 1.0), -1j * math.sqrt(m - 1.0)),
    }


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------


def test_every_chart_is_three_dimensional_with_named_variables():
    assert len(ALL_CHARTS) == 9
    for chart in ALL_CHARTS:
        assert chart_dim(chart) == 3
        names = chart_variables(chart)
        assert len(names) == 3 and all(isinstance(s, str) and s for s in names)


def test_chart_ids_are_stable_integers():
    assert ChartId.MAIN == 0
    assert {int(c) for c in ALL_CHARTS} == set(range(9))


@pytest.mark.parametrize("chart", ALL_CHARTS)
def test_jacobian_matches_finite_differences(chart):
    rng = np.random.default_rng(1234 + int(chart))
    for params in (P240, P352):
        for state in random_states(20, rng):
            J = jacobian(chart, state, params)
            F = fd_jacobian(chart, state, params)
            scale = max(1.0, float(np.max(np.abs(J))))
            assert np.max(np.abs(J - F)) <= 1e-6 * scale


def test_eigenvalue_helper_agrees_with_numpy():
    rng = np.random.default_rng(7)
    for _ in range(60):
        J = rng.normal(size=(3, 3))
        mine = eigenvalues_3x3(J)
        ref = np.linalg.eigvals(J)
        assert spectrum_close(mine, ref, 1e-8 * max(1.0, float(np.max(np.abs(J)))))


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("params", TRIPLES)
def test_field_vanishes_at_every_critical_point(params):
    for pt in finite_critical_points(params) + infinity_critical_points(params):
        f = eval_field(pt.chart, pt.location, params)
        assert float(np.max(np.abs(f))) < 1e-12, (pt.id, f)


@pytest.mark.parametrize("params", TRIPLES)
def test_finite_spectra_match_closed_forms(params):
    want = closed_form_finite_spectra(params)
    for pt in finite_critical_points(params):
        assert spectrum_close(pt.spectrum, want[pt.id], 1e-10), pt.id


def test_p2_location_and_third_eigenvector():
    pack = coefficient_pack(P240)
    pt = critical_point(PointId.P2, P240)
    sbar = math.sqrt(2.0 * (2.0 * 4.0 - 4.0 + 2.0))
    assert pt.location == pytest.approx(((2 - 1) / sbar, 2 / sbar, 0.0), abs=1e-15)
    J = jacobian(ChartId.MAIN, pt.location, P240)
    e3 = np.asarray(pack.e3)
    resid = J @ e3 - pack.lambda3_P2 * e3
    assert float(np.max(np.abs(resid))) < 1e-10


def test_dims_count_the_spectrum_and_P3_is_nonhyperbolic():
    for params in TRIPLES:
        for pt in finite_critical_points(params) + infinity_critical_points(params):
            s, u, c = pt.dims
            assert s + u + c == 3
            assert s == sum(1 for lam in pt.spectrum if complex(lam).real < -1e-9)
            assert u == sum(1 for lam in pt.spectrum if complex(lam).real > 1e-9)
    p3 = critical_point(PointId.P3, P240)
    assert p3.dims == (0, 0, 3)


def test_escape_nodes_are_merged_and_coincide_at_N2():
    pts = {pt.id: pt for pt in infinity_critical_points(P240)}
    assert pts[PointId.Q4].merged_node and pts[PointId.Q5].merged_node
    assert not pts[PointId.Q1].merged_node
    # at N = 2 the second X-infinity point collapses onto the first
    pts2 = {pt.id: pt for pt in infinity_critical_points(P22)}
    assert pts2[PointId.Q5].location == pts2[PointId.Q1].location == (0.0, 0.0, 0.0)


def test_critical_point_lookup_roundtrip():
    for pid in PointId:
        pt = critical_point(pid, P240)
        assert pt.id is pid


# ---------------------------------------------------------------------------
# P3 normal form
# ---------------------------------------------------------------------------


def test_p3_radial_coefficient_changes_sign_at_critical_sigma():
    dc = derived_constants(P240)
    below = normal_form_P3(validate_params(2.0, 4.0, 0.5))
    above = normal_form_P3(validate_params(2.0, 4.0, 1.5))
    at = normal_form_P3(ModelParams(m=2.0, N=4.0, sigma=dc.sigma_c))
    assert below.rotation == pytest.approx(math.sqrt(1.0), rel=1e-12)
    assert below.radial_coef < 0.0 < above.radial_coef
    assert at.critical_case and at.tag is None
    assert below.K3 == pytest.approx(2.0, rel=1e-12)


def test_p3_quadratic_tables_shape():
    tabs = p3_quadratic_tables(P240)
    assert {"g200", "g110", "g101", "g020", "g011", "g002"} <= set(tabs)
    assert all(isinstance(v, complex) for v in tabs.values())


# ---------------------------------------------------------------------------
# invariant-manifold graphs
# ---------------------------------------------------------------------------


def test_manifold_coefficients_follow_the_shared_pack():
    pack = coefficient_pack(P240)
    up = manifold_approx(PointId.P1, 2, P240)
    dn = manifold_approx(PointId.P0, 2, P240)
    assert (up.a, up.b) == (pack.A, pack.B)
    assert (dn.a, dn.b) == (-pack.A, -pack.B)
    assert (up.c, up.d, up.e) == (dn.c, dn.d, dn.e) == (pack.C, pack.D, pack.E)


def test_manifold_validation():
    with pytest.raises(ValueError):
        manifold_approx(PointId.P2, 2, P240)
    with pytest.raises(ValueError):
        manifold_approx(PointId.P0, 4, P240)
    with pytest.raises(ManifoldError) as exc:
        manifold_approx(PointId.P0, 3, P240)  # order 3 needs the critical case
    assert exc.value.code == "ORDER_UNAVAILABLE"


def test_order2_defect_scales_cubically():
    ap = manifold_approx(PointId.P1, 2, P240)
    d1, d2 = ap.defect(1e-2 * 0.8, 1e-2 * 0.6), ap.defect(1e-3 * 0.8, 1e-3 * 0.6)
    slope = math.log10(d1 / d2)
    assert slope >= 2.9


def test_order3_graph_exists_at_critical_sigma():
    dc = derived_constants(P240)
    pc = ModelParams(m=2.0, N=4.0, sigma=dc.sigma_c)
    ap = manifold_approx(PointId.P0, 3, pc)
    assert ap.order == 3 and ap.f == -coefficient_pack(pc).F
