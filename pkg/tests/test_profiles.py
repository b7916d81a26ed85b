"""Profile reconstruction, endpoint expansions, the direct ODE oracle,
oscillation diagnostics, and the dimension-reducing self-map."""

import io
import math

import numpy as np
import pytest

from blowprof import (
    GTransform,
    LocalKind,
    ProfileCurve,
    SeedOrigin,
    SeedSpec,
    classify_fate,
    coefficient_pack,
    curve_to_phase,
    derived_constants,
    direct_ode_solve,
    g_transform,
    interface_slope_constant,
    local_expansion,
    ode_residual,
    profile_residual,
    reconstruct_profile,
    seed,
    self_map_check,
    self_map_eta,
    self_map_xi,
    spiral_exponent_fit,
    tail_exponent,
    validate_params,
)
from blowprof.errors import ChartError, ProfileError
from blowprof.integrate import Escape, IntegrationControls, integrate
from blowprof.vectorfields import ChartId

P240 = validate_params(2.0, 4.0, 0.5)
P22 = validate_params(2.0, 2.0, 0.2)


def shoot_curve(params, *, span=60.0, epsilon=1e-6, rel_tol=1e-10, eta_step=1e-3):
    chart, state = seed(SeedSpec(origin=SeedOrigin.P2_E3, epsilon=epsilon), params)
    traj = integrate(
        chart,
        state,
        params,
        IntegrationControls(max_span=span, rel_tol=rel_tol, abs_tol=rel_tol * 1e-2),
        [Escape(threshold=1e3)],
        record=True,
    )
    return reconstruct_profile(traj, eta_step=eta_step, source="shoot:P2_E3")


# ---------------------------------------------------------------------------
# endpoint expansions
# ---------------------------------------------------------------------------


def test_interface_slope_constant_closed_form():
    for m in (1.5, 2.0, 3.0):
        p = validate_params(m, 4.0, 0.5)
        want = math.sqrt((m - 1.0) / (2.0 * m * (m + 1.0)))
        assert interface_slope_constant(p) == pytest.approx(want, rel=1e-14)


def test_local_expansion_constant_rules():
    with pytest.raises(ProfileError) as exc:
        local_expansion(LocalKind.ORIGIN_P2, 1.0, P240)
    assert exc.value.code == "BAD_CONSTANTS"
    with pytest.raises(ProfileError):
        local_expansion(LocalKind.INTERFACE, None, P240)
    with pytest.raises(ProfileError):
        local_expansion(LocalKind.FLAT_Q1, -2.0, P240)
    with pytest.raises(ProfileError):
        local_expansion(LocalKind.LOG_Q1_N2, 1.0, P240)  # needs N = 2
    assert local_expansion(LocalKind.LOG_Q1_N2, 1.0, P22).constant == 1.0


def test_interface_expansion_shape():
    beh = local_expansion(LocalKind.INTERFACE, 1.0, P240)
    c = interface_slope_constant(P240)
    assert beh.vanishing_xi == pytest.approx(1.0 / c, rel=1e-14)
    xi = np.array([0.5, 1.0, 1.0 / c - 1e-9, 1.0 / c + 0.5])
    f = beh(xi)
    m = P240.m
    assert f[0] == pytest.approx((1.0 - c * 0.5) ** (2.0 / (m - 1.0)), rel=1e-12)
    assert f[-1] == 0.0  # vanishes beyond the support
    h = 1e-6
    fd = (beh.evaluate(1.0 + h) - beh.evaluate(1.0 - h)) / (2 * h)
    assert beh.derivative(1.0) == pytest.approx(fd, rel=1e-8)


def test_origin_and_tail_coefficients_are_pinned_by_the_equation():
    m, N, sigma = P240.m, P240.N, P240.sigma
    orig = local_expansion(LocalKind.ORIGIN_P2, None, P240)
    coef = ((m - 1.0) / (2.0 * m * (m * N - N + 2.0))) ** (1.0 / (m - 1.0))
    assert orig.evaluate(0.1) == pytest.approx(coef * 0.1 ** (2.0 / (m - 1.0)), rel=1e-12)
    tail = local_expansion(LocalKind.TAIL_P3, None, P240)
    assert tail.evaluate(10.0) == pytest.approx(
        (1.0 / (m - 1.0)) ** (1.0 / (m - 1.0)) * 10.0 ** (-sigma / (m - 1.0)), rel=1e-12
    )


def test_expansions_nearly_solve_the_equation_at_their_endpoint():
    # residual of the flat expansion near 0 is dominated by the omitted
    # higher-order terms, so it shrinks with xi
    beh = local_expansion(LocalKind.FLAT_Q1, 1.0, P22)
    xi = np.geomspace(1e-4, 1e-2, 50)
    res = ode_residual(xi, beh(xi), P22.m, P22.N, P22.sigma)
    assert np.max(np.abs(res)) < 1e-2
    assert np.max(np.abs(res[:25])) < np.max(np.abs(res[25:]))


# ---------------------------------------------------------------------------
# direct ODE solve
# ---------------------------------------------------------------------------


def test_interface_solve_hits_reference_touchdown():
    beh = local_expansion(LocalKind.INTERFACE, 1.0, P240)
    curve = direct_ode_solve(P240, beh, (0.5, 12.0), samples=400)
    ann = curve.annotations()
    assert ann["interface_xi"] == pytest.approx(2.0 * math.sqrt(3.0), rel=1e-6)
    assert curve.xi[0] >= 0.5 and curve.f[0] > 0.0
    # spline residual of the equation stays small in relative terms
    res = profile_residual(curve)
    m = P240.m
    scale = 1.0 + curve.f / (m - 1.0) + curve.xi**P240.sigma * curve.f**m
    assert float(np.max(np.abs(res) / scale)) < 1e-3


def test_interface_touchdown_slope_matches_the_constant():
    beh = local_expansion(LocalKind.INTERFACE, 1.0, P240)
    curve = direct_ode_solve(P240, beh, (0.5, 12.0), samples=400)
    c = interface_slope_constant(P240)
    xi0 = curve.annotations()["interface_xi"]
    pos = curve.f > 0.0
    w = curve.f[pos] ** ((P240.m - 1.0) / 2.0)
    s = xi0 - curve.xi[pos]
    sel = s <= 0.45
    coeffs = np.polyfit(s[sel], w[sel], 2)
    assert abs(coeffs[1] - c) / c < 0.01


def test_flat_origin_family_brackets_an_interface_transition():
    # in the plane dimension, small flat origins keep decaying while large
    # ones touch zero with a non-interface slope
    for a in (0.5, 1.0):
        beh = local_expansion(LocalKind.FLAT_Q1, a, P22)
        curve = direct_ode_solve(P22, beh, (1e-6, 40.0), samples=300)
        assert curve.xi[-1] == pytest.approx(40.0, rel=1e-9)
        assert np.all(curve.f > 0.0)
    for a in (2.0, 4.0):
        beh = local_expansion(LocalKind.FLAT_Q1, a, P22)
        with pytest.raises(ProfileError) as exc:
            direct_ode_solve(P22, beh, (1e-6, 40.0), samples=300)
        assert exc.value.code == "TOUCHDOWN"


def test_direct_solve_rejects_mismatched_anchor():
    beh = local_expansion(LocalKind.ORIGIN_P2, None, P22)
    with pytest.raises(ProfileError):
        direct_ode_solve(P240, beh, (1e-3, 5.0))
    with pytest.raises(ValueError):
        direct_ode_solve(P22, beh, (0.5, 0.1))


# ---------------------------------------------------------------------------
# reconstruction and the dual-route oracle
# ---------------------------------------------------------------------------


def test_reconstruction_inverts_the_phase_map():
    curve = shoot_curve(P240)
    assert isinstance(curve, ProfileCurve)
    assert np.all(np.diff(curve.xi) > 0.0)
    X, Y, Z = curve_to_phase(curve)
    m, sigma = P240.m, P240.sigma
    # X and Z invert exactly; Y only through finite differences
    assert np.allclose(
        Z, (m - 1.0) * curve.xi**sigma * curve.f ** (m - 1.0), rtol=1e-12
    )
    grad = np.gradient(curve.f ** ((m - 1.0) / 2.0), curve.xi, edge_order=2)
    want_Y = 2.0 * math.sqrt(m * (m - 1.0)) / (m - 1.0) * grad
    assert np.allclose(Y, want_Y, atol=1e-9)


def test_reconstruction_requires_the_primary_chart():
    traj = integrate(
        ChartId.CHART_Q1,
        (0.0, 1e-6, 1e-6),
        P240,
        IntegrationControls(max_span=1.0),
        record=True,
    )
    with pytest.raises(ChartError) as exc:
        reconstruct_profile(traj)
    assert exc.value.code == "BAD_CHART"


def test_phase_and_direct_routes_agree():
    curve = shoot_curve(P240, epsilon=1e-3, rel_tol=1e-12)
    beh = local_expansion(LocalKind.ORIGIN_P2, None, P240)
    hi = min(float(curve.xi[-1]), 8.0)
    direct = direct_ode_solve(
        P240, beh, (1e-5, hi), delta=1e-5, rel_tol=1e-12, abs_tol=1e-20, samples=500
    )
    lo = max(float(curve.xi[0]), float(direct.xi[0]))
    hi = min(float(curve.xi[-1]), float(direct.xi[-1]))
    mask = (direct.xi >= lo) & (direct.xi <= hi)
    interp = np.interp(direct.xi[mask], curve.xi, curve.f)
    rel = np.abs(interp - direct.f[mask]) / np.abs(direct.f[mask])
    assert float(np.max(rel)) <= 1e-6


def test_profile_curve_serialization():
    curve = shoot_curve(P240)
    doc = curve.to_jsonable()
    assert doc["n"] == curve.n
    buf = io.StringIO()
    curve.to_csv(buf)
    text = buf.getvalue()
    head, *rows = text.strip().splitlines()
    assert head.startswith("# blowprof ")
    assert " profile " in head and " m=2 " in head
    assert rows[0] == "xi,f"
    assert len(rows) == 1 + curve.n


# ---------------------------------------------------------------------------
# oscillation diagnostics
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def long_tail_curve():
    return shoot_curve(P240, span=200.0)


def test_tail_oscillations_are_damped(long_tail_curve):
    gt = g_transform(long_tail_curve)
    assert isinstance(gt, GTransform)
    assert len(gt.extrema) >= 10
    assert gt.amplitudes_strictly_decreasing
    assert np.all(np.diff(gt.energies) < 0.0)
    # effective dimension of the transformed equation
    pack = coefficient_pack(P240)
    want_nbar = 1.0 - pack.K1 / ((P240.m - 1.0) * (P240.sigma + 2.0))
    assert gt.nbar == pytest.approx(want_nbar, rel=1e-12)


def test_transformed_equation_has_unit_dimension_at_critical_sigma():
    pc = validate_params(2.0, 4.0, derived_constants(P240).sigma_c)
    xi = np.geomspace(0.1, 10.0, 64)
    f = local_expansion(LocalKind.TAIL_P3, None, pc)(xi)
    gt = g_transform(ProfileCurve(xi=xi, f=f, params=pc, source="synthetic"))
    assert gt.nbar == pytest.approx(1.0, abs=1e-12)


def test_tail_exponent_recovers_the_hyperbola_power(long_tail_curve):
    slope = tail_exponent(long_tail_curve)
    want = -P240.sigma / (P240.m - 1.0)
    assert abs(slope - want) / abs(want) < 0.02


def test_spiral_exponent_fit_matches_the_hyperbola_exponent():
    rep = classify_fate(
        SeedSpec(origin=SeedOrigin.P2_E3),
        P240,
        controls=IntegrationControls(max_span=200.0),
    )
    fit, want = spiral_exponent_fit(rep.crossings, P240)
    assert want == pytest.approx(2.0, rel=1e-12)
    assert abs(fit - want) / abs(want) < 0.1


# ---------------------------------------------------------------------------
# self-map at the separating dimension
# ---------------------------------------------------------------------------


def test_self_map_variable_change_closed_form():
    xi = np.array([0.3, 1.0, 2.5])
    eta = self_map_eta(xi, 2.0)
    assert np.allclose(eta, 0.75 * xi ** (4.0 / 3.0), rtol=1e-14)
    assert np.allclose(self_map_xi(eta, 2.0), xi, rtol=1e-14)


def test_self_map_audit_is_exact_at_the_separating_dimension():
    rep = self_map_check(2.0)
    assert rep.params.N == pytest.approx(10.0 / 3.0, rel=1e-14)
    assert rep.params.sigma == pytest.approx(2.0 / 3.0, rel=1e-14)
    assert rep.sup_residual < 1e-4
    assert rep.roundtrip_error < 1e-10
    doc = rep.to_jsonable()
    assert doc["sup_residual"] == rep.sup_residual
