"""Separatrix surface, flux factorization, cycle family, sign certificates.

Oracles: finite differences for the surface normal, the integrator for
conservation of the cycle constant, and re-derived closed forms for the
flux roots.
"""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blowprof import (
    ModelParams,
    SeparatrixSurface,
    coefficient_pack,
    cycle_eval,
    derived_constants,
    proof_certificates,
    validate_params,
)
from blowprof.integrate import IntegrationControls, integrate
from blowprof.vectorfields import ChartId, eval_field

P240 = validate_params(2.0, 4.0, 0.5)
P22 = validate_params(2.0, 2.0, 0.2)

MS = st.floats(min_value=1.05, max_value=6.0, allow_nan=False)
NS = st.floats(min_value=1.1, max_value=10.0, allow_nan=False)
SIGMAS = st.floats(min_value=0.0, max_value=8.0, allow_nan=False)
COORDS = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


# ---------------------------------------------------------------------------
# surface
# ---------------------------------------------------------------------------


@given(m=MS, N=NS, sigma=SIGMAS, X=COORDS, Y=COORDS)
@settings(max_examples=100, deadline=None)
def test_surface_two_evaluation_routes_agree(m, N, sigma, X, Y):
    surf = SeparatrixSurface(ModelParams(m=m, N=N, sigma=sigma))
    a, b = surf.evaluate(X, Y), surf.completed_square_eval(X, Y)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def test_surface_height_at_origin_axis():
    # at X = Y = 0 the surface sits at its apex 2m/(m+1)
    surf = SeparatrixSurface(P240)
    assert surf.evaluate(0.0, 0.0) == pytest.approx(4.0 / 3.0, rel=1e-15)


def test_elliptic_classification():
    # (2N + sigma - 2)(sigma + 6 - 2N) changes sign with the section shape
    assert SeparatrixSurface(P22).elliptic is True
    assert SeparatrixSurface(P240).elliptic is False


def test_normal_matches_finite_differences():
    surf = SeparatrixSurface(P240)
    rng = np.random.default_rng(5)
    h = 1e-7
    for _ in range(20):
        X, Y = rng.uniform(0.0, 1.5), rng.uniform(-1.2, 1.2)
        n = surf.normal_main(X, Y)
        gx = (surf.evaluate(X + h, Y) - surf.evaluate(X - h, Y)) / (2 * h)
        gy = (surf.evaluate(X, Y + h) - surf.evaluate(X, Y - h)) / (2 * h)
        # normal is proportional to (-dS/dX, -dS/dY, 1)
        assert n[2] != 0.0
        assert n[0] / n[2] == pytest.approx(-gx, abs=1e-5)
        assert n[1] / n[2] == pytest.approx(-gy, abs=1e-5)


def test_gap_and_above_are_consistent():
    surf = SeparatrixSurface(P240)
    Z0 = surf.evaluate(0.3, 0.2)
    assert surf.gap(0.3, 0.2, Z0 + 0.1) * surf.gap(0.3, 0.2, Z0 - 0.1) < 0.0
    assert surf.above((0.3, 0.2, Z0 + 0.1)) != surf.above((0.3, 0.2, Z0 - 0.1))


# ---------------------------------------------------------------------------
# flux factorization
# ---------------------------------------------------------------------------


def test_normal_dot_field_depends_on_X_alone():
    surf = SeparatrixSurface(P240)
    rng = np.random.default_rng(11)
    for _ in range(100):
        X, Y = rng.uniform(0.0, 2.0), rng.uniform(-1.5, 1.5)
        Z = surf.evaluate(X, Y)
        dot = float(np.dot(surf.normal_main(X, Y), eval_field(ChartId.MAIN, (X, Y, Z), P240)))
        flux = surf.flux(X)
        assert abs(dot - flux) <= 1e-10 * (1.0 + abs(flux))
        assert abs(surf.gap_rate(X, Y) + flux) <= 1e-10 * (1.0 + abs(flux))


def test_flux_vanishes_at_the_closed_form_root():
    pack = coefficient_pack(P240)
    surf = SeparatrixSurface(P240)
    assert surf.flux(0.0) == 0.0
    X0 = math.sqrt(pack.X0_sq)
    assert abs(surf.flux(X0)) <= 1e-12
    # cubic coefficient: flux(X)/X^3 for large X
    c3 = -(2 * 4 - 0.5 - 6) * (2 * 4 + 0.5 - 2) * (0.5 + 2) / (16 * 2)
    big = 1e4
    assert surf.flux(big) / big**3 == pytest.approx(c3, rel=1e-6)


def test_rescaled_flux_matches_flux():
    surf = SeparatrixSurface(P240)
    sigma = P240.sigma
    for U in (0.05, 0.3, 1.0):
        # U = sigma X; the rescaled form absorbs sigma^3
        assert surf.rescaled_flux(U) == pytest.approx(
            surf.flux(U / sigma) * sigma**3, rel=1e-12
        )


# ---------------------------------------------------------------------------
# cycle family on the invariant plane
# ---------------------------------------------------------------------------


@given(
    Z=st.floats(min_value=1e-6, max_value=1.2, allow_nan=False),
    K=st.floats(min_value=0.0, max_value=0.05, allow_nan=False),
)
@settings(max_examples=80, deadline=None)
def test_cycle_eval_closed_form(Z, K):
    m = P240.m
    p = (m + 1.0) / (m - 1.0)
    want = 2.0 / (m + 1.0) - Z / m - K * Z ** (-p)
    assert cycle_eval(Z, K, P240) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_cycle_eval_rejects_nonpositive_Z():
    with pytest.raises(ValueError):
        cycle_eval(0.0, 0.0, P240)
    with pytest.raises(ValueError):
        cycle_eval(-0.5, 0.1, P240)


def test_zero_constant_cycle_passes_through_axis_points():
    dc = derived_constants(P240)
    assert cycle_eval(1e-12, 0.0, P240) == pytest.approx(dc.h0**2, abs=1e-11)


def test_cycle_constant_is_conserved_along_orbits():
    # K(Y, Z) = (2/(m+1) - Y^2 - Z/m) Z^{(m+1)/(m-1)} is a first integral
    # of the flow restricted to {X = 0}
    m = P240.m
    p = (m + 1.0) / (m - 1.0)

    def K_of(state):
        _, Y, Z = state
        return (2.0 / (m + 1.0) - Y * Y - Z / m) * Z**p

    y0 = (0.0, 0.1, 0.5)
    K0 = K_of(y0)
    traj = integrate(
        ChartId.MAIN,
        y0,
        P240,
        IntegrationControls(max_span=30.0, rel_tol=1e-12, abs_tol=1e-14),
        record=True,
    )
    vals = np.apply_along_axis(K_of, 1, traj.states)
    assert np.max(np.abs(vals - K0)) <= 1e-9 * max(1.0, abs(K0))
    # and cycle_eval reproduces Y^2 on that orbit
    for state in traj.states[:: max(1, len(traj.states) // 7)]:
        assert cycle_eval(state[2], K0, P240) == pytest.approx(
            state[1] ** 2, abs=1e-9
        )


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def test_certificates_pass_at_reference_points():
    for params in (P240, P22, validate_params(2.0, 3.0, 0.4), validate_params(2.0, 5.0, 4.0)):
        rep = proof_certificates(params)
        assert rep.all_in_range_pass, [
            c.claim for c in rep.claims if c.in_range and c.passed is False
        ]


def test_certificate_claims_have_consistent_flags():
    rep = proof_certificates(P240)
    for c in rep.claims:
        if not c.in_range or c.value is None:
            assert c.passed is None
        else:
            assert c.passed is (c.value > 0.0 if c.expected_sign == "positive" else c.value < 0.0)


def test_order3_coefficient_claims_flip_across_the_separating_dimension():
    low = proof_certificates(validate_params(2.0, 3.0, 0.5))
    high = proof_certificates(validate_params(2.0, 4.0, 0.5))
    assert low["F_coef_positive_low_dim"].in_range and low["F_coef_positive_low_dim"].passed
    assert not low["F_coef_negative_high_dim"].in_range
    assert high["F_coef_negative_high_dim"].in_range and high["F_coef_negative_high_dim"].passed
    assert not high["F_coef_positive_low_dim"].in_range
    assert low["F_coef_positive_low_dim"].value > 0.0 > high["F_coef_negative_high_dim"].value


def test_certificate_report_serializes():
    rep = proof_certificates(P240)
    doc = rep.to_jsonable()
    assert isinstance(doc, list) and len(doc) == len(rep.claims)
    text = json.dumps(doc)
    assert "expected_sign" in text
