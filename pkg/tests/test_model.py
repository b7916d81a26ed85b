"""Parameter validation and the closed-form coefficient layer.

Each derived quantity is checked against an independently written formula
(factored or rescaled differently from the implementation), and the
structural properties (signs, degeneracies, purity) are exercised across
random parameter ranges.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blowprof import (
    CoefficientPack,
    K3_UNDEFINED_TOL,
    ModelParams,
    coefficient_pack,
    derived_constants,
    validate_params,
)
from blowprof.errors import ParameterError

MS = st.floats(min_value=1.05, max_value=8.0, allow_nan=False)
NS = st.floats(min_value=1.1, max_value=12.0, allow_nan=False)
SIGMAS = st.floats(min_value=0.0, max_value=10.0, allow_nan=False)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def test_validate_accepts_interior_triple():
    p = validate_params(2.0, 4.0, 0.5)
    assert isinstance(p, ModelParams)
    assert (p.m, p.N, p.sigma) == (2.0, 4.0, 0.5)
    assert p.physical is True
    assert p.alpha == 1.0


def test_physical_flag_tracks_integer_dimensions():
    assert validate_params(2.0, 2.0, 0.0).physical is True
    assert validate_params(2.0, 3.0, 1.0).physical is True
    assert validate_params(2.0, 3.5, 1.0).physical is False
    assert validate_params(2.0, 1.5, 1.0).physical is False  # N < 2


@pytest.mark.parametrize(
    "m, N, sigma, code",
    [
        (1.0, 4.0, 0.5, "M_OUT_OF_RANGE"),
        (0.5, 4.0, 0.5, "M_OUT_OF_RANGE"),
        (math.nan, 4.0, 0.5, "M_OUT_OF_RANGE"),
        (math.inf, 4.0, 0.5, "M_OUT_OF_RANGE"),
        (2.0, 1.0, 0.5, "N_OUT_OF_RANGE"),
        (2.0, 0.0, 0.5, "N_OUT_OF_RANGE"),
        (2.0, math.nan, 0.5, "N_OUT_OF_RANGE"),
        (2.0, 4.0, -0.1, "SIGMA_NEGATIVE"),
        (2.0, 4.0, math.nan, "SIGMA_NEGATIVE"),
        (2.0, 4.0, math.inf, "SIGMA_NEGATIVE"),
    ],
)
def test_validate_rejects_out_of_range(m, N, sigma, code):
    with pytest.raises(ParameterError) as exc:
        validate_params(m, N, sigma)
    assert exc.value.code == code


def test_params_are_frozen():
    p = validate_params(2.0, 4.0, 0.5)
    with pytest.raises(Exception):
        p.m = 3.0


# ---------------------------------------------------------------------------
# derived constants
# ---------------------------------------------------------------------------


def test_derived_constants_reference_values():
    dc = derived_constants(validate_params(2.0, 4.0, 0.5))
    assert dc.sigma_c == 6.0 / 7.0  # exact in floating point
    assert dc.h0 == pytest.approx(math.sqrt(2.0 / 3.0), abs=0.0, rel=1e-15)
    assert dc.n_star == pytest.approx(10.0 / 3.0, rel=1e-15)
    assert dc.sigma_c_at_nstar == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert dc.alpha == 1.0


@given(m=MS, N=NS)
@settings(max_examples=80, deadline=None)
def test_critical_sigma_annihilates_K1(m, N):
    dc = derived_constants(validate_params(m, N, 0.0))
    pack = coefficient_pack(ModelParams(m=m, N=N, sigma=dc.sigma_c))
    # |K1| scale is (3m+1)*sigma_c; the cancellation must be exact to 1e-14
    assert abs(pack.K1) <= 1e-14 * max(1.0, (3.0 * m + 1.0) * dc.sigma_c)


@given(m=MS)
@settings(max_examples=60, deadline=None)
def test_separating_dimension_sits_between_3_and_4(m):
    dc = derived_constants(validate_params(m, 4.0, 0.0))
    assert 3.0 < dc.n_star < 4.0
    # sigma_c evaluated at N = n_star equals the recorded closed form
    dc2 = derived_constants(ModelParams(m=m, N=dc.n_star, sigma=0.0))
    assert dc2.sigma_c == pytest.approx(dc.sigma_c_at_nstar, rel=1e-12)


@given(m=MS, N=NS, sigma=SIGMAS)
@settings(max_examples=80, deadline=None)
def test_K1_sign_separates_sub_and_supercritical(m, N, sigma):
    p = ModelParams(m=m, N=N, sigma=sigma)
    dc = derived_constants(p)
    pack = coefficient_pack(p)
    if sigma < dc.sigma_c - 1e-12:
        assert pack.K1 < 0.0
    elif sigma > dc.sigma_c + 1e-12:
        assert pack.K1 > 0.0


# ---------------------------------------------------------------------------
# coefficient pack: dual-route algebra
# ---------------------------------------------------------------------------


@given(m=MS, N=NS, sigma=SIGMAS)
@settings(max_examples=100, deadline=None)
def test_pack_matches_refactored_formulas(m, N, sigma):
    p = ModelParams(m=m, N=N, sigma=sigma)
    pack = coefficient_pack(p)
    dc = derived_constants(p)
    sbar = math.sqrt(2.0 * (m * N - N + 2.0))

    def close(a, b, scale=1.0):
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b), scale)

    # K1 via the distance to the critical exponent
    close(pack.K1, (3.0 * m + 1.0) * (sigma - dc.sigma_c))
    # K2 expanded
    close(pack.K2, sigma * (m - 1.0) * (N - 2.0) - m * sigma * sigma)
    # third eigenvalue at the origin-profile point
    close(pack.lambda3_P2, (m - 1.0) * (sigma + 2.0) / sbar)
    # order-3 coefficient factored through (N - n_star)
    f_alt = (
        -4.0
        * (N - 1.0)
        * (m * N + 2.0 * m - N + 2.0)
        * (m + 1.0)
        * (N - dc.n_star)
        * math.sqrt(2.0 * (m + 1.0))
        / ((5.0 * m - 1.0) * (3.0 * m + 1.0) ** 3)
    )
    close(pack.F, f_alt)
    # rescaled-frame widths
    if pack.X0_sq is not None:
        close(pack.U0_sq, sigma * sigma * pack.X0_sq)
    close(
        pack.X1_sq * pack.R_sigma,
        16.0 * m * m * (m - 1.0) ** 2 / (m + 1.0),
        scale=abs(pack.X1_sq * pack.R_sigma),
    )
    # hyperbola exponent only away from the critical cancellation
    if abs(pack.K1) >= K3_UNDEFINED_TOL:
        close(pack.K3 * pack.K1, -2.0 * (sigma + 2.0) * (m - 1.0), scale=10.0)
    else:
        assert pack.K3 is None


def test_K3_undefined_exactly_at_critical_sigma():
    dc = derived_constants(validate_params(2.0, 4.0, 0.0))
    pack = coefficient_pack(ModelParams(m=2.0, N=4.0, sigma=dc.sigma_c))
    assert pack.K3 is None
    pack2 = coefficient_pack(validate_params(2.0, 4.0, 0.5))
    assert pack2.K3 == pytest.approx(2.0, rel=1e-14)  # -2(2.5)(1)/(-2.5)


def test_X0_sq_none_at_degenerate_denominator():
    # sigma = 2N - 6 makes the flux-root denominator vanish
    pack = coefficient_pack(validate_params(2.0, 4.0, 2.0))
    assert pack.X0_sq is None
    assert pack.U0_sq is None
    pack2 = coefficient_pack(validate_params(2.0, 4.0, 0.5))
    assert pack2.X0_sq is not None and pack2.X0_sq > 0.0


def test_e3_unit_third_component_and_orientation():
    pack = coefficient_pack(validate_params(2.0, 4.0, 0.5))
    assert pack.e3[2] == 1.0
    assert pack.e3[0] < 0.0 and pack.e3[1] < 0.0


@given(m=MS, N=NS, sigma=SIGMAS)
@settings(max_examples=50, deadline=None)
def test_pack_is_pure(m, N, sigma):
    p = ModelParams(m=m, N=N, sigma=sigma)
    a, b = coefficient_pack(p), coefficient_pack(p)
    assert isinstance(a, CoefficientPack)
    assert a == b  # bit-identical dataclass equality
