"""Validated parameters and the closed-form constants of the blow-up model.

The underlying PDE is ``u_t = Δ(u^m) + |x|^σ u^m`` with ``m > 1``; self-similar
solutions ``u = (T−t)^{−α} f(|x|)``, ``α = 1/(m−1)``, lead to a radial profile
ODE whose phase-space formulation drives everything else in this package.
Every module consumes the constants computed here, so there is exactly one
authoritative source for each closed form.

All quantities are plain numeric evaluations (no symbolic algebra).  Several
fields are implemented twice — a direct formula and an algebraically
equivalent factored/rescaled form — and the test-suite cross-checks the two
routes to 1e−12 relative; the pack itself always stores the direct route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError

__all__ = [
    "ModelParams",
    "DerivedConstants",
    "CoefficientPack",
    "validate_params",
    "derived_constants",
    "coefficient_pack",
    "K3_UNDEFINED_TOL",
]

#: |K1| below this threshold is treated as exactly the critical case, where
#: the hyperbola exponent K3 = −2(σ+2)(m−1)/K1 is undefined.
K3_UNDEFINED_TOL = 1e-14


@dataclass(frozen=True)
class ModelParams:
    """Validated parameter triple of the model.

    ``m``     diffusion exponent, strictly greater than 1 (slow diffusion).
    ``N``     dimension treated as a real parameter, strictly greater than 1.
    ``physical``  True when N is an integer ≥ 2 (an actual space dimension);
                  computed from N when not supplied.
    ``sigma`` weight exponent of the reaction term, non-negative.

    Use :func:`validate_params` to range-check inputs; direct construction
    skips validation.
    """

    m: float
    N: float
    sigma: float
    physical: bool = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.physical is None:
            object.__setattr__(
                self, "physical", self.N >= 2.0 and self.N == math.floor(self.N)
            )

    @property
    def alpha(self) -> float:
        """Self-similar time exponent α = 1/(m−1)."""
        return 1.0 / (self.m - 1.0)


def validate_params(m: float, N: float, sigma: float) -> ModelParams:
    """Validate ``(m, N, sigma)`` and return an immutable parameter record.

    Raises :class:`ParameterError` with code ``M_OUT_OF_RANGE`` (m ≤ 1),
    ``N_OUT_OF_RANGE`` (N ≤ 1) or ``SIGMA_NEGATIVE`` (σ < 0).
    """
    m = float(m)
    N = float(N)
    sigma = float(sigma)
    if not m > 1.0 or math.isnan(m) or math.isinf(m):
        raise ParameterError("M_OUT_OF_RANGE", f"need m > 1, got m={m}")
    if not N > 1.0 or math.isnan(N) or math.isinf(N):
        raise ParameterError("N_OUT_OF_RANGE", f"need N > 1, got N={N}")
    if not sigma >= 0.0 or math.isnan(sigma) or math.isinf(sigma):
        raise ParameterError("SIGMA_NEGATIVE", f"need sigma >= 0, got sigma={sigma}")
    physical = N >= 2.0 and N == math.floor(N)
    return ModelParams(m=m, N=N, sigma=sigma, physical=physical)


@dataclass(frozen=True)
class DerivedConstants:
    """Parameter-level constants (independent of any particular orbit).

    ``sigma_c``          critical weight exponent 2(N−1)(m−1)/(3m+1).
    ``h0``               vertical coordinate of the axis equilibria, sqrt(2/(m+1)).
    ``n_star``           dimension (4m+2)/(m+1) where the order-3 separating
                         coefficient changes sign; always in (3, 4).
    ``sigma_c_at_nstar`` value 2(m−1)/(m+1) of sigma_c at N = n_star.
    ``alpha``            blow-up rate exponent 1/(m−1).
    """

    sigma_c: float
    h0: float
    n_star: float
    sigma_c_at_nstar: float
    alpha: float


def derived_constants(params: ModelParams) -> DerivedConstants:
    """Evaluate the closed-form constants for validated parameters."""
    m, N = params.m, params.N
    return DerivedConstants(
        sigma_c=2.0 * (N - 1.0) * (m - 1.0) / (3.0 * m + 1.0),
        h0=math.sqrt(2.0 / (m + 1.0)),
        n_star=(4.0 * m + 2.0) / (m + 1.0),
        sigma_c_at_nstar=2.0 * (m - 1.0) / (m + 1.0),
        alpha=1.0 / (m - 1.0),
    )


@dataclass(frozen=True)
class CoefficientPack:
    """Every closed-form coefficient used by the geometric machinery.

    Sign conventions (with h0 = sqrt(2/(m+1)) and s̄ = sqrt(2(mN−N+2))):

    ``K1``      (3m+1)σ − 2(m−1)(N−1); negative below the critical σ.
    ``K2``      σ[(m−1)(N−2) − mσ].
    ``K3``      −2(σ+2)(m−1)/K1, the hyperbola exponent near the focus point;
                ``None`` when |K1| < K3_UNDEFINED_TOL (critical case).
    ``lambda3_P2``  third eigenvalue (m−1)(σ+2)/s̄ at the origin-profile point.
    ``l_sigma``     denominator polynomial of the third eigenvector there:
                    (m−1)σ² + (mN+6m−N−2)σ + 4(mN+2m−N+1).
    ``e3``          that eigenvector, (−(m−1)s̄/(2l), −(σ+3)s̄/l, 1).
    ``A..E``    second-order coefficients of the 2D invariant-manifold graphs
                at the axis equilibria: Z = ±(A X + B H) + C X² + D H² + E X H,
                with the upper sign at the stable (Y = −h0) point.
    ``F``       the order-3 coefficient (X³ term) valid exactly at σ = σ_c;
                vanishes at N = n_star and flips sign across it.
    ``X0_sq``   squared radius where the separatrix flux changes sign,
                −8mK1/((m+1)(σ+2)(2N+σ−2)(2N−σ−6)); ``None`` at σ = 2N−6
                (degenerate denominator); may be negative (no root).
    ``K_mNsigma``  2m(σ+1) − (N−2)(m−1), the node/saddle discriminant of the
                   second point at X-infinity.
    ``U0_sq``   σ²·X0_sq in the σ-rescaled frame U = σX (``None`` like X0_sq).
    ``U1_sq``   16m²σ²/((m+1)(σ+2)(2N+σ−2)), squared U-width of the surface
                section {Y=0}.
    ``X1_sq``   16m²(m−1)²/((m+1)R_sigma), squared X where the surface section
                along {Y = 2X/(m−1)} reaches Z = 0.
    ``L_sigma`` (m²−1)σ² + 2(m+1)(mN+4m−N)σ − 4(m−1)(3m−1)(N−1).
    ``R_sigma`` (m−1)²σ² + 2(m−1)(mN−N+4m)σ + 4(m−1)(5m−1)N + 4(3m²+6m−1).
    """

    K1: float
    K2: float
    K3: float | None
    lambda3_P2: float
    l_sigma: float
    e3: tuple[float, float, float]
    A: float
    B: float
    C: float
    D: float
    E: float
    F: float
    X0_sq: float | None
    K_mNsigma: float
    U0_sq: float | None
    U1_sq: float
    X1_sq: float
    L_sigma: float
    R_sigma: float


def coefficient_pack(params: ModelParams) -> CoefficientPack:
    """Evaluate the full coefficient pack for validated parameters.

    Pure function of the inputs: equal parameter triples give bit-identical
    packs.  Undefined quantities are ``None``, never NaN.
    """
    m, N, sigma = params.m, params.N, params.sigma
    h0 = math.sqrt(2.0 / (m + 1.0))
    sbar = math.sqrt(2.0 * (m * N - N + 2.0))

    K1 = (3.0 * m + 1.0) * sigma - 2.0 * (m - 1.0) * (N - 1.0)
    K2 = sigma * ((m - 1.0) * (N - 2.0) - m * sigma)
    K3 = None if abs(K1) < K3_UNDEFINED_TOL else -2.0 * (sigma + 2.0) * (m - 1.0) / K1

    lambda3_P2 = (m - 1.0) * (sigma + 2.0) / sbar
    l_sigma = (
        (m - 1.0) * sigma * sigma
        + (m * N + 6.0 * m - N - 2.0) * sigma
        + 4.0 * (m * N + 2.0 * m - N + 1.0)
    )
    e3 = (
        -(m - 1.0) * sbar / (2.0 * l_sigma),
        -(sigma + 3.0) * sbar / l_sigma,
        1.0,
    )

    A = 4.0 * m * (N - 1.0) * h0 / (3.0 * m + 1.0)
    B = 2.0 * m * h0
    C = (
        2.0
        * (N - 1.0)
        * (m * N - 4.0 * m * sigma - 6.0 * m - N + 2.0)
        / ((3.0 * m + 1.0) * (5.0 * m - 1.0))
    )
    D = -m
    E = -4.0 * m * (N + sigma - 1.0) / (5.0 * m - 1.0)
    F = (
        -4.0
        * (N - 1.0)
        * (m * N + 2.0 * m - N + 2.0)
        * (m * (N - 4.0) + N - 2.0)
        * math.sqrt(2.0 * (m + 1.0))
        / ((5.0 * m - 1.0) * (3.0 * m + 1.0) ** 3)
    )

    x0_den = (m + 1.0) * (sigma + 2.0) * (2.0 * N + sigma - 2.0) * (2.0 * N - sigma - 6.0)
    if x0_den == 0.0:
        X0_sq: float | None = None
        U0_sq: float | None = None
    else:
        X0_sq = -8.0 * m * K1 / x0_den
        U0_sq = sigma * sigma * X0_sq

    K_mNsigma = 2.0 * m * (sigma + 1.0) - (N - 2.0) * (m - 1.0)

    U1_sq = (
        16.0 * m * m * sigma * sigma / ((m + 1.0) * (sigma + 2.0) * (2.0 * N + sigma - 2.0))
    )

    R_sigma = (
        (m - 1.0) ** 2 * sigma * sigma
        + 2.0 * (m - 1.0) * (m * N - N + 4.0 * m) * sigma
        + 4.0 * (m - 1.0) * (5.0 * m - 1.0) * N
        + 4.0 * (3.0 * m * m + 6.0 * m - 1.0)
    )
    L_sigma = (
        (m * m - 1.0) * sigma * sigma
        + 2.0 * (m + 1.0) * (m * N + 4.0 * m - N) * sigma
        - 4.0 * (m - 1.0) * (3.0 * m - 1.0) * (N - 1.0)
    )
    X1_sq = 16.0 * m * m * (m - 1.0) ** 2 / ((m + 1.0) * R_sigma)

    return CoefficientPack(
        K1=K1,
        K2=K2,
        K3=K3,
        lambda3_P2=lambda3_P2,
        l_sigma=l_sigma,
        e3=e3,
        A=A,
        B=B,
        C=C,
        D=D,
        E=E,
        F=F,
        X0_sq=X0_sq,
        K_mNsigma=K_mNsigma,
        U0_sq=U0_sq,
        U1_sq=U1_sq,
        X1_sq=X1_sq,
        L_sigma=L_sigma,
        R_sigma=R_sigma,
    )
