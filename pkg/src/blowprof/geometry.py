"""Separatrix surface, periodic-orbit family, and sign-claim certificates.

The surface Z = S(X, Y) is the quadric that separates orbits entering the
interface point from those leaving the origin-regular point; its one-sided
flow sign is a function of X alone (``flux``), a cancellation this module
exposes and the test-suite certifies.  ``proof_certificates`` evaluates every
closed-form sign claim used by the connection arguments, each tagged with the
parameter range on which it is asserted.

For claims asserted only "for σ (or 1/σ) sufficiently small", the reported
range carries the sharp sign-change boundary computed from the same closed
forms (quadratic roots, or bracketed root finding); the substance of those
claims is certified by the cross-checks in the test-suite (formula against
direct surface geometry), while the reported values let parameter sweeps
bracket each boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, derived_constants, coefficient_pack
from .vectorfields import ChartId, PointId, critical_point, eval_field

__all__ = [
    "SeparatrixSurface",
    "cycle_eval",
    "CertificateClaim",
    "CertificateReport",
    "proof_certificates",
]


@dataclass(frozen=True)
class SeparatrixSurface:
    """The separating quadric Z = S(X, Y) and its flow machinery.

    ``evaluate``       S(X, Y) = −(σ+2)(2N+σ−2)X²/(8m) − (2N+σ−2)XY/2 − mY² + 2m/(m+1)
    ``normal``         outward-in-(−Z) normal at a surface point, in the
                       (X, H = Y + h0) frame of the interface-point system
    ``flux``           F(X), the normal·field product on the surface; its sign
                       alone decides crossing direction
    ``rescaled_flux``  the same product in the frame U = σX used for large σ
    ``elliptic``       True when the quadric is an elliptic paraboloid,
                       i.e. (2N+σ−2)(σ+6−2N) > 0
    """

    params: ModelParams

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, X, Y):
        m, N, sigma = self.params.m, self.params.N, self.params.sigma
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = (
            2.0 * m / (m + 1.0)
            - (sigma + 2.0) * (2.0 * N + sigma - 2.0) / (8.0 * m) * X * X
            - 0.5 * (2.0 * N + sigma - 2.0) * X * Y
            - m * Y * Y
        )
        return out if out.shape else float(out)

    def completed_square_eval(self, X, Y):
        """The same height via the completed-square (paraboloid) form.

        Z = 2m/(m+1) − m[Y + (2N+σ−2)X/(4m)]² − (2N+σ−2)(σ+6−2N)X²/(16m);
        identical to :meth:`evaluate` as an algebraic identity.
        """
        m, N, sigma = self.params.m, self.params.N, self.params.sigma
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = (
            2.0 * m / (m + 1.0)
            - m * (Y + (2.0 * N + sigma - 2.0) / (4.0 * m) * X) ** 2
            - (2.0 * N + sigma - 2.0) * (sigma + 6.0 - 2.0 * N) / (16.0 * m) * X * X
        )
        return out if out.shape else float(out)

    @property
    def elliptic(self) -> bool:
        m, N, sigma = self.params.m, self.params.N, self.params.sigma
        return (2.0 * N + sigma - 2.0) * (sigma + 6.0 - 2.0 * N) > 0.0

    def gap(self, X, Y, Z):
        """Signed height above the surface: positive in the exterior region."""
        return Z - self.evaluate(X, Y)

    def above(self, state) -> bool:
        X, Y, Z = state
        return bool(self.gap(X, Y, Z) > 0.0)

    # -- normal and flux ----------------------------------------------------

    def normal(self, X: float, H: float) -> np.ndarray:
        """Normal vector at a surface point, (X, H)-parametrized (H = Y + h0).

        The third component is −1: the normal points downward in Z, so a
        positive flux means the field pushes through the surface downward.
        """
        m, N, sigma = self.params.m, self.params.N, self.params.sigma
        h0 = derived_constants(self.params).h0
        return np.array(
            [
                -(sigma + 2.0) * (2.0 * N + sigma - 2.0) / (4.0 * m) * X
                - 0.5 * (2.0 * N + sigma - 2.0) * H
                + 0.5 * (2.0 * N + sigma - 2.0) * h0,
                -2.0 * m * H - 0.5 * (2.0 * N + sigma - 2.0) * X + 2.0 * m * h0,
                -1.0,
            ]
        )

    def normal_main(self, X: float, Y: float) -> np.ndarray:
        """The same normal with the second slot indexed by Y instead of H."""
        h0 = derived_constants(self.params).h0
        return self.normal(X, Y + h0)

    def flux(self, X):
        """F(X) = −K1·X/(2(m+1)) − (2N−σ−6)(2N+σ−2)(σ+2)X³/(16m).

        Equals normal·field at every surface point (X, Y, S(X, Y)) — the
        Y-dependence cancels, which the test-suite certifies pointwise.
        """
        m, N, sigma = self.params.m, self.params.N, self.params.sigma
        K1 = coefficient_pack(self.params).K1
        X = np.asarray(X, dtype=float)
        out = (
            -K1 / (2.0 * (m + 1.0)) * X
            - (2.0 * N - sigma - 6.0)
            * (2.0 * N + sigma - 2.0)
            * (sigma + 2.0)
            / (16.0 * m)
            * X**3
        )
        return out if out.shape else float(out)

    def rescaled_flux(self, U):
        """Flux in the U = σX frame: K(λ)U/(2(m+1)) − (2λ+1)(2λN−2λ+1)(2λN−6λ−1)U³/(16m).

        Identical in value to ``flux(U/σ)``; kept as an independent route for
        the large-σ certificates.  Requires σ > 0.
        """
        m, N, sigma = self.params.m, self.params.N, self.params.sigma
        if sigma <= 0.0:
            raise ValueError("rescaled flux requires sigma > 0")
        lam = 1.0 / sigma
        K_lam = 2.0 * lam * (m - 1.0) * (N - 1.0) - (3.0 * m + 1.0)
        U = np.asarray(U, dtype=float)
        out = (
            K_lam / (2.0 * (m + 1.0)) * U
            - (2.0 * lam + 1.0)
            * (2.0 * lam * N - 2.0 * lam + 1.0)
            * (2.0 * lam * N - 6.0 * lam - 1.0)
            / (16.0 * m)
            * U**3
        )
        return out if out.shape else float(out)

    def gap_rate(self, X: float, Y: float) -> float:
        """d/dη of (Z_orbit − S) for the orbit through the surface point.

        Equals −flux(X) identically; computed here through the field for use
        as the independent route in barrier tests.
        """
        state = np.array([X, Y, self.evaluate(X, Y)])
        f = eval_field(ChartId.MAIN, state, self.params)
        m, N, sigma = self.params.m, self.params.N, self.params.sigma
        s_x = -(sigma + 2.0) * (2.0 * N + sigma - 2.0) / (4.0 * m) * X - 0.5 * (
            2.0 * N + sigma - 2.0
        ) * Y
        s_y = -0.5 * (2.0 * N + sigma - 2.0) * X - 2.0 * m * Y
        return float(f[2] - s_x * f[0] - s_y * f[1])


def cycle_eval(Z: float, K: float, params: ModelParams) -> float:
    """Squared Y along the closed-orbit family in the {X=0} plane.

    Y² = 2/(m+1) − Z/m − K·Z^{−(m+1)/(m−1)} for Z > 0.  K = 0 gives the
    separatrix member through the two axis equilibria; K > 0 gives the nested
    cycles around the center; K < 0 members leave through {Z=0} and are not
    periodic.  The returned value may be negative (no real Y at that height).
    """
    m = params.m
    if not Z > 0.0:
        raise ValueError("cycle family is defined for Z > 0")
    return 2.0 / (m + 1.0) - Z / m - K * Z ** (-(m + 1.0) / (m - 1.0))


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class CertificateClaim:
    """One evaluated sign claim.

    ``passed`` is True/False only when the parameters lie in the claim's
    asserted range; None otherwise (claim not asserted there).
    """

    claim: str
    value: float | None
    expected_sign: str  # "positive" | "negative"
    range: str
    in_range: bool
    passed: bool | None

    def to_jsonable(self) -> dict:
        return {
            "claim": self.claim,
            "value": self.value,
            "expected_sign": self.expected_sign,
            "range": self.range,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class CertificateReport:
    params: ModelParams
    claims: tuple[CertificateClaim, ...]

    def __getitem__(self, claim_id: str) -> CertificateClaim:
        for c in self.claims:
            if c.claim == claim_id:
                return c
        raise KeyError(claim_id)

    @property
    def all_in_range_pass(self) -> bool:
        return all(c.passed for c in self.claims if c.in_range)

    def to_jsonable(self) -> list:
        return [c.to_jsonable() for c in self.claims]

    def to_json(self, path) -> None:
        text = json.dumps(self.to_jsonable(), indent=2)
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)


def _make_claim(claim_id, value, expected, range_str, in_range) -> CertificateClaim:
    if value is None or not in_range:
        passed = None
    elif expected == "positive":
        passed = bool(value > 0.0)
    else:
        passed = bool(value < 0.0)
    return CertificateClaim(
        claim=claim_id,
        value=None if value is None else float(value),
        expected_sign=expected,
        range=range_str,
        in_range=bool(in_range),
        passed=passed,
    )


def _smallest_positive_root(coeffs) -> float:
    """Smallest strictly positive real root of a polynomial, or +inf."""
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if len(coeffs) < 2:
        return math.inf
    roots = np.roots(coeffs)
    best = math.inf
    for r in roots:
        if abs(r.imag) < 1e-9 * max(1.0, abs(r.real)) and r.real > 0.0:
            best = min(best, float(r.real))
    return best


def _bracketed_sigma_root(fn, lo: float, hi: float) -> float:
    """Smallest sign change of ``fn`` on (lo, hi) via scan + brentq, or hi."""
    from scipy.optimize import brentq

    n_scan = 64
    grid = np.linspace(lo, hi, n_scan + 1)
    vals = [fn(s) for s in grid]
    for i in range(n_scan):
        if vals[i] == 0.0:
            return float(grid[i])
        if (vals[i] > 0.0) != (vals[i + 1] > 0.0):
            return float(brentq(fn, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-14))
    return hi


def proof_certificates(params: ModelParams) -> CertificateReport:
    """Evaluate every closed-form sign claim of the connection arguments.

    Claims cover: the separating-manifold difference signs at both axis
    equilibria; the flux-sign window X² < X0² and its relation to the
    origin-profile point; the trapping-region quantities (R, X1, L, Z0,
    section maxima) for small σ; the critical-σ quantities (surface height at
    the origin-profile point, cubic flux coefficient, order-3 manifold
    coefficient on both sides of the separating dimension); and the large-σ
    quantities (U0², U1²−U0², M−1, B, the no-return margin).  Values are
    always evaluated; ``passed`` is set only in the asserted range.
    """
    m, N, sigma = params.m, params.N, params.sigma
    dc = derived_constants(params)
    pack = coefficient_pack(params)
    surf = SeparatrixSurface(params)
    sigma_c, h0, n_star = dc.sigma_c, dc.h0, dc.n_star
    sbar = math.sqrt(2.0 * (m * N - N + 2.0))
    XP2 = (m - 1.0) / sbar
    YP2 = 2.0 / sbar
    claims: list[CertificateClaim] = []

    # --- axis-equilibria manifold-vs-surface leading coefficients ----------
    dif_lead = -pack.K1 * h0 / (2.0 * (3.0 * m + 1.0))
    rng = f"0 < sigma < sigma_c = {sigma_c:.12g}"
    in_r = 0.0 < sigma < sigma_c
    claims.append(
        _make_claim("dif_P1_leading_positive", dif_lead, "positive", rng, in_r)
    )
    claims.append(
        _make_claim("dif_P0_leading_negative", -dif_lead, "negative", rng, in_r)
    )

    # --- small-sigma trapping region (requires N >= 4) ----------------------
    sigma_hi = min(sigma_c, 2.0 * (N - 3.0)) if N > 3.0 else 0.0
    in_strip = N >= 4.0 and 0.0 < sigma < sigma_hi
    claims.append(
        _make_claim(
            "X0_sq_positive",
            pack.X0_sq,
            "positive",
            f"N>=4 and 0 < sigma < min(sigma_c, 2(N-3)) = {sigma_hi:.12g}",
            in_strip,
        )
    )

    if N >= 4.0 and sigma_hi > 0.0:

        def _x0_gap(s):
            K1s = (3.0 * m + 1.0) * s - 2.0 * (m - 1.0) * (N - 1.0)
            den = (m + 1.0) * (s + 2.0) * (2.0 * N + s - 2.0) * (2.0 * N - s - 6.0)
            return -8.0 * m * K1s / den - XP2 * XP2

        eps = 1e-9 * sigma_hi
        sigma_x0 = _bracketed_sigma_root(_x0_gap, eps, sigma_hi - eps)
    else:
        sigma_x0 = 0.0
    x0_gap_val = None if pack.X0_sq is None else pack.X0_sq - XP2 * XP2
    claims.append(
        _make_claim(
            "XP2_below_X0_sq",
            x0_gap_val,
            "positive",
            f"N>=4 and 0 < sigma < {sigma_x0:.12g} (asserted for sigma small)",
            N >= 4.0 and 0.0 < sigma < sigma_x0,
        )
    )

    # surface height at the origin-profile point (direct geometric route)
    c2 = (m - 1.0) / 4.0
    c1 = (m * N + 4.0 * m - N) / 2.0
    c0 = (3.0 * m - 1.0) * (m - 1.0) * (N - 1.0) / (m + 1.0)
    sigma_p2 = (-c1 + math.sqrt(c1 * c1 + 4.0 * c2 * c0)) / (2.0 * c2)
    claims.append(
        _make_claim(
            "surface_P2_positive",
            surf.evaluate(XP2, YP2),
            "positive",
            f"N>=4 and 0 < sigma < {sigma_p2:.12g} (asserted for sigma small)",
            N >= 4.0 and 0.0 < sigma < sigma_p2,
        )
    )

    claims.append(
        _make_claim(
            "R_sigma_positive",
            pack.R_sigma,
            "positive",
            "m>1, N>1, sigma>=0",
            True,
        )
    )
    claims.append(
        _make_claim(
            "X1_sq_positive", pack.X1_sq, "positive", "m>1, N>1, sigma>=0", True
        )
    )

    aL = m * m - 1.0
    bL = 2.0 * (m + 1.0) * (m * N + 4.0 * m - N)
    cL = -4.0 * (m - 1.0) * (3.0 * m - 1.0) * (N - 1.0)
    sigma_l = (-bL + math.sqrt(bL * bL - 4.0 * aL * cL)) / (2.0 * aL)
    claims.append(
        _make_claim(
            "L_sigma_negative",
            pack.L_sigma,
            "negative",
            f"N>=4 and 0 < sigma < {sigma_l:.12g} (asserted for sigma small)",
            N >= 4.0 and 0.0 < sigma < sigma_l,
        )
    )

    if pack.X0_sq is None:
        z0_val = None
    else:
        z0_val = (
            2.0 * m / (m + 1.0)
            - pack.R_sigma * pack.X0_sq / (8.0 * m * (m - 1.0) ** 2)
        )
    sigma_z0 = min(sigma_l, sigma_hi) if N >= 4.0 else 0.0
    claims.append(
        _make_claim(
            "Z0_sigma_negative",
            z0_val,
            "negative",
            f"N>=4 and 0 < sigma < {sigma_z0:.12g} (asserted for sigma small)",
            N >= 4.0 and 0.0 < sigma < sigma_z0,
        )
    )

    # maximum of the surface section over the plane {X = X1}
    X1 = math.sqrt(pack.X1_sq)
    y_max = -(2.0 * N + sigma - 2.0) * X1 / (4.0 * m)
    claims.append(
        _make_claim(
            "X1_section_max_positive",
            surf.evaluate(X1, y_max),
            "positive",
            f"N>=4 and 0 < sigma < sigma_c = {sigma_c:.12g}",
            N >= 4.0 and 0.0 < sigma < sigma_c,
        )
    )

    # --- critical-sigma quantities (functions of m, N only) -----------------
    params_c = ModelParams(m=m, N=N, sigma=sigma_c)
    surf_c = SeparatrixSurface(params_c)
    zp2_c = surf_c.evaluate(XP2, YP2)
    claims.append(
        _make_claim(
            "surface_P2_at_sigma_c_negative",
            zp2_c,
            "negative",
            f"N > n_star = {n_star:.12g} (evaluated at sigma = sigma_c)",
            N > n_star,
        )
    )
    claims.append(
        _make_claim(
            "surface_P2_at_sigma_c_positive",
            zp2_c,
            "positive",
            f"1 < N < n_star = {n_star:.12g} (evaluated at sigma = sigma_c)",
            1.0 < N < n_star,
        )
    )
    claims.append(
        _make_claim(
            "F_coef_negative_high_dim",
            pack.F,
            "negative",
            f"N > n_star = {n_star:.12g}",
            N > n_star,
        )
    )
    claims.append(
        _make_claim(
            "F_coef_positive_low_dim",
            pack.F,
            "positive",
            f"1 < N < n_star = {n_star:.12g}",
            1.0 < N < n_star,
        )
    )
    flux_c_coef = (
        -(2.0 * N - sigma_c - 6.0)
        * (2.0 * N + sigma_c - 2.0)
        * (sigma_c + 2.0)
        / (16.0 * m)
    )
    claims.append(
        _make_claim(
            "flux_at_sigma_c_negative",
            flux_c_coef,
            "negative",
            f"N > n_star = {n_star:.12g} (cubic coefficient at sigma = sigma_c)",
            N > n_star,
        )
    )

    # --- large-sigma quantities ---------------------------------------------
    lam = 1.0 / sigma if sigma > 0.0 else math.inf
    sigma_lo8 = max(sigma_c, 2.0 * N - 6.0)
    in_lg = sigma > sigma_lo8
    rng8 = f"sigma > max(sigma_c, 2N-6) = {sigma_lo8:.12g}"
    claims.append(_make_claim("U0_sq_positive", pack.U0_sq, "positive", rng8, in_lg))

    if pack.U0_sq is not None and pack.U0_sq > 0.0 and sigma > 0.0:
        flux_mid = surf.rescaled_flux(0.5 * math.sqrt(pack.U0_sq))
    else:
        flux_mid = None
    claims.append(
        _make_claim(
            "rescaled_flux_negative_inside", flux_mid, "negative", rng8, in_lg
        )
    )

    if sigma > 0.0:
        m_minus_1 = (2.0 * lam * (m - 1.0) * (N + 1.0) - (m + 3.0)) / (
            2.0 * (2.0 * lam + 1.0) * (m + 1.0)
        )
    else:
        m_minus_1 = None
    lam_m = (m + 3.0) / (2.0 * (m - 1.0) * (N + 1.0))
    claims.append(
        _make_claim(
            "M_minus_one_negative",
            m_minus_1,
            "negative",
            f"0 < 1/sigma < (m+3)/(2(m-1)(N+1)) = {lam_m:.12g}",
            sigma > 0.0 and lam < lam_m,
        )
    )

    if sigma > 0.0:
        y0_mid = surf.evaluate(0.5 * math.sqrt(pack.U1_sq) / sigma, 0.0)
    else:
        y0_mid = None
    claims.append(
        _make_claim(
            "Y0_section_positive_inside", y0_mid, "positive", "sigma > 0", sigma > 0.0
        )
    )

    u_gap = None
    if pack.U0_sq is not None and sigma > 0.0:
        u_gap = pack.U1_sq - pack.U0_sq
    br = m * N + N - 5.0 * m - 1.0  # U1²−U0² numerator slope in lambda
    if br >= 0.0:
        sigma_u = sigma_lo8
        rng_u = rng8
    else:
        # numerator positive iff lambda < (m+1)/(−2 br), i.e. sigma > −2 br/(m+1)
        sigma_u = max(sigma_lo8, -2.0 * br / (m + 1.0))
        rng_u = f"sigma > {sigma_u:.12g} (max of structural bound and amplitude bound)"
    claims.append(
        _make_claim("U1_below_U0_sq", u_gap, "negative", rng_u, sigma > sigma_u)
    )

    # B(λ) = 1 − (m+1)U0²/(2(m−1)²), with cubic numerator A(λ)
    b_val = None
    if pack.U0_sq is not None:
        b_val = 1.0 - (m + 1.0) * pack.U0_sq / (2.0 * (m - 1.0) ** 2)
    lam_b = _smallest_positive_root(
        [
            8.0 * (N - 1.0) * (N - 3.0) * (m - 1.0) ** 2,
            4.0 * (N * N - 4.0 * N + 1.0) * (m - 1.0) ** 2,
            -2.0 * (m - 1.0) * (4.0 * m * N - m - 3.0),
            11.0 * m * m + 6.0 * m - 1.0,
        ]
    )
    sigma_b = max(sigma_lo8, 1.0 / lam_b if lam_b < math.inf else 0.0)
    in_b = sigma > sigma_b
    rng_b = f"sigma > {sigma_b:.12g} (asserted for sigma large)"
    claims.append(_make_claim("B_negative", b_val, "negative", rng_b, in_b))
    claims.append(
        _make_claim(
            "B_limit_negative",
            -(11.0 * m * m + 6.0 * m - 1.0) / (m - 1.0) ** 2,
            "negative",
            "m > 1 (sigma-independent limit value)",
            True,
        )
    )
    margin = None
    if pack.U0_sq is not None:
        margin = pack.U0_sq / (m - 1.0) ** 2 - h0 * h0
    claims.append(
        _make_claim("no_return_margin_positive", margin, "positive", rng_b, in_b)
    )

    return CertificateReport(params=params, claims=tuple(claims))
