"""Vector fields in every chart, Jacobians, critical points and local data.

Charts
------
The autonomous phase-space system ("MAIN", coordinates (X, Y, Z)) is

    X' = (m−1)/2·XY − X²
    Y' = −(m+1)/2·Y² + 1 − Z − (N−1)XY
    Z' = Z[(m−1)Y + σX]

where ' is d/dη.  The profile dictionary: for a radial profile f(ξ),

    X = sqrt(m(m−1))·ξ^{−1}·f^{(m−1)/2},
    Y = 2·sqrt(m/(m−1))·(f^{(m−1)/2})',
    Z = (m−1)·ξ^σ·f^{m−1},        dη = X ξ^{-1} dξ · ξ = dξ/(X·ξ)… i.e. ξ dη = dξ/X.

Auxiliary charts (each a polynomial system, each with a documented
variable-to-profile dictionary):

* SHIFTED   (X, H, Z), H = Y + h0: MAIN translated so the stable axis point
  sits at the origin.
* PLANE_Z0  (X, Y): MAIN restricted to the invariant plane {Z = 0}.
* PLANE_X0  (Y, Z): MAIN restricted to the invariant plane {X = 0}.
* ALT       (x, y, z) = (1/X², Y/X, Z/X²): chart at X = +∞, time rescaled
  by dη̃ = X dη.
* RESCALED  (U, Y, Z) = (σX, Y, Z): large-σ normalization (requires σ > 0).
* CHART_Q1  (y, z, w) = (Y/X, Z/X, 1/X): chart at X = +∞ resolving the
  nodes there, time rescaled by dη̃ = X dη.
* CHART_Q2 / CHART_Q3 (x, z, w) = (X/Y, Z/Y, 1/Y): charts at Y = ±∞, time
  rescaled by dη̃ = |Y| dη; the two members differ by the overall sign that
  keeps the rescaled time increasing with η on their half-spaces
  (CHART_Q3 covers Y < 0, CHART_Q2 covers Y > 0).

Critical points:  P0 = (0, h0, 0), P1 = (0, −h0, 0),
P2 = ((m−1)/s̄, 2/s̄, 0) with s̄ = sqrt(2(mN−N+2)), P3 = (0, 0, 1) in MAIN;
Q1 and Q5 in CHART_Q1, Q2/Q3 at the origins of their charts, Q4 in ALT.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from . import _core
from .errors import ChartError, ManifoldError
from .model import (
    CoefficientPack,
    ModelParams,
    coefficient_pack,
    derived_constants,
    K3_UNDEFINED_TOL,
)

__all__ = [
    "ChartId",
    "PointId",
    "CriticalPoint",
    "ManifoldApprox",
    "NormalFormP3",
    "chart_dim",
    "chart_variables",
    "eval_field",
    "jacobian",
    "finite_critical_points",
    "infinity_critical_points",
    "critical_point",
    "normal_form_P3",
    "p3_quadratic_tables",
    "manifold_approx",
    "eigenvalues_2x2",
    "eigenvalues_3x3",
    "COMPLEX_PAIR_TOL",
]

#: imaginary parts below this threshold are treated as real eigenvalues
COMPLEX_PAIR_TOL = 1e-12

#: real parts below this threshold count as center directions
_CENTER_TOL = 1e-12


class ChartId(IntEnum):
    """Coordinate charts; integer values double as kernel RHS codes."""

    MAIN = 0
    SHIFTED = 1
    PLANE_Z0 = 2
    PLANE_X0 = 3
    ALT = 4
    RESCALED = 5
    CHART_Q1 = 6
    CHART_Q2 = 7
    CHART_Q3 = 8


_CHART_DIMS = {
    ChartId.MAIN: 3,
    ChartId.SHIFTED: 3,
    ChartId.PLANE_Z0: 2,
    ChartId.PLANE_X0: 2,
    ChartId.ALT: 3,
    ChartId.RESCALED: 3,
    ChartId.CHART_Q1: 3,
    ChartId.CHART_Q2: 3,
    ChartId.CHART_Q3: 3,
}

_CHART_VARS = {
    ChartId.MAIN: ("X", "Y", "Z"),
    ChartId.SHIFTED: ("X", "H", "Z"),
    ChartId.PLANE_Z0: ("X", "Y"),
    ChartId.PLANE_X0: ("Y", "Z"),
    ChartId.ALT: ("x", "y", "z"),
    ChartId.RESCALED: ("U", "Y", "Z"),
    ChartId.CHART_Q1: ("y", "z", "w"),
    ChartId.CHART_Q2: ("x", "z", "w"),
    ChartId.CHART_Q3: ("x", "z", "w"),
}


class PointId(Enum):
    """Critical points: P* finite, Q* on the sphere at infinity."""

    P0 = "P0"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    Q1 = "Q1"
    Q2 = "Q2"
    Q3 = "Q3"
    Q4 = "Q4"
    Q5 = "Q5"


def chart_dim(chart: ChartId) -> int:
    """State-space dimension of a chart (2 or 3)."""
    return _CHART_DIMS[ChartId(chart)]


def chart_variables(chart: ChartId) -> tuple[str, ...]:
    """Component names of a chart, in state order (used for CSV headers)."""
    return _CHART_VARS[ChartId(chart)]


def _check_state(chart: ChartId, state) -> np.ndarray:
    arr = np.asarray(state, dtype=float)
    if arr.shape != (chart_dim(chart),):
        raise ChartError(
            "DIM_MISMATCH",
            f"chart {ChartId(chart).name} expects dimension {chart_dim(chart)}, "
            f"got shape {arr.shape}",
        )
    return arr


def eval_field(chart: ChartId, state, params: ModelParams) -> np.ndarray:
    """Right-hand side of the chart's system at ``state``.

    Exact polynomial evaluation (delegated to the active integrator kernel so
    that the integrated field and the inspected field are the same code).
    """
    chart = ChartId(chart)
    arr = _check_state(chart, state)
    if chart is ChartId.RESCALED and params.sigma <= 0.0:
        raise ChartError("BAD_CHART", "RESCALED chart requires sigma > 0")
    out = _core.rhs_point(int(chart), tuple(arr), params.m, params.N, params.sigma)
    return np.asarray(out, dtype=float)


def jacobian(chart: ChartId, state, params: ModelParams) -> np.ndarray:
    """Analytic Jacobian of :func:`eval_field` at ``state``."""
    chart = ChartId(chart)
    s = _check_state(chart, state)
    m, N, sigma = params.m, params.N, params.sigma

    if chart is ChartId.MAIN or chart is ChartId.SHIFTED:
        X, Y, Z = s
        if chart is ChartId.SHIFTED:
            Y = Y - math.sqrt(2.0 / (m + 1.0))
        return np.array(
            [
                [(m - 1.0) * Y / 2.0 - 2.0 * X, (m - 1.0) * X / 2.0, 0.0],
                [-(N - 1.0) * Y, -(m + 1.0) * Y - (N - 1.0) * X, -1.0],
                [sigma * Z, (m - 1.0) * Z, (m - 1.0) * Y + sigma * X],
            ]
        )
    if chart is ChartId.PLANE_Z0:
        X, Y = s
        return np.array(
            [
                [(m - 1.0) * Y / 2.0 - 2.0 * X, (m - 1.0) * X / 2.0],
                [-(N - 1.0) * Y, -(m + 1.0) * Y - (N - 1.0) * X],
            ]
        )
    if chart is ChartId.PLANE_X0:
        Y, Z = s
        return np.array(
            [
                [-(m + 1.0) * Y, -1.0],
                [(m - 1.0) * Z, (m - 1.0) * Y],
            ]
        )
    if chart is ChartId.ALT:
        x, y, z = s
        return np.array(
            [
                [2.0 - (m - 1.0) * y, -(m - 1.0) * x, 0.0],
                [1.0, -2.0 * m * y - (N - 2.0), -1.0],
                [0.0, 0.0, sigma + 2.0],
            ]
        )
    if chart is ChartId.RESCALED:
        if sigma <= 0.0:
            raise ChartError("BAD_CHART", "RESCALED chart requires sigma > 0")
        lam = 1.0 / sigma
        U, Y, Z = s
        return np.array(
            [
                [(m - 1.0) * Y / 2.0 - 2.0 * lam * U, (m - 1.0) * U / 2.0, 0.0],
                [-(N - 1.0) * lam * Y, -(m + 1.0) * Y - (N - 1.0) * lam * U, -1.0],
                [Z, (m - 1.0) * Z, (m - 1.0) * Y + U],
            ]
        )
    if chart is ChartId.CHART_Q1:
        y, z, w = s
        return np.array(
            [
                [-(N - 2.0) - 2.0 * m * y, -w, -z + 2.0 * w],
                [(m - 1.0) * z / 2.0, sigma + 1.0 + (m - 1.0) * y / 2.0, 0.0],
                [-(m - 1.0) * w / 2.0, 0.0, 1.0 - (m - 1.0) * y / 2.0],
            ]
        )
    if chart is ChartId.CHART_Q3 or chart is ChartId.CHART_Q2:
        x, z, w = s
        J = np.array(
            [
                [
                    -m + 2.0 * (2.0 - N) * x + w * w - z * w,
                    -x * w,
                    2.0 * x * w - x * z,
                ],
                [
                    -(sigma + N - 1.0) * z,
                    -(3.0 * m - 1.0) / 2.0 - (sigma + N - 1.0) * x + w * w - 2.0 * z * w,
                    2.0 * z * w - z * z,
                ],
                [
                    -(N - 1.0) * w,
                    -w * w,
                    -(m + 1.0) / 2.0 - 2.0 * z * w + 3.0 * w * w - (N - 1.0) * x,
                ],
            ]
        )
        return -J if chart is ChartId.CHART_Q2 else J
    raise ChartError("BAD_CHART", f"unknown chart {chart!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# eigen-solves: closed-form 2x2 and cubic-characteristic 3x3


def eigenvalues_2x2(J) -> tuple[complex, complex]:
    """Eigenvalues of a real 2×2 matrix via the trace/determinant closed form."""
    a, b = float(J[0][0]), float(J[0][1])
    c, d = float(J[1][0]), float(J[1][1])
    tr = a + d
    det = a * d - b * c
    disc = tr * tr - 4.0 * det
    sq = cmath.sqrt(disc)
    lam1 = (tr - sq) / 2.0
    lam2 = (tr + sq) / 2.0
    return _tidy(lam1), _tidy(lam2)


def eigenvalues_3x3(J) -> tuple[complex, complex, complex]:
    """Eigenvalues of a real 3×3 matrix via its characteristic cubic.

    Solves λ³ + aλ² + bλ + c = 0 (a = −tr J, b = sum of principal 2×2 minors,
    c = −det J) by the trigonometric/Cardano method, then polishes each root
    with two Newton steps on the cubic.
    """
    M = [[float(J[i][j]) for j in range(3)] for i in range(3)]
    tr = M[0][0] + M[1][1] + M[2][2]
    minors = (
        M[1][1] * M[2][2]
        - M[1][2] * M[2][1]
        + M[0][0] * M[2][2]
        - M[0][2] * M[2][0]
        + M[0][0] * M[1][1]
        - M[0][1] * M[1][0]
    )
    det = (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )
    a, b, c = -tr, minors, -det

    # depressed cubic t^3 + p t + q, lambda = t − a/3
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    shift = -a / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    roots: list[complex]
    if disc > 0.0:
        r = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + r) ** (1.0 / 3.0), -q / 2.0 + r)
        v = math.copysign(abs(-q / 2.0 - r) ** (1.0 / 3.0), -q / 2.0 - r)
        real = u + v
        re2 = -real / 2.0
        im2 = (u - v) * math.sqrt(3.0) / 2.0
        roots = [real + shift, complex(re2 + shift, im2), complex(re2 + shift, -im2)]
    elif p == 0.0 and q == 0.0:
        roots = [shift, shift, shift]
    else:
        # three real roots
        rho = math.sqrt(max(-(p**3) / 27.0, 0.0))
        theta = math.acos(min(1.0, max(-1.0, -q / (2.0 * rho) if rho else 0.0)))
        mag = 2.0 * math.sqrt(max(-p / 3.0, 0.0))
        roots = [
            mag * math.cos((theta + 2.0 * math.pi * k) / 3.0) + shift for k in range(3)
        ]

    def poly(lam: complex) -> complex:
        return ((lam + a) * lam + b) * lam + c

    def dpoly(lam: complex) -> complex:
        return (3.0 * lam + 2.0 * a) * lam + b

    polished = []
    for lam in roots:
        lam = complex(lam)
        for _ in range(2):
            d = dpoly(lam)
            if d != 0:
                lam = lam - poly(lam) / d
        polished.append(_tidy(lam))
    polished.sort(key=lambda z: (round(z.real, 12), z.imag))
    return tuple(polished)


def _tidy(lam: complex) -> complex:
    if abs(lam.imag) < COMPLEX_PAIR_TOL:
        return complex(lam.real, 0.0)
    return lam


def _spectrum(chart: ChartId, location, params: ModelParams):
    J = jacobian(chart, location, params)
    if J.shape == (2, 2):
        return eigenvalues_2x2(J)
    return eigenvalues_3x3(J)


def _dims(spectrum) -> tuple[int, int, int]:
    stable = sum(1 for lam in spectrum if lam.real < -_CENTER_TOL)
    unstable = sum(1 for lam in spectrum if lam.real > _CENTER_TOL)
    center = len(spectrum) - stable - unstable
    return stable, unstable, center


def _behavior_tag(spectrum) -> str:
    stable, unstable, center = _dims(spectrum)
    n = len(spectrum)
    if center == n:
        return "nonhyperbolic"
    if center > 0:
        return "saddle-node"
    if stable == n:
        return "stable node"
    if unstable == n:
        return "unstable node"
    return "saddle"


@dataclass(frozen=True)
class CriticalPoint:
    """A critical point with its chart location and linearization data.

    ``dims`` is (stable, unstable, center) eigenvalue counts; ``notes`` is the
    behavior tag; ``merged_node`` marks the two X-infinity points that fate
    classification treats as a single destination.
    """

    id: PointId
    chart: ChartId
    location: tuple[float, ...]
    spectrum: tuple[complex, ...]
    dims: tuple[int, int, int]
    notes: str
    merged_node: bool = False


def _make_point(
    pid: PointId,
    chart: ChartId,
    location: tuple[float, ...],
    params: ModelParams,
    merged_node: bool = False,
    tag: str | None = None,
) -> CriticalPoint:
    spec = tuple(_spectrum(chart, location, params))
    return CriticalPoint(
        id=pid,
        chart=chart,
        location=location,
        spectrum=spec,
        dims=_dims(spec),
        notes=tag if tag is not None else _behavior_tag(spec),
        merged_node=merged_node,
    )


def finite_critical_points(params: ModelParams) -> list[CriticalPoint]:
    """The four finite critical points P0, P1, P2, P3 (MAIN chart)."""
    m, N = params.m, params.N
    h0 = math.sqrt(2.0 / (m + 1.0))
    sbar = math.sqrt(2.0 * (m * N - N + 2.0))
    return [
        _make_point(PointId.P0, ChartId.MAIN, (0.0, h0, 0.0), params),
        _make_point(PointId.P1, ChartId.MAIN, (0.0, -h0, 0.0), params),
        _make_point(PointId.P2, ChartId.MAIN, ((m - 1.0) / sbar, 2.0 / sbar, 0.0), params),
        _make_point(PointId.P3, ChartId.MAIN, (0.0, 0.0, 1.0), params),
    ]


def infinity_critical_points(params: ModelParams) -> list[CriticalPoint]:
    """The five critical points on the sphere at infinity, in their charts.

    Q1 sits at the CHART_Q1 origin (a saddle-node in the degenerate case
    N = 2); Q5 at (y, z, w) = ((2−N)/m, 0, 0) in the same chart; Q2/Q3 at the
    origins of their sign charts; Q4 in ALT at (0, (2−N)/m, 0).  Q4 and Q5
    describe the same escape destination and carry ``merged_node=True``.
    """
    m, N = params.m, params.N
    return [
        _make_point(PointId.Q1, ChartId.CHART_Q1, (0.0, 0.0, 0.0), params),
        _make_point(PointId.Q2, ChartId.CHART_Q2, (0.0, 0.0, 0.0), params),
        _make_point(PointId.Q3, ChartId.CHART_Q3, (0.0, 0.0, 0.0), params),
        _make_point(
            PointId.Q4, ChartId.ALT, (0.0, (2.0 - N) / m, 0.0), params, merged_node=True
        ),
        _make_point(
            PointId.Q5,
            ChartId.CHART_Q1,
            ((2.0 - N) / m, 0.0, 0.0),
            params,
            merged_node=True,
        ),
    ]


def critical_point(pid: PointId, params: ModelParams) -> CriticalPoint:
    """Look up one critical point by id."""
    pid = PointId(pid)
    pts = finite_critical_points(params) + infinity_critical_points(params)
    for pt in pts:
        if pt.id is pid:
            return pt
    raise KeyError(pid)  # pragma: no cover


# ---------------------------------------------------------------------------
# P3 normal form


@dataclass(frozen=True)
class NormalFormP3:
    """Cylindrical normal form data at the focus point P3.

    In adapted coordinates (z, r, θ) near P3 the flow reduces, to quadratic
    order, to  ż = z_coef·z²,  ṙ = radial_coef·z·r,  θ̇ = rotation, so orbits
    with X > 0 obey z ~ C·r^{K3}.  ``radial_coef`` changes sign with σ − σ_c;
    ``tag`` is None in the critical case (``critical_case=True``), where the
    quadratic analysis does not decide stability.
    """

    z_coef: float
    radial_coef: float
    rotation: float
    K3: float | None
    tag: str | None
    critical_case: bool


def p3_quadratic_tables(params: ModelParams) -> dict[str, complex]:
    """Quadratic coefficient tables of the P3-adapted complexified system.

    The adapted real coordinates are z = X, v = σX + (m−1)Y,
    u = sqrt(m−1)·(Z−1); with w = v + iu the system takes the form

        ż = g200 z²/2 + g110 zw + g101 zw̄ + g020 w²/2 + g011 ww̄ + g002 w̄²/2
        ẇ = i·sqrt(m−1)·w + h200 z²/2 + h110 zw + h101 zw̄ + h020 w²/2
             + h011 ww̄ + h002 w̄²/2

    The tables are extracted numerically from the exact quadratic field by
    polarization (no series truncation is involved), providing an independent
    route to the closed-form normal-form coefficients.
    """
    m, N, sigma = params.m, params.N, params.sigma
    rt = math.sqrt(m - 1.0)

    def transformed(zz: float, vv: float, uu: float) -> tuple[float, float, float]:
        X = zz
        Y = (vv - sigma * zz) / (m - 1.0)
        Z = 1.0 + uu / rt
        dX = (m - 1.0) / 2.0 * X * Y - X * X
        dY = -(m + 1.0) / 2.0 * Y * Y + 1.0 - Z - (N - 1.0) * X * Y
        dZ = Z * ((m - 1.0) * Y + sigma * X)
        return (dX, sigma * dX + (m - 1.0) * dY, rt * dZ)

    def quad(pt: tuple[float, float, float]) -> np.ndarray:
        plus = np.array(transformed(*pt))
        minus = np.array(transformed(*[-c for c in pt]))
        return (plus + minus) / 2.0

    e = [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    B = {}
    for i in range(3):
        for j in range(i, 3):
            if i == j:
                B[(i, j)] = quad(e[i])
            else:
                pij = tuple(a + b for a, b in zip(e[i], e[j]))
                B[(i, j)] = (quad(pij) - quad(e[i]) - quad(e[j])) / 2.0

    def tables(component: list[complex]) -> dict[str, complex]:
        # component: length-6 coefficient vector in basis z², zv, zu, v², vu, u²
        a_zz, a_zv, a_zu, a_vv, a_vu, a_uu = component
        return {
            "200": 2.0 * a_zz,
            "110": (a_zv - 1j * a_zu) / 2.0,
            "101": (a_zv + 1j * a_zu) / 2.0,
            "020": (a_vv - a_uu) / 2.0 - 1j * a_vu / 2.0,
            "011": (a_vv + a_uu) / 2.0,
            "002": (a_vv - a_uu) / 2.0 + 1j * a_vu / 2.0,
        }

    out: dict[str, complex] = {}
    for prefix in ("g", "h"):
        coeffs = []
        for key in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]:
            vec = B[key]
            if prefix == "g":
                coeffs.append(complex(vec[0]))
            else:
                coeffs.append(complex(vec[1], vec[2]))
        for suffix, value in tables(coeffs).items():
            out[prefix + suffix] = value
    return out


def normal_form_P3(params: ModelParams) -> NormalFormP3:
    """Normal-form coefficients at P3, with a built-in dual-route check.

    The closed forms are z_coef = −(σ+2)/2, radial_coef = K1/(4(m−1)),
    rotation = sqrt(m−1); they are recomputed through the quadratic tables of
    :func:`p3_quadratic_tables` (z_coef = g200/2, radial_coef = Re h110) and
    the two routes are required to agree to 1e−10.
    """
    m, sigma = params.m, params.sigma
    pack = coefficient_pack(params)
    z_coef = -(sigma + 2.0) / 2.0
    radial_coef = pack.K1 / (4.0 * (m - 1.0))
    rotation = math.sqrt(m - 1.0)

    tab = p3_quadratic_tables(params)
    z_coef_tab = tab["g200"].real / 2.0
    radial_tab = tab["h110"].real
    if abs(z_coef_tab - z_coef) > 1e-10 * (1.0 + abs(z_coef)) or abs(
        radial_tab - radial_coef
    ) > 1e-10 * (1.0 + abs(radial_coef)):
        raise RuntimeError(
            "normal-form table extraction disagrees with closed forms: "
            f"g200/2={z_coef_tab!r} vs {z_coef!r}, "
            f"Re h110={radial_tab!r} vs {radial_coef!r}"
        )

    critical = abs(pack.K1) < K3_UNDEFINED_TOL
    if critical:
        tag = None
    elif radial_coef < 0.0:
        tag = "attractor_for_X_positive"
    else:
        tag = "repeller"
    return NormalFormP3(
        z_coef=z_coef,
        radial_coef=radial_coef,
        rotation=rotation,
        K3=pack.K3,
        tag=tag,
        critical_case=critical,
    )


# ---------------------------------------------------------------------------
# invariant-manifold Taylor approximations at the axis points


@dataclass(frozen=True)
class ManifoldApprox:
    """Taylor graph Z = Z(X, H) of the 2D invariant manifold at P0 or P1.

    ``H`` is the vertical offset from the base point (H = Y + h0 at P1,
    H = Y − h0 at P0).  Signed coefficients follow the convention
    Z = a·X + b·H + c·X² + d·H² + e·XH (+ f·X³ for order 3); relative to the
    shared pack (A…F) the P1 graph uses (+A, +B, C, D, E, +F) and the P0
    graph (−A, −B, C, D, E, −F).
    """

    base_point: PointId
    order: int
    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    params: ModelParams

    def evaluate(self, X: float, H: float) -> float:
        """Height Z(X, H) of the approximated manifold graph."""
        val = self.a * X + self.b * H + self.c * X * X + self.d * H * H + self.e * X * H
        if self.order >= 3:
            val += self.f * X**3
        return val

    def gradient(self, X: float, H: float) -> tuple[float, float]:
        """(∂Z/∂X, ∂Z/∂H) of the graph."""
        gx = self.a + 2.0 * self.c * X + self.e * H
        gh = self.b + 2.0 * self.d * H + self.e * X
        if self.order >= 3:
            gx += 3.0 * self.f * X * X
        return gx, gh

    def defect(self, X: float, H: float) -> float:
        """Invariance defect |Ż − Z_X·Ẋ − Z_H·Ḣ| on the graph at (X, H).

        Evaluated with the MAIN field at Y = H + Y_base; an order-k graph has
        defect O(ρ^{k+1}) as (X, H) = ρ·(direction) → 0.
        """
        m = self.params.m
        h0 = math.sqrt(2.0 / (m + 1.0))
        y_base = -h0 if self.base_point is PointId.P1 else h0
        Y = H + y_base
        Z = self.evaluate(X, H)
        dX, dY, dZ = eval_field(ChartId.MAIN, (X, Y, Z), self.params)
        gx, gh = self.gradient(X, H)
        return abs(dZ - gx * dX - gh * dY)


def manifold_approx(base: PointId, order: int, params: ModelParams) -> ManifoldApprox:
    """Taylor approximation of the 2D invariant manifold at P0 or P1.

    ``order=2`` is available for every σ; ``order=3`` only in the critical
    case σ = σ_c (detected via |K1| < 1e−14), where the cubic correction is
    the single term f·X³ — otherwise raises ``ORDER_UNAVAILABLE``.
    """
    base = PointId(base)
    if base not in (PointId.P0, PointId.P1):
        raise ValueError("manifold approximations exist at P0 and P1 only")
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    pack = coefficient_pack(params)
    if order == 3 and abs(pack.K1) >= K3_UNDEFINED_TOL:
        raise ManifoldError(
            "ORDER_UNAVAILABLE",
            "the order-3 coefficient is only available in the critical case "
            f"(need |K1| < {K3_UNDEFINED_TOL}, got K1={pack.K1!r})",
        )
    sign = 1.0 if base is PointId.P1 else -1.0
    return ManifoldApprox(
        base_point=base,
        order=order,
        a=sign * pack.A,
        b=sign * pack.B,
        c=pack.C,
        d=pack.D,
        e=pack.E,
        f=sign * pack.F,
        params=params,
    )
