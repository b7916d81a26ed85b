"""Radial profile reconstruction, local expansions, and the ξ-domain oracle.

The radial profile f(ξ) of the separate-variable ansatz solves

    (f^m)'' + (N-1)/ξ · (f^m)' - f/(m-1) + ξ^σ f^m = 0,      ξ = |x| > 0,

and the phase variables used throughout the package are

    X = sqrt(m(m-1)) · f^{(m-1)/2} / ξ,
    Y = 2 sqrt(m(m-1))/(m-1) · (f^{(m-1)/2})',
    Z = (m-1) · ξ^σ · f^{m-1},

with phase time η defined by dη/dξ = f^{-(m-1)/2}/sqrt(m(m-1)).  The map
(X, Z) → (ξ, f) inverts pointwise,

    ξ = (m Z / X²)^{1/(σ+2)},        f = (Z / ((m-1) ξ^σ))^{1/(m-1)},

with no free integration constant, so a phase trajectory determines its
profile samples directly.  This module provides that reconstruction, the
catalog of local behaviors (interface, power origin, flat origin, algebraic
tail, vertical asymptote, logarithmic origin, and the invariant hyperbola
Z ≡ 1), a direct ξ-domain integration of the profile equation that serves
as an independent oracle for the phase route, the oscillation transform
G(ζ) used to measure tail damping, and the exactness check of the
dimension-reducing self-map at (N*, σ_c(N*)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ._version import __version__
from .errors import ChartError, ProfileError
from .model import (
    ModelParams,
    coefficient_pack,
    derived_constants,
    validate_params,
)
from .vectorfields import ChartId

__all__ = [
    "LocalKind",
    "LocalBehavior",
    "ProfileCurve",
    "GTransform",
    "GExtremum",
    "SelfMapReport",
    "interface_slope_constant",
    "local_expansion",
    "reconstruct_profile",
    "curve_to_phase",
    "direct_ode_solve",
    "ode_residual",
    "profile_residual",
    "g_transform",
    "tail_exponent",
    "spiral_exponent_fit",
    "self_map_check",
]

#: f below this value counts as touched down in the ξ-domain integrator.
_F_TOUCH = 1e-10
#: f above this value counts as blown up in the ξ-domain integrator.
_F_BLOW = 1e6
#: reconstruction declares an interface when the final f is below this …
_INTERFACE_F_TOL = 1e-8
#: … and the slope of f^{(m-1)/2} matches the interface constant this tightly.
_INTERFACE_SLOPE_RTOL = 1e-2


def interface_slope_constant(params: ModelParams) -> float:
    """Magnitude of d(f^{(m-1)/2})/dξ at a vanishing point with zero flux.

    A profile vanishing at ξ₀ with (f^m)'(ξ₀) = 0 does so quadratically in
    f^{(m-1)/2}: the slope tends to ±(m-1)h0/(2·sqrt(m(m-1))) (minus at an
    interface, plus at a left vanishing point).
    """
    m = params.m
    h0 = derived_constants(params).h0
    return (m - 1.0) * h0 / (2.0 * math.sqrt(m * (m - 1.0)))


# ---------------------------------------------------------------------------
# local behaviors
# ---------------------------------------------------------------------------


class LocalKind(Enum):
    """Asymptotic shapes a profile can take at an endpoint of its domain."""

    INTERFACE = "INTERFACE"  # f = (K - c·ξ)_+^{2/(m-1)}, right-end vanishing
    OUT_P0 = "OUT_P0"  # f = (c·ξ - K)_+^{2/(m-1)}, left-end vanishing
    ORIGIN_P2 = "ORIGIN_P2"  # f ~ [(m-1)/(2m(mN-N+2))]^{1/(m-1)} ξ^{2/(m-1)}
    TAIL_P3 = "TAIL_P3"  # f ~ (1/(m-1))^{1/(m-1)} ξ^{-σ/(m-1)} as ξ→∞
    FLAT_Q1 = "FLAT_Q1"  # f(0) = a > 0, f'(0) = 0
    ASYMPTOTE_Q5 = "ASYMPTOTE_Q5"  # f ~ C ξ^{(2-N)/m} as ξ→0
    LOG_Q1_N2 = "LOG_Q1_N2"  # f ~ D (-ln ξ)^{1/m} as ξ→0 (N = 2 only)
    HYPERBOLA = "HYPERBOLA"  # f = (1/(m-1))^{1/(m-1)} ξ^{-σ/(m-1)} (Z ≡ 1)


#: kinds whose expansion carries one free positive constant
_KINDS_WITH_CONSTANT = {
    LocalKind.INTERFACE,
    LocalKind.OUT_P0,
    LocalKind.FLAT_Q1,
    LocalKind.ASYMPTOTE_Q5,
    LocalKind.LOG_Q1_N2,
}


def _p2_origin_coefficient(params: ModelParams) -> float:
    m, N = params.m, params.N
    return ((m - 1.0) / (2.0 * m * (m * N - N + 2.0))) ** (1.0 / (m - 1.0))


def _tail_coefficient(params: ModelParams) -> float:
    return (1.0 / (params.m - 1.0)) ** (1.0 / (params.m - 1.0))


def _flat_quadratic_coefficient(a: float, params: ModelParams) -> float:
    # Balancing (f^m)'' + (N-1)(f^m)'/ξ = f/(m-1) at ξ = 0 for f = a + b ξ²
    # gives 2mNb·a^{m-1} = a/(m-1); the ξ^σ f^m term enters at higher order
    # for σ > 0.
    m, N = params.m, params.N
    return a ** (2.0 - m) / (2.0 * m * N * (m - 1.0))


@dataclass(frozen=True)
class LocalBehavior:
    """One endpoint expansion: a kind, its parameters, and its free constant.

    Instances are callables ξ ↦ f(ξ) evaluating the expansion (vectorized),
    with :meth:`derivative` for the matching f'(ξ).  ``constant`` is the
    kind's free constant (K, a, C or D) and must be ``None`` for the rigid
    kinds (ORIGIN_P2, TAIL_P3, HYPERBOLA) whose coefficient is pinned by the
    equation.  Obtain instances through :func:`local_expansion`, which
    validates the constant.
    """

    kind: LocalKind
    params: ModelParams
    constant: float | None = None

    @property
    def vanishing_xi(self) -> float | None:
        """ξ where the INTERFACE/OUT_P0 expansion meets zero, else None."""
        if self.kind in (LocalKind.INTERFACE, LocalKind.OUT_P0):
            return self.constant / interface_slope_constant(self.params)
        return None

    def __call__(self, xi) -> np.ndarray:
        return self.evaluate(xi)

    def evaluate(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        m = self.params.m
        sigma = self.params.sigma
        N = self.params.N
        p = 2.0 / (m - 1.0)
        k = self.kind
        if k is LocalKind.INTERFACE:
            c = interface_slope_constant(self.params)
            return np.maximum(self.constant - c * xi, 0.0) ** p
        if k is LocalKind.OUT_P0:
            c = interface_slope_constant(self.params)
            return np.maximum(c * xi - self.constant, 0.0) ** p
        if k is LocalKind.ORIGIN_P2:
            return _p2_origin_coefficient(self.params) * xi**p
        if k in (LocalKind.TAIL_P3, LocalKind.HYPERBOLA):
            return _tail_coefficient(self.params) * xi ** (-sigma / (m - 1.0))
        if k is LocalKind.FLAT_Q1:
            a = self.constant
            return a + _flat_quadratic_coefficient(a, self.params) * xi**2
        if k is LocalKind.ASYMPTOTE_Q5:
            return self.constant * xi ** ((2.0 - N) / m)
        if k is LocalKind.LOG_Q1_N2:
            with np.errstate(divide="ignore", invalid="ignore"):
                ln = -np.log(xi)
            return self.constant * np.where(ln > 0.0, ln, 0.0) ** (1.0 / m)
        raise ProfileError("BAD_CONSTANTS", f"unknown kind {k!r}")

    def derivative(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        m = self.params.m
        sigma = self.params.sigma
        N = self.params.N
        p = 2.0 / (m - 1.0)
        k = self.kind
        if k is LocalKind.INTERFACE:
            c = interface_slope_constant(self.params)
            base = np.maximum(self.constant - c * xi, 0.0)
            return -c * p * base ** (p - 1.0)
        if k is LocalKind.OUT_P0:
            c = interface_slope_constant(self.params)
            base = np.maximum(c * xi - self.constant, 0.0)
            return c * p * base ** (p - 1.0)
        if k is LocalKind.ORIGIN_P2:
            return _p2_origin_coefficient(self.params) * p * xi ** (p - 1.0)
        if k in (LocalKind.TAIL_P3, LocalKind.HYPERBOLA):
            q = -sigma / (m - 1.0)
            return _tail_coefficient(self.params) * q * xi ** (q - 1.0)
        if k is LocalKind.FLAT_Q1:
            b = _flat_quadratic_coefficient(self.constant, self.params)
            return 2.0 * b * xi
        if k is LocalKind.ASYMPTOTE_Q5:
            r = (2.0 - N) / m
            return self.constant * r * xi ** (r - 1.0)
        if k is LocalKind.LOG_Q1_N2:
            ln = -np.log(xi)
            return -self.constant / (m * xi) * ln ** (1.0 / m - 1.0)
        raise ProfileError("BAD_CONSTANTS", f"unknown kind {k!r}")


def local_expansion(
    kind: LocalKind | str, constant: float | None, params: ModelParams
) -> LocalBehavior:
    """Build a validated endpoint expansion of the given kind.

    ``constant`` is the kind's free constant and must be a positive float
    for INTERFACE/OUT_P0 (K), FLAT_Q1 (a), ASYMPTOTE_Q5 (C) and LOG_Q1_N2
    (D); it must be ``None`` for ORIGIN_P2, TAIL_P3 and HYPERBOLA, whose
    coefficients are forced by the equation.  LOG_Q1_N2 additionally
    requires N = 2, the only dimension where the logarithmic origin exists.
    """
    kind = LocalKind(kind)
    if kind in _KINDS_WITH_CONSTANT:
        if constant is None or not np.isfinite(constant) or constant <= 0.0:
            raise ProfileError(
                "BAD_CONSTANTS",
                f"{kind.value} needs a positive free constant, got {constant!r}",
            )
        constant = float(constant)
    elif constant is not None:
        raise ProfileError(
            "BAD_CONSTANTS",
            f"{kind.value} has no free constant (coefficient is pinned by the "
            f"equation), got {constant!r}",
        )
    if kind is LocalKind.LOG_Q1_N2 and params.N != 2.0:
        raise ProfileError(
            "BAD_CONSTANTS",
            f"the logarithmic origin exists only at N = 2, got N = {params.N}",
        )
    return LocalBehavior(kind=kind, params=params, constant=constant)


# ---------------------------------------------------------------------------
# profile curves
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    return format(float(value), ".17g")


@dataclass(frozen=True)
class ProfileCurve:
    """Sampled profile: strictly increasing ξ > 0 with f ≥ 0.

    ``interface_xi`` is the extrapolated right-end vanishing point when one
    was detected; ``origin_tag``/``tail_tag`` name the recognized endpoint
    behaviors (values of :class:`LocalKind`, or ``TOUCHDOWN_AMBIGUOUS`` when
    f reaches zero without the interface slope).  ``source`` records where
    the samples came from.
    """

    xi: np.ndarray
    f: np.ndarray
    params: ModelParams
    source: str = ""
    interface_xi: float | None = None
    origin_tag: str | None = None
    tail_tag: str | None = None

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if xi.ndim != 1 or xi.shape != f.shape or xi.size < 2:
            raise ValueError("need matching 1-d xi/f arrays with >= 2 samples")
        if not np.all(np.diff(xi) > 0.0) or xi[0] <= 0.0:
            raise ValueError("xi samples must be strictly increasing and > 0")
        if np.any(f < -1e-12):
            raise ValueError("profile values must be nonnegative")
        f = np.maximum(f, 0.0)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "f", f)

    @property
    def n(self) -> int:
        return int(self.xi.size)

    def annotations(self) -> dict:
        p = self.params
        return {
            "tool": "blowprof",
            "version": __version__,
            "m": p.m,
            "N": p.N,
            "sigma": p.sigma,
            "source": self.source,
            "n_samples": self.n,
            "xi_range": [float(self.xi[0]), float(self.xi[-1])],
            "interface_xi": self.interface_xi,
            "origin_tag": self.origin_tag,
            "tail_tag": self.tail_tag,
        }

    def to_jsonable(self) -> dict:
        out = self.annotations()
        out["xi"] = [float(v) for v in self.xi]
        out["f"] = [float(v) for v in self.f]
        return out

    def to_csv(self, path) -> None:
        """Write ``xi,f`` rows under a header naming params and tool version."""
        p = self.params
        head = (
            f"# blowprof {__version__} profile"
            f" m={_fmt(p.m)} N={_fmt(p.N)} sigma={_fmt(p.sigma)}"
            f" source={self.source or '-'}"
            f" interface_xi={'' if self.interface_xi is None else _fmt(self.interface_xi)}"
            f" origin={self.origin_tag or '-'} tail={self.tail_tag or '-'}"
        )
        lines = [head, "xi,f"]
        lines.extend(
            f"{_fmt(x)},{_fmt(v)}" for x, v in zip(self.xi, self.f)
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def _phase_to_samples(states: np.ndarray, params: ModelParams):
    """(X,Y,Z) rows → (xi, f, Y) sorted strictly increasing in ξ."""
    m, sigma = params.m, params.sigma
    states = np.asarray(states, dtype=float)
    X, Y, Z = states[:, 0], states[:, 1], states[:, 2]
    good = (X > 0.0) & (Z > 0.0)
    if not np.any(good):
        raise ProfileError(
            "DEGENERATE_TRAJECTORY",
            "no sample has X > 0 and Z > 0; the trajectory carries no profile",
        )
    lo, hi = np.argmax(good), len(good) - np.argmax(good[::-1])
    if not np.all(good[lo:hi]):
        raise ProfileError(
            "DEGENERATE_TRAJECTORY",
            "X or Z vanishes in the interior of the trajectory",
        )
    X, Y, Z = X[lo:hi], Y[lo:hi], Z[lo:hi]
    xi = (m * Z / X**2) ** (1.0 / (sigma + 2.0))
    f = (Z / ((m - 1.0) * xi**sigma)) ** (1.0 / (m - 1.0))
    order = np.argsort(xi, kind="stable")
    xi, f, Y = xi[order], f[order], Y[order]
    keep = np.concatenate(([True], np.diff(xi) > 0.0))
    return xi[keep], f[keep], Y[keep]


def _curve_from_states(
    states: np.ndarray, params: ModelParams, source: str
) -> ProfileCurve:
    xi, f, Y = _phase_to_samples(states, params)
    h0 = derived_constants(params).h0
    c = interface_slope_constant(params)
    m, N = params.m, params.N

    interface_xi = None
    tail_tag = None
    if f[-1] < _INTERFACE_F_TOL:
        # slope of f^{(m-1)/2} is (m-1)Y/(2 sqrt(m(m-1))), so the interface
        # slope test reduces to Y ≈ -h0 at the vanishing end
        if abs(Y[-1] + h0) <= _INTERFACE_SLOPE_RTOL * h0:
            interface_xi = float(xi[-1] + f[-1] ** ((m - 1.0) / 2.0) / c)
            tail_tag = LocalKind.INTERFACE.value
        else:
            tail_tag = "TOUCHDOWN_AMBIGUOUS"
    else:
        Z_end = (m - 1.0) * xi[-1] ** params.sigma * f[-1] ** (m - 1.0)
        X_end = math.sqrt(m * (m - 1.0)) * f[-1] ** ((m - 1.0) / 2.0) / xi[-1]
        if abs(Z_end - 1.0) < 0.1 and X_end < 0.1:
            tail_tag = LocalKind.TAIL_P3.value

    origin_tag = None
    X0 = math.sqrt(m * (m - 1.0)) * f[0] ** ((m - 1.0) / 2.0) / xi[0]
    if X0 > 50.0:
        yx = Y[0] / X0
        q5 = (2.0 - N) / m
        if q5 < 0.0 and yx < 0.5 * q5:
            origin_tag = LocalKind.ASYMPTOTE_Q5.value
        elif N == 2.0 and yx < -0.05:
            origin_tag = LocalKind.LOG_Q1_N2.value
        else:
            origin_tag = LocalKind.FLAT_Q1.value
    elif f[0] < _INTERFACE_F_TOL:
        if abs(Y[0] - h0) <= _INTERFACE_SLOPE_RTOL * h0:
            origin_tag = LocalKind.OUT_P0.value
    else:
        sbar = math.sqrt(2.0 * (m * N - N + 2.0))
        Z0 = (m - 1.0) * xi[0] ** params.sigma * f[0] ** (m - 1.0)
        d_p2 = math.hypot(X0 - (m - 1.0) / sbar, Y[0] - 2.0 / sbar, Z0)
        if d_p2 < 0.05:
            origin_tag = LocalKind.ORIGIN_P2.value

    return ProfileCurve(
        xi=xi,
        f=f,
        params=params,
        source=source,
        interface_xi=interface_xi,
        origin_tag=origin_tag,
        tail_tag=tail_tag,
    )


def reconstruct_profile(
    traj, *, eta_step: float | None = None, source: str | None = None
) -> ProfileCurve:
    """Invert a recorded phase trajectory into its (ξ, f) samples.

    The trajectory must live on the primary (X, Y, Z) chart with X > 0 and
    Z > 0 on its interior (leading/trailing samples on the invariant planes
    are trimmed; an interior zero raises DEGENERATE_TRAJECTORY).  With
    ``eta_step`` the dense output is resampled at that uniform η spacing,
    which sharpens finite-difference consistency checks on the result.
    """
    if traj.chart is not ChartId.MAIN:
        raise ChartError(
            "BAD_CHART",
            f"profile reconstruction needs the (X, Y, Z) chart, got "
            f"{traj.chart.name}",
        )
    if eta_step is not None:
        if traj.dense is None:
            raise ValueError("eta_step resampling needs a recorded trajectory")
        end = traj.final_eta
        n = max(2, int(abs(end) / eta_step) + 1)
        etas = np.linspace(0.0, end, n)
        states = np.array([traj.interpolate(e) for e in etas])
    else:
        states = traj.states
    return _curve_from_states(
        states, traj.params, source or f"trajectory:{traj.chart.name}"
    )


def curve_to_phase(curve: ProfileCurve):
    """Map samples back to phase variables; Y via finite differences.

    Returns (X, Y, Z) arrays.  X and Z are exact pointwise images; Y needs
    the derivative of f^{(m-1)/2}, estimated here by second-order
    differences on the ξ grid (one-sided at the ends).
    """
    m, sigma = curve.params.m, curve.params.sigma
    xi, f = curve.xi, curve.f
    X = math.sqrt(m * (m - 1.0)) * f ** ((m - 1.0) / 2.0) / xi
    Z = (m - 1.0) * xi**sigma * f ** (m - 1.0)
    w = f ** ((m - 1.0) / 2.0)
    Y = 2.0 * math.sqrt(m * (m - 1.0)) / (m - 1.0) * np.gradient(w, xi, edge_order=2)
    return X, Y, Z


# ---------------------------------------------------------------------------
# direct ξ-domain integration (the oracle route)
# ---------------------------------------------------------------------------

#: kinds whose natural integration direction is toward smaller ξ
_LEFTWARD_KINDS = (LocalKind.INTERFACE, LocalKind.TAIL_P3, LocalKind.HYPERBOLA)


def direct_ode_solve(
    params: ModelParams,
    anchor: LocalBehavior,
    span,
    *,
    delta: float | None = None,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    samples: int | None = None,
) -> ProfileCurve:
    """Integrate the profile equation in ξ from an endpoint expansion.

    ``anchor`` supplies the Cauchy datum a distance ``delta`` off its
    singular point (default 1e-4 for INTERFACE/OUT_P0, 1e-6 for the origin
    kinds); TAIL_P3/HYPERBOLA anchors start at the far end of ``span``.
    ``span = (ξ_lo, ξ_hi)`` bounds the integration; the sweep runs leftward
    (toward ξ_lo) for INTERFACE/TAIL_P3/HYPERBOLA anchors and rightward
    otherwise.  The integration state is (f^m, (f^m)'), whose equation
    stays regular where f vanishes (the f-form rhs carries f^{1-m}).
    ``samples`` resamples the dense output on that many uniform ξ points,
    which spline-based consistency checks need; the default keeps the
    solver's accepted steps.

    Raises BLOWUP if f exceeds an escape cap inside the span and TOUCHDOWN
    if f reaches zero with a slope not matching the interface constant; a
    matching slope ends the sweep cleanly with an interface annotation.
    """
    from scipy.integrate import solve_ivp

    if anchor.params != params:
        raise ProfileError(
            "BAD_CONSTANTS", "anchor was built for different parameters"
        )
    lo, hi = (float(span[0]), float(span[1]))
    if not (0.0 < lo < hi):
        raise ValueError(f"need 0 < xi_lo < xi_hi, got {span!r}")
    kind = anchor.kind
    m, N, sigma = params.m, params.N, params.sigma
    c = interface_slope_constant(params)

    if kind in (LocalKind.INTERFACE, LocalKind.OUT_P0):
        d = 1e-4 if delta is None else float(delta)
        xi0 = anchor.vanishing_xi
        start = xi0 - d if kind is LocalKind.INTERFACE else xi0 + d
    elif kind in (LocalKind.TAIL_P3, LocalKind.HYPERBOLA):
        start = hi
    else:
        start = 1e-6 if delta is None else float(delta)
    target = lo if kind in _LEFTWARD_KINDS else hi
    if not (lo <= start <= hi) or start == target:
        raise ValueError(
            f"anchor start xi={start:.6g} incompatible with span {span!r}"
        )

    f0 = float(anchor.evaluate(start))
    fp0 = float(anchor.derivative(start))
    if not (f0 > 0.0 and np.isfinite(fp0)):
        raise ProfileError(
            "BAD_CONSTANTS",
            f"{kind.value} datum at xi={start:.6g} is not positive and finite",
        )
    u0 = [f0**m, m * f0 ** (m - 1.0) * fp0]

    def rhs(t, u):
        f = max(u[0], 0.0) ** (1.0 / m)
        return [
            u[1],
            f / (m - 1.0) - t**sigma * u[0] - (N - 1.0) / t * u[1],
        ]

    # Touchdown is declared at a floor where the flux signal (f^m)' ≈
    # (2m/(m-1))·c·f^{(m+1)/2} at an interface still clears the integrator's
    # absolute noise by 1e4, so the slope test reads signal, not noise.
    c_flux = 2.0 * m / (m - 1.0) * c
    touch_f = max(_F_TOUCH, (1e4 * abs_tol / c_flux) ** (2.0 / (m + 1.0)))

    def ev_touch(t, u):
        return u[0] - touch_f**m

    def ev_blow(t, u):
        return u[0] - _F_BLOW**m

    ev_touch.terminal = True
    ev_touch.direction = -1.0
    ev_blow.terminal = True
    ev_blow.direction = 1.0

    sol = solve_ivp(
        rhs,
        (start, target),
        u0,
        method="RK45",
        rtol=rel_tol,
        atol=abs_tol,
        events=[ev_touch, ev_blow],
        dense_output=True,
    )
    if not sol.success and sol.status != 1:
        raise ProfileError(
            "BLOWUP", f"the sweep broke down before the span end: {sol.message}"
        )

    end = float(sol.t[-1])
    if samples is None:
        xs = list(sol.t)
        ps = list(sol.y[0])
    else:
        # log spacing keeps the relative resolution uniform, which the
        # power-law stretches of profiles need
        xs = list(np.geomspace(start, end, int(samples)))
        ps = list(sol.sol(xs)[0])
    interface_xi = None
    tail_tag = None
    origin_tag = None

    if sol.status == 1 and len(sol.t_events[1]):
        raise ProfileError(
            "BLOWUP",
            f"profile exceeded {_F_BLOW:g} at xi = {sol.t_events[1][0]:.6g}",
        )
    if sol.status == 1 and len(sol.t_events[0]):
        t_ev = float(sol.t_events[0][0])
        p_ev, g_ev = (float(v) for v in sol.y_events[0][0])
        f_ev = max(p_ev, 0.0) ** (1.0 / m)
        slope = (m - 1.0) / (2.0 * m) * g_ev * f_ev ** (-(m + 1.0) / 2.0)
        if abs(abs(slope) - c) > _INTERFACE_SLOPE_RTOL * c:
            raise ProfileError(
                "TOUCHDOWN",
                f"profile vanished at xi = {t_ev:.6g} with "
                f"d(f^((m-1)/2))/dxi = {slope:.6g}, not matching the "
                f"interface constant {c:.6g} in magnitude",
            )
        w_ev = f_ev ** ((m - 1.0) / 2.0)
        if kind in _LEFTWARD_KINDS:
            origin_tag = LocalKind.OUT_P0.value
        else:
            interface_xi = t_ev + w_ev / c
            tail_tag = LocalKind.INTERFACE.value
        if xs[-1] != t_ev:
            xs.append(t_ev)
            ps.append(p_ev)

    if kind is LocalKind.INTERFACE:
        interface_xi = anchor.vanishing_xi
        tail_tag = LocalKind.INTERFACE.value
    if kind in (LocalKind.TAIL_P3, LocalKind.HYPERBOLA):
        tail_tag = tail_tag or kind.value
    if kind in (
        LocalKind.OUT_P0,
        LocalKind.ORIGIN_P2,
        LocalKind.FLAT_Q1,
        LocalKind.ASYMPTOTE_Q5,
        LocalKind.LOG_Q1_N2,
    ):
        origin_tag = kind.value

    xi = np.asarray(xs)
    f = np.maximum(np.asarray(ps), 0.0) ** (1.0 / m)
    if xi[0] > xi[-1]:
        xi, f = xi[::-1], f[::-1]
    keep = np.concatenate(([True], np.diff(xi) > 0.0))
    return ProfileCurve(
        xi=xi[keep],
        f=np.maximum(f[keep], 0.0),
        params=params,
        source=f"ode:{kind.value}",
        interface_xi=interface_xi,
        origin_tag=origin_tag,
        tail_tag=tail_tag,
    )


def ode_residual(xi, f, m: float, N: float, sigma: float) -> np.ndarray:
    """Residual of the profile equation on samples, via a spline of f^m.

    Evaluates (f^m)'' + (N-1)/ξ (f^m)' - f/(m-1) + ξ^σ f^m with the
    derivatives taken from a cubic spline through (ln ξ, f^m) — the log
    abscissa keeps the spline's truncation error uniform across power-law
    stretches.  The raw (m, N, σ) signature deliberately skips parameter
    validation so target equations outside the admissible box (e.g. N = 1,
    σ = 0) can be tested.
    """
    from scipy.interpolate import CubicSpline

    xi = np.asarray(xi, dtype=float)
    f = np.asarray(f, dtype=float)
    if xi.size < 4:
        raise ValueError("need at least 4 samples for a spline residual")
    spline = CubicSpline(np.log(xi), f**m)
    s1 = spline(np.log(xi), 1)
    s2 = spline(np.log(xi), 2)
    return (
        (s2 + (N - 2.0) * s1) / xi**2
        - f / (m - 1.0)
        + xi**sigma * f**m
    )


def profile_residual(curve: ProfileCurve) -> np.ndarray:
    """Residual of the curve in its own profile equation."""
    p = curve.params
    return ode_residual(curve.xi, curve.f, p.m, p.N, p.sigma)


# ---------------------------------------------------------------------------
# oscillation transform
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GExtremum:
    """One interior extremum of G - 1 with its energy value."""

    zeta: float
    G: float
    amplitude: float  # |G - 1|
    energy: float  # G^{2m}/(2m) - G^{m+1}/(m+1)
    is_max: bool


@dataclass(frozen=True)
class GTransform:
    """Tail-oscillation view of a profile.

    G(ζ) = (m-1)^{1/(m-1)} ξ^{σ/(m-1)} f = Z^{1/(m-1)} rectifies the
    invariant hyperbola to the line G = 1, with ζ = 2 ξ^{(σ+2)/2}/(σ+2).
    G then solves a profile equation of the same shape with effective
    dimension ``nbar`` = 1 - K1/((m-1)(σ+2)) (equal to 1 exactly at the
    critical σ) and perturbation coefficient ``k_coeff``/ζ².  Oscillation
    damping is read off the ``extrema`` of G - 1: decreasing amplitudes
    mean the profile cannot ride a phase-plane cycle forever.  The ζ grid
    is inherited from the ξ samples, keeping the extrema count exact.

    The finite-amplitude oscillation is asymmetric around G = 1: at equal
    energy, Φ(1+a) - Φ(1-a) = (3m-2)(m-1)a³/3 + O(a⁵) > 0, so each minimum
    dips a bit farther from 1 than the preceding maximum rises even when
    the energy is falling.  Successive *comparable* extrema are therefore
    the same-kind subsequences (max-to-max and min-to-min), and the damping
    verdict requires both to decrease strictly; the interleaved energy
    sequence ``energies`` decreases strictly as well for a damped tail and
    is exposed for direct checks.
    """

    zeta: np.ndarray
    G: np.ndarray
    extrema: tuple
    nbar: float
    k_coeff: float
    params: ModelParams

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([e.amplitude for e in self.extrema])

    @property
    def max_amplitudes(self) -> np.ndarray:
        return np.array([e.amplitude for e in self.extrema if e.is_max])

    @property
    def min_amplitudes(self) -> np.ndarray:
        return np.array([e.amplitude for e in self.extrema if not e.is_max])

    @property
    def energies(self) -> np.ndarray:
        return np.array([e.energy for e in self.extrema])

    @property
    def amplitudes_strictly_decreasing(self) -> bool:
        """Strict decrease of successive comparable |G - 1| extrema."""
        out = False
        for a in (self.max_amplitudes, self.min_amplitudes):
            if a.size < 2:
                continue
            if not np.all(np.diff(a) < 0.0):
                return False
            out = True
        return out


def g_transform(curve: ProfileCurve, params: ModelParams | None = None) -> GTransform:
    """Transform a profile into (ζ, G) and report its oscillation extrema."""
    params = params or curve.params
    m, sigma = params.m, params.sigma
    pack = coefficient_pack(params)
    xi, f = curve.xi, curve.f
    zeta = 2.0 / (sigma + 2.0) * xi ** ((sigma + 2.0) / 2.0)
    G = (m - 1.0) ** (1.0 / (m - 1.0)) * xi ** (sigma / (m - 1.0)) * f

    diffs = np.diff(G)
    extrema = []
    last = None  # sign of the previous nonzero difference
    for i, d in enumerate(diffs):
        s = 1 if d > 0.0 else (-1 if d < 0.0 else 0)
        if s == 0:
            continue
        if last is not None and s != last:
            g_i = float(G[i])
            extrema.append(
                GExtremum(
                    zeta=float(zeta[i]),
                    G=g_i,
                    amplitude=abs(g_i - 1.0),
                    energy=g_i ** (2.0 * m) / (2.0 * m)
                    - g_i ** (m + 1.0) / (m + 1.0),
                    is_max=last > 0,
                )
            )
        last = s

    nbar = 1.0 - pack.K1 / ((m - 1.0) * (sigma + 2.0))
    k_coeff = -4.0 * m * sigma * pack.K2 / ((m - 1.0) ** 2 * (sigma + 2.0) ** 2)
    return GTransform(
        zeta=zeta,
        G=G,
        extrema=tuple(extrema),
        nbar=nbar,
        k_coeff=k_coeff,
        params=params,
    )


def tail_exponent(curve: ProfileCurve, *, fraction: float = 0.25) -> float:
    """Log-log slope of f over the last ``fraction`` of the ln ξ range."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    mask = curve.f > 0.0
    lx, lf = np.log(curve.xi[mask]), np.log(curve.f[mask])
    cut = lx[-1] - fraction * (lx[-1] - lx[0])
    sel = lx >= cut
    if np.count_nonzero(sel) < 2:
        raise ValueError("not enough samples in the tail window")
    return float(np.polyfit(lx[sel], lf[sel], 1)[0])


def spiral_exponent_fit(
    crossings: Sequence, params: ModelParams, *, tail_fraction: float = 0.5
):
    """Fit X ~ C·r^k on section crossings spiraling toward (0, 0, 1).

    ``crossings`` are (η, (X, Y, Z)) pairs on the section {Y = 0} as logged
    by the fate classifier.  There r² = Y² + (Z-1)²/(m-1) reduces to
    |Z-1|/sqrt(m-1), and the approach obeys X ~ C·r^{K3} with
    K3 = -2(σ+2)(m-1)/K1.  Returns (fitted exponent, K3); the fit uses the
    last ``tail_fraction`` of the crossings, where the normal form is
    accurate.

    The section meets the spiral on both sides of the hyperbola (Z > 1 and
    Z < 1); the finite-amplitude corrections to the normal form enter those
    two families with opposite signs, so each is fitted separately and the
    slopes are averaged when both families have enough points.
    """
    m = params.m
    pack = coefficient_pack(params)
    pts = [
        (float(st[0]), (float(st[2]) - 1.0) / math.sqrt(m - 1.0))
        for _, st in crossings
    ]
    slopes = []
    for side in (1.0, -1.0):
        fam = [(x, side * r) for x, r in pts if x > 0.0 and side * r > 0.0]
        if len(fam) < 4:
            continue
        tail = fam[int(len(fam) * (1.0 - tail_fraction)) :]
        lx = np.log([x for x, _ in tail])
        lr = np.log([r for _, r in tail])
        slopes.append(float(np.polyfit(lr, lx, 1)[0]))
    if not slopes:
        raise ValueError("need at least 4 usable crossings on one side")
    return float(np.mean(slopes)), pack.K3


# ---------------------------------------------------------------------------
# the dimension-reducing self-map
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelfMapReport:
    """Exactness audit of the map to the one-dimensional homogeneous problem.

    At N* = (4m+2)/(m+1) and σ = σ_c(N*) = 2(m-1)/(m+1), the substitution
    ξ = (2mη/(m+1))^{(m+1)/2m}, F(η) = f(ξ)·(2mη/(m+1))^{1/m} sends a
    profile f to a solution F of the N = 1, σ = 0 equation
    (F^m)'' - F/(m-1) + F^m = 0.  ``residual`` holds that equation's spline
    residual on the mapped samples of a numerically shot interface profile;
    ``sup_residual`` is its sup normalized by the pointwise equation scale
    1 + F/(m-1) + F^m, so it reads as a relative defect.
    """

    m: float
    params: ModelParams
    curve: ProfileCurve
    eta: np.ndarray
    F: np.ndarray
    residual: np.ndarray
    sup_residual: float
    roundtrip_error: float

    def to_jsonable(self) -> dict:
        return {
            "m": self.m,
            "N": self.params.N,
            "sigma": self.params.sigma,
            "n_samples": int(self.eta.size),
            "eta_range": [float(self.eta[0]), float(self.eta[-1])],
            "sup_residual": self.sup_residual,
            "roundtrip_error": self.roundtrip_error,
        }


def self_map_eta(xi, m: float) -> np.ndarray:
    """Forward variable change ξ → η = (m+1)/(2m) · ξ^{2m/(m+1)}."""
    return (m + 1.0) / (2.0 * m) * np.asarray(xi, dtype=float) ** (
        2.0 * m / (m + 1.0)
    )


def self_map_xi(eta, m: float) -> np.ndarray:
    """Inverse variable change η → ξ = (2mη/(m+1))^{(m+1)/2m}."""
    return (2.0 * m / (m + 1.0) * np.asarray(eta, dtype=float)) ** (
        (m + 1.0) / (2.0 * m)
    )


def _record_p2_connection(
    params: ModelParams,
    *,
    ball_radius: float,
    epsilon: float = 1e-6,
    max_span: float = 500.0,
) -> ProfileCurve:
    """Record the orbit leaving P2 down to the interface point ball and
    reconstruct its profile."""
    from .integrate import (
        BallEntry,
        Escape,
        EventKind,
        IntegrationControls,
        integrate,
    )
    from .shooting import SeedOrigin, SeedSpec, seed

    h0 = derived_constants(params).h0
    chart, state = seed(
        SeedSpec(origin=SeedOrigin.P2_E3, epsilon=epsilon), params
    )
    traj = integrate(
        chart,
        state,
        params,
        IntegrationControls(max_span=max_span, direction="forward"),
        [
            BallEntry(
                center=(0.0, -h0, 0.0),
                radius=ball_radius,
                field_gate=0.0,
                terminal=True,
                label="P1",
            ),
            Escape(threshold=1e3),
        ],
        record=True,
    )
    ev = traj.terminal_event
    if ev is None or ev.kind is not EventKind.BALL_ENTRY:
        raise ProfileError(
            "NO_PROFILE",
            f"the orbit leaving P2 missed the interface point ball "
            f"(radius {ball_radius:g}, status {traj.status}) — no good "
            f"profile was captured",
        )
    # resample on a uniform η grid so spline-based residual checks see a
    # dense, evenly spaced curve rather than the integrator's natural steps
    etas = np.linspace(0.0, traj.final_eta, 4096)
    states = np.array([traj.interpolate(e) for e in etas])
    return _curve_from_states(states, params, source="shoot:P2_E3:connection")


def self_map_check(
    m: float,
    *,
    ball_radius: float | None = None,
    epsilon: float = 1e-6,
    max_span: float = 500.0,
) -> SelfMapReport:
    """Record the good profile at (N*, σ_c(N*)) and audit the self-map.

    At N* the transition value of σ coincides with σ_c, so the unique orbit
    leaving P2 connects to the interface point P1: the good profile there
    has the quadratic-origin behavior, and its image under the variable
    change is the compactly supported solution of the one-dimensional
    homogeneous equation.  The connection is recorded with a widened
    detector ball, the profile is mapped through the variable change, and
    the report carries the residual of the image in the N = 1, σ = 0
    profile equation together with the round-trip error of the map itself.
    Raises NO_PROFILE when the orbit misses the ball.

    ``ball_radius`` defaults to twice the empirical approach floor
    10^(-19(m-1)/(3m+1)), clipped to [5e-3, 0.25]: rounding noise of
    relative size ~1e-19 re-injected along the connection limits the
    closest approach to the saddle by the ratio of its approach rate
    (m-1)h0/2 to the sum of approach and escape rates, giving the exponent
    (m-1)/(3m+1), so smaller m needs a wider detector.  The curve simply
    ends at the ball boundary; its residual quality does not depend on the
    radius.
    """
    params = validate_params(
        m, (4.0 * m + 2.0) / (m + 1.0), 2.0 * (m - 1.0) / (m + 1.0)
    )
    if ball_radius is None:
        floor = 10.0 ** (-19.0 * (m - 1.0) / (3.0 * m + 1.0))
        ball_radius = float(np.clip(2.0 * floor, 5e-3, 0.25))
    curve = _record_p2_connection(
        params, ball_radius=ball_radius, epsilon=epsilon, max_span=max_span
    )

    eta = self_map_eta(curve.xi, m)
    F = curve.f * (2.0 * m / (m + 1.0) * eta) ** (1.0 / m)
    residual = ode_residual(eta, F, m, 1.0, 0.0)
    scale = 1.0 + F / (m - 1.0) + F**m

    xi_back = self_map_xi(eta, m)
    f_back = F * (2.0 * m / (m + 1.0) * eta) ** (-1.0 / m)
    f_scale = float(np.max(curve.f))
    roundtrip = float(
        max(
            np.max(np.abs(xi_back - curve.xi) / np.maximum(curve.xi, 1.0)),
            np.max(np.abs(f_back - curve.f)) / f_scale,
        )
    )
    return SelfMapReport(
        m=float(m),
        params=params,
        curve=curve,
        eta=eta,
        F=F,
        residual=residual,
        sup_residual=float(np.max(np.abs(residual) / scale)),
        roundtrip_error=roundtrip,
    )
