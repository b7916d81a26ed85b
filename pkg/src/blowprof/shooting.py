"""Orbit seeding, asymptotic-fate classification, and transition bracketing.

The existence results for blow-up profiles reduce to connection problems:
orbits leaving one invariant set (the unique orbit out of P2 along its third
eigenvector, the two-dimensional unstable manifold of P0, the outgoing
directions at the infinity point Q1, or — in backward time — the beam of
orbits entering P1) must be followed until their asymptotic destination is
recognized.  This module provides

* :func:`seed` — construct starting states *on the manifold approximations*
  (never by raw perturbation of the base point),
* :func:`classify_fate` — integrate a seed across coordinate charts until a
  terminal rule fires, producing a :class:`FateReport`,
* :func:`bisect_transition` — bisection of the discrete fate function over a
  shooting parameter (σ, the beam parameter D, or a seed angle), bracketing
  the transition values whose existence the three-sets arguments prove,
* :func:`sweep` — independent fate classification over a parameter grid,
  with CSV/JSON serialization.

Classification works leg by leg: each leg is one :func:`~.integrate.integrate`
call in the current chart, with ball-entry detectors at the critical points
reachable in that chart, a non-terminal section monitor on {Y = 0} (MAIN
chart legs), and re-entry planes that hand infinity-chart orbits back to the
MAIN chart once they return to moderate coordinates.  Chart handoffs are
routed by the dominant component of the escaping state; the X-at-infinity
region uses the ALT chart, where the merged escape node (reported as Q5) is
an attracting node for backward orbits at every admissible parameter value.

Terminal-rule notes frozen here after measurement:

* P3 is non-hyperbolic and its spiral approach is algebraic, so a small ball
  with a field-norm gate is unreachable within any practical η budget.
  ``ENTERS_P3`` is therefore decided from the section monitor: strictly
  decreasing same-direction crossing amplitudes (the damping predicted for
  σ ≠ σ_c), with a cumulative-drop threshold so that a plateau (a cycle
  candidate) is never misread as damping.  At σ = σ_c exactly the damping
  prediction degenerates and P3-bound orbits are tagged
  ``INDETERMINATE``/``critical_case``.
* P1 is a saddle whose unstable/stable rate ratio is 2(m+1)/(m−1) (= 6 at
  m = 2).  A forward orbit shot at its two-dimensional stable manifold can
  approach it no closer than roughly ``c^{s/(s+u)}`` with ``c`` at the
  rounding floor — measured ≈ 1.4e−3 at m = 2 in double precision.  The
  default ball (radius 1e−4, field gate 1e−6) is therefore *sound but not
  complete* for forward seeds: it never misfires, but certifying a forward
  connection into P1 requires widening ``ball_radius`` (and dropping the
  gate) past that floor — the single most result-sensitive knob, exposed
  here and on the command line.  Backward beam orbits leave P1 along its
  one-dimensional unstable direction, for which the default ball works.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import BisectionError, BlowprofError, SeedError
from .integrate import (
    BallEntry,
    Event,
    EventKind,
    IntegrationControls,
    PlaneCross,
    Stall,
    convert_state,
    integrate,
)
from .model import ModelParams, coefficient_pack, derived_constants
from .vectorfields import ChartId, PointId, eval_field, manifold_approx

__all__ = [
    "SeedOrigin",
    "SeedSpec",
    "Fate",
    "ProfileClass",
    "FateReport",
    "TransitionParameter",
    "TransitionBracket",
    "seed",
    "classify_fate",
    "bisect_transition",
    "sweep",
    "sweep_to_csv",
    "sweep_to_jsonable",
]


class SeedOrigin(Enum):
    """Where a shot orbit starts."""

    P2_E3 = "P2_E3"
    P0_UNSTABLE = "P0_UNSTABLE"
    Q1_OUT = "Q1_OUT"
    P1_BACKWARD = "P1_BACKWARD"
    Q5_OUT = "Q5_OUT"
    NEAR_P3 = "NEAR_P3"


@dataclass(frozen=True)
class SeedSpec:
    """A seed recipe: origin plus the parameters that origin consumes.

    ``epsilon`` is the offset from the base point, constrained to
    (0, 1e−3] so the manifold Taylor data stays accurate.  ``theta`` is the
    direction angle on the (X, H)-disk of the P0 unstable manifold, ``phi``
    the outgoing direction angle in the (w, z)-plane of chart Q1, ``D`` the
    beam parameter of the backward P1 family (Z = D·X² to leading order),
    and ``(x0, r0)`` the X-offset and rotation-plane radius of a NEAR_P3
    probe.
    """

    origin: SeedOrigin
    epsilon: float = 1e-6
    theta: float = -1.2
    phi: float = math.pi / 4.0
    D: float = 1.0
    x0: float = 1e-3
    r0: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "origin", SeedOrigin(self.origin))
        if not (0.0 < self.epsilon <= 1e-3):
            raise SeedError(
                "BAD_SPEC", f"epsilon must lie in (0, 1e-3], got {self.epsilon!r}"
            )


class Fate(Enum):
    """Recognized asymptotic destinations of a shot orbit."""

    ENTERS_P1 = "ENTERS_P1"
    ENTERS_P3 = "ENTERS_P3"
    ENTERS_Q3 = "ENTERS_Q3"
    ESCAPES_Q5 = "ESCAPES_Q5"
    CYCLE_SUSPECT = "CYCLE_SUSPECT"
    INDETERMINATE = "INDETERMINATE"


class ProfileClass(Enum):
    """Profile reading of a forward fate, by origin behavior.

    The three GOOD classes are the admissible origin behaviors of a good
    profile with interface — f(0) > 0 with f'(0) = 0 (orbits from Q1),
    f(0) = 0 with (f^m)'(0) = 0 (the orbit from P2), and f(0) = 0 with
    f'(0) > 0 (orbits from P0) — each combined with an interface, i.e. the
    orbit entering P1.  TAIL marks profiles ending in algebraic decay
    (orbits entering P3); NOT_GOOD marks blow-up/sign-change endings.
    """

    GOOD_P1_BEHAVIOR = "GOOD_P1_BEHAVIOR"
    GOOD_P2_BEHAVIOR = "GOOD_P2_BEHAVIOR"
    GOOD_P3_BEHAVIOR = "GOOD_P3_BEHAVIOR"
    TAIL = "TAIL"
    NOT_GOOD = "NOT_GOOD"


@dataclass(frozen=True)
class FateReport:
    """Outcome of one fate classification.

    ``crossings`` is the section-crossing log: (global η, MAIN state) at
    each {Y = 0} crossing, capped at ``_MAX_CROSSINGS`` (earliest dropped).
    ``terminal_node`` names the critical point actually reached when one
    was (it may refine the fate label: backward orbits absorbed by the
    Y → +∞ node report fate ENTERS_Q3 with terminal_node "Q2", the exact
    mirror of a forward Q3 entry).  ``legs`` records (chart, status, steps)
    per integration leg for diagnostics; ``reason`` explains INDETERMINATE
    outcomes, including any integrator error codes.
    """

    fate: Fate
    spec: SeedSpec
    params: ModelParams
    direction: str
    eta_span: float
    terminal_eta: float
    terminal_chart: ChartId | None
    terminal_state: tuple[float, ...]
    terminal_event: Event | None
    terminal_node: str | None
    profile_class: ProfileClass | None
    reason: str | None
    crossings: tuple[tuple[float, tuple[float, ...]], ...]
    legs: tuple[tuple[str, str, int], ...]

    @property
    def n_crossings(self) -> int:
        return len(self.crossings)

    def to_jsonable(self) -> dict:
        return {
            "fate": self.fate.value,
            "origin": self.spec.origin.value,
            "epsilon": self.spec.epsilon,
            "params": {
                "m": self.params.m,
                "N": self.params.N,
                "sigma": self.params.sigma,
            },
            "direction": self.direction,
            "eta_span": self.eta_span,
            "terminal_eta": self.terminal_eta,
            "terminal_chart": None
            if self.terminal_chart is None
            else self.terminal_chart.name,
            "terminal_state": list(self.terminal_state),
            "terminal_node": self.terminal_node,
            "profile_class": None
            if self.profile_class is None
            else self.profile_class.value,
            "reason": self.reason,
            "n_crossings": self.n_crossings,
            "legs": [list(leg) for leg in self.legs],
        }


# ---------------------------------------------------------------------------
# seeding


def _p0_graph_window(params: ModelParams) -> tuple[float, float]:
    """Angular window [θ_lo, θ_hi] with X ≥ 0 and Z0 ≥ 0 at first order."""
    pack = coefficient_pack(params)
    # P0 graph linear part: Z ≈ −A·X − B·H, so need A·cosθ + B·sinθ ≤ 0.
    edge = -math.atan2(pack.A, pack.B)  # upper boundary in (−π/2, 0)
    return (-math.pi / 2.0, edge)


def seed(spec: SeedSpec, params: ModelParams) -> tuple[ChartId, np.ndarray]:
    """Construct the starting (chart, state) for a seed recipe.

    * ``P2_E3`` — P2 + ε·e3 with e3 normalized to third component +1, which
      points into {Z > 0} (the unique orbit leaving P2 off the invariant
      plane).
    * ``P0_UNSTABLE(θ)`` — the point at radius ε, direction θ on the
      (X, H)-disk, lifted onto the quadratic graph Z0(X, H) of the unstable
      manifold of P0.  θ must keep X ≥ 0 and Z0 ≥ 0 (BAD_SPEC otherwise;
      the admissible window is reported in the message).
    * ``P1_BACKWARD(D)`` — the beam point (X, Y, Z) =
      (ε, −h0 − 2(N−1)ε/(3m+1), D·ε²), tangent to the family of orbits
      entering P1.
    * ``Q1_OUT(φ)`` — chart-Q1 state (y, z, w) = (0, ε·sinφ, ε·cosφ): radius
      ε in the outgoing (z, w)-plane of the saddle at Q1.
    * ``Q5_OUT`` — ALT-chart state (ε/√2, (2−N)/m, ε/√2): the escape node
      displaced into the interior along its two incoming axes.
    * ``NEAR_P3(x0, r0)`` — MAIN state (x0, (r0 − σ·x0)/(m−1), 1): X-offset
      x0 and rotation-plane amplitude r0 in the local frame at P3.
    """
    spec = spec if isinstance(spec, SeedSpec) else SeedSpec(origin=spec)
    m, N, sigma = params.m, params.N, params.sigma
    eps = spec.epsilon
    h0 = derived_constants(params).h0

    if spec.origin is SeedOrigin.P2_E3:
        pack = coefficient_pack(params)
        sbar = math.sqrt(2.0 * (m * N - N + 2.0))
        base = np.array([(m - 1.0) / sbar, 2.0 / sbar, 0.0])
        e3 = np.asarray(pack.e3, dtype=float)
        if not e3[2] > 0.0:  # pragma: no cover - normalization fixed in model
            e3 = -e3
        return ChartId.MAIN, base + eps * e3

    if spec.origin is SeedOrigin.P0_UNSTABLE:
        X = eps * math.cos(spec.theta)
        H = eps * math.sin(spec.theta)
        if abs(X) < 1e-12 * eps:
            X = 0.0
        lo, hi = _p0_graph_window(params)
        if X < 0.0:
            raise SeedError(
                "BAD_SPEC",
                f"theta={spec.theta!r} gives X < 0; admissible window is "
                f"about [{lo:.6f}, {hi:.6f}]",
            )
        graph = manifold_approx(PointId.P0, 2, params)
        Z = graph.evaluate(X, H)
        if Z < 0.0:
            if Z > -1e-13 * eps:
                Z = 0.0
            else:
                raise SeedError(
                    "BAD_SPEC",
                    f"theta={spec.theta!r} leaves the physical region "
                    f"(Z0 = {Z!r} < 0); admissible window is about "
                    f"[{lo:.6f}, {hi:.6f}]",
                )
        return ChartId.MAIN, np.array([X, h0 + H, Z])

    if spec.origin is SeedOrigin.P1_BACKWARD:
        if not spec.D > 0.0:
            raise SeedError("BAD_SPEC", f"P1_BACKWARD requires D > 0, got {spec.D!r}")
        Y = -h0 - 2.0 * (N - 1.0) * eps / (3.0 * m + 1.0)
        return ChartId.MAIN, np.array([eps, Y, spec.D * eps * eps])

    if spec.origin is SeedOrigin.Q1_OUT:
        z = eps * math.sin(spec.phi)
        w = eps * math.cos(spec.phi)
        if w <= 0.0 or z < -1e-12 * eps:
            raise SeedError(
                "BAD_SPEC",
                f"phi={spec.phi!r} must lie in [0, pi/2) so the chart-Q1 "
                "seed has w > 0 and z >= 0",
            )
        return ChartId.CHART_Q1, np.array([0.0, max(z, 0.0), w])

    if spec.origin is SeedOrigin.Q5_OUT:
        r = eps / math.sqrt(2.0)
        return ChartId.ALT, np.array([r, (2.0 - N) / m, r])

    if spec.origin is SeedOrigin.NEAR_P3:
        if spec.x0 < 0.0 or spec.r0 < 0.0 or spec.x0 + spec.r0 <= 0.0:
            raise SeedError(
                "BAD_SPEC",
                f"NEAR_P3 requires x0 >= 0, r0 >= 0, not both zero; "
                f"got x0={spec.x0!r}, r0={spec.r0!r}",
            )
        Y = (spec.r0 - sigma * spec.x0) / (m - 1.0)
        return ChartId.MAIN, np.array([spec.x0, Y, 1.0])

    raise SeedError("BAD_SPEC", f"unknown origin {spec.origin!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# fate classification

_MAX_CROSSINGS = 20000
_FIRST_LEG_SPAN = 10.0
_LEG_SPAN = 250.0
_DAMPING_WINDOW = 6
_DAMPING_MIN_DROP = 0.005
# Amplitude-ratio band for a cycle plateau, held over 25 consecutive returns
# (the contract asks for at least 5): a damped spiral near P3 loses ~T/(2η)
# per turn, which over 25 turns exceeds this band for every η within the
# span budget, while a genuine plateau sits flat at localization accuracy.
_CYCLE_RETURNS = 25
_CYCLE_BAND_WIDTH = 1.01
_P3_NEAR = 0.5
_P3_X_NEAR = 0.1

_P3_POINT = np.array([0.0, 0.0, 1.0])


def _ball(center, radius, gate, label) -> BallEntry:
    return BallEntry(
        center=tuple(center), radius=radius, field_gate=gate, terminal=True, label=label
    )


def _leg_events(
    chart: ChartId,
    start: np.ndarray,
    params: ModelParams,
    ball_radius: float,
    field_gate: float,
    direction: str,
) -> tuple[list, BallEntry | None]:
    """Event set for one leg, plus a ball the start already satisfies.

    A ball whose entry condition holds at the leg start (inside the radius
    with the field below the gate) is not armed: if the orbit is moving
    toward the center the entry is declared immediately (second return
    value); if it is moving away (every seed starts like this on its own
    base point), the ball is dropped for this leg and re-arms on the next.
    """
    m, N = params.m, params.N
    h0 = derived_constants(params).h0
    specs: list = []
    balls: list[tuple[tuple[float, ...], str]] = []
    if chart is ChartId.MAIN:
        sbar = math.sqrt(2.0 * (m * N - N + 2.0))
        balls = [
            ((0.0, h0, 0.0), "P0"),
            ((0.0, -h0, 0.0), "P1"),
            (((m - 1.0) / sbar, 2.0 / sbar, 0.0), "P2"),
        ]
        specs.append(
            PlaneCross(axis=1, level=0.0, direction=0, terminal=False, arm_eta=1e-12)
        )
    elif chart is ChartId.CHART_Q1:
        balls = [((0.0, 0.0, 0.0), "Q1"), (((2.0 - N) / m, 0.0, 0.0), "Q5")]
        if abs((2.0 - N) / m) <= ball_radius:
            # N = 2 merges the two nodes into a saddle-node; a forward orbit
            # reaching it has X -> infinity at moderate Y/X, so keep the
            # escape label.
            balls = [balls[1]]
        specs.append(PlaneCross(axis="w", level=1.0, direction=1, terminal=True))
    elif chart is ChartId.ALT:
        balls = [((0.0, (2.0 - N) / m, 0.0), "Q5")]
        specs.append(PlaneCross(axis="x", level=1.0, direction=1, terminal=True))
    elif chart is ChartId.CHART_Q2:
        balls = [((0.0, 0.0, 0.0), "Q2")]
        specs.append(PlaneCross(axis="w", level=0.5, direction=1, terminal=True))
    elif chart is ChartId.CHART_Q3:
        balls = [((0.0, 0.0, 0.0), "Q3")]
        specs.append(PlaneCross(axis="w", level=-0.5, direction=-1, terminal=True))
    field = eval_field(chart, start, params)
    fnorm = float(np.linalg.norm(field))
    dir_sign = -1.0 if direction == "backward" else 1.0
    satisfied: BallEntry | None = None
    for center, label in balls:
        offset = start - np.asarray(center)
        dist = float(np.linalg.norm(offset))
        if dist <= ball_radius and (field_gate <= 0.0 or fnorm <= field_gate):
            approaching = dir_sign * float(np.dot(offset, field)) < 0.0
            if approaching and satisfied is None:
                satisfied = _ball(center, ball_radius, field_gate, label)
            continue
        specs.append(_ball(center, ball_radius, field_gate, label))
    specs.append(Stall(threshold=1e-8, terminal=True))
    return specs, satisfied


def _oscillation_verdict(
    dists: list[float], x_last: float, ball_radius: float
) -> str | None:
    """Read the section-amplitude log: 'P3' (damped), 'CYCLE', or None.

    ``dists`` are distances to P3 at successive same-direction section
    crossings.  Damping must be strict over the window AND cumulatively
    ≥ _DAMPING_MIN_DROP so a plateau is never read as damping (a late
    algebraic spiral damps slowly, but far faster than localization noise);
    a plateau within the cycle band with X still above the ball scale is a
    cycle candidate.
    """
    n = len(dists)
    if n >= _DAMPING_WINDOW + 1:
        tail = dists[-(_DAMPING_WINDOW + 1) :]
        strict = all(b < a for a, b in zip(tail, tail[1:]))
        drop = 1.0 - tail[-1] / tail[0] if tail[0] > 0.0 else 0.0
        if (
            strict
            and drop >= _DAMPING_MIN_DROP
            and tail[-1] < _P3_NEAR
            and abs(x_last) < _P3_X_NEAR
        ):
            return "P3"
    if n >= _CYCLE_RETURNS + 1:
        tail = dists[-(_CYCLE_RETURNS + 1) :]
        lo, hi = min(tail), max(tail)
        if lo > 0.0 and hi / lo <= _CYCLE_BAND_WIDTH and x_last > ball_radius:
            return "CYCLE"
    return None


_BALL_FATES = {
    "P1": Fate.ENTERS_P1,
    "Q3": Fate.ENTERS_Q3,
    "Q2": Fate.ENTERS_Q3,
    "Q5": Fate.ESCAPES_Q5,
    # convergence to the remaining points is not a profile fate; it is
    # reported as INDETERMINATE with the node named (alpha-limit diagnostics
    # of backward runs bracketing the boundary set of the three-sets split)
    "P0": Fate.INDETERMINATE,
    "P2": Fate.INDETERMINATE,
    "Q1": Fate.INDETERMINATE,
}

_GOOD_BY_ORIGIN = {
    SeedOrigin.Q1_OUT: ProfileClass.GOOD_P1_BEHAVIOR,
    SeedOrigin.P2_E3: ProfileClass.GOOD_P2_BEHAVIOR,
    SeedOrigin.P0_UNSTABLE: ProfileClass.GOOD_P3_BEHAVIOR,
}


def _profile_class(origin: SeedOrigin, fate: Fate) -> ProfileClass | None:
    if origin not in _GOOD_BY_ORIGIN:
        return None
    if fate is Fate.ENTERS_P1:
        return _GOOD_BY_ORIGIN[origin]
    if fate is Fate.ENTERS_P3:
        return ProfileClass.TAIL
    if fate in (Fate.ENTERS_Q3, Fate.ESCAPES_Q5):
        return ProfileClass.NOT_GOOD
    return None


class _Run:
    """Mutable bookkeeping for one classification."""

    def __init__(self, spec, params, direction):
        self.spec = spec
        self.params = params
        self.direction = direction
        self.eta = 0.0
        self.span = 0.0
        self.legs: list[tuple[str, str, int]] = []
        self.crossings: list[tuple[float, tuple[float, ...]]] = []
        self.up: list[float] = []
        self.down: list[float] = []
        self.x_last = math.inf

    def add_crossings(self, traj, eta_base):
        sgn = 1.0 if self.direction == "forward" else -1.0
        for ev in traj.events:
            if ev.kind is not EventKind.PLANE_CROSS:
                continue
            if getattr(ev.spec, "terminal", True):
                continue  # re-entry planes are terminal; section monitor is not
            st = np.asarray(ev.state)
            d = float(np.linalg.norm(st - _P3_POINT))
            f = eval_field(ChartId.MAIN, st, self.params)
            if sgn * f[1] > 0.0:
                self.up.append(d)
            else:
                self.down.append(d)
            self.x_last = float(st[0])
            self.crossings.append((eta_base + ev.eta, tuple(float(v) for v in st)))
        if len(self.crossings) > _MAX_CROSSINGS:
            del self.crossings[: len(self.crossings) - _MAX_CROSSINGS]

    def verdict(self, ball_radius) -> str | None:
        for seq in (self.up, self.down):
            v = _oscillation_verdict(seq, self.x_last, ball_radius)
            if v is not None:
                return v
        return None

    def report(
        self,
        fate: Fate,
        *,
        chart=None,
        state=(),
        event=None,
        node=None,
        reason=None,
    ) -> FateReport:
        return FateReport(
            fate=fate,
            spec=self.spec,
            params=self.params,
            direction=self.direction,
            eta_span=self.span,
            terminal_eta=self.eta,
            terminal_chart=chart,
            terminal_state=tuple(float(v) for v in state),
            terminal_event=event,
            terminal_node=node,
            profile_class=_profile_class(self.spec.origin, fate),
            reason=reason,
            crossings=tuple(self.crossings),
            legs=tuple(self.legs),
        )


def _sanitize(chart: ChartId, state: np.ndarray) -> np.ndarray:
    """Clip roundoff-scale sign violations produced by chart conversion."""
    s = state.copy()
    tol = 1e-11 * (1.0 + float(np.max(np.abs(s))))
    nonneg = {
        ChartId.MAIN: (0, 2),
        ChartId.ALT: (0, 2),
        ChartId.CHART_Q1: (1, 2),
        ChartId.CHART_Q2: (0, 1, 2),
    }.get(chart, ())
    for i in nonneg:
        if -tol < s[i] < 0.0:
            s[i] = 0.0
    if chart is ChartId.CHART_Q3:
        for i in range(3):
            if 0.0 < s[i] < tol:
                s[i] = 0.0
    return s


def classify_fate(
    spec: SeedSpec,
    params: ModelParams,
    controls: IntegrationControls | None = None,
    *,
    ball_radius: float = 1e-4,
    field_gate: float = 1e-6,
    max_handoffs: int = 24,
) -> FateReport:
    """Integrate a seed until a terminal rule recognizes its destination.

    Forward time for the out-sets (P2_E3, P0_UNSTABLE, Q1_OUT, Q5_OUT,
    NEAR_P3), backward time for P1_BACKWARD.  ``controls.max_span`` is the
    total η budget across all legs and charts (chart time variables differ
    by positive factors, so the budget is a diagnostic total, not a single
    clock).  Integrator failures are absorbed into an INDETERMINATE report
    whose ``reason`` carries the error code.

    ``ball_radius``/``field_gate`` parametrize every point-entry detector;
    see the module docstring for why certifying forward P1 connections
    requires widening them past the double-precision shooting floor.
    """
    spec = spec if isinstance(spec, SeedSpec) else SeedSpec(origin=spec)
    controls = controls or IntegrationControls()
    direction = (
        "backward" if spec.origin is SeedOrigin.P1_BACKWARD else "forward"
    )
    run = _Run(spec, params, direction)

    dc = derived_constants(params)
    critical = abs(params.sigma - dc.sigma_c) <= 1e-12 * max(1.0, dc.sigma_c)

    try:
        chart, state = seed(spec, params)
    except SeedError as e:
        return run.report(Fate.INDETERMINATE, reason=f"{e.code}: {e.message}")

    main_thr = controls.handoff_threshold
    handoffs = 0
    first = True
    while run.span < controls.max_span - 1e-12:
        leg_span = min(
            _FIRST_LEG_SPAN if first else _LEG_SPAN, controls.max_span - run.span
        )
        first = False
        thr = main_thr if chart is ChartId.MAIN else controls.handoff_threshold
        ctl = IntegrationControls(
            rel_tol=controls.rel_tol,
            abs_tol=controls.abs_tol,
            max_span=leg_span,
            max_steps=controls.max_steps,
            handoff_threshold=thr,
            direction=direction,
        )
        specs, satisfied = _leg_events(
            chart, state, params, ball_radius, field_gate, direction
        )
        if satisfied is not None:
            label = satisfied.label
            fate = _BALL_FATES.get(label, Fate.INDETERMINATE)
            ev = Event(
                kind=EventKind.BALL_ENTRY,
                spec=satisfied,
                eta=run.eta,
                state=tuple(float(v) for v in state),
            )
            reason = None
            if fate is Fate.INDETERMINATE:
                reason = f"converged to {label}, which is not a profile fate"
            return run.report(
                fate, chart=chart, state=state, event=ev, node=label, reason=reason
            )
        eta_base = run.eta
        try:
            traj = integrate(chart, state, params, ctl, specs, record=False)
        except BlowprofError as e:
            return run.report(
                Fate.INDETERMINATE,
                chart=chart,
                state=state,
                reason=f"integration error {e.code}: {e.message}",
            )
        run.legs.append((chart.name, traj.status, traj.nsteps))
        run.eta += traj.final_eta
        run.span += abs(traj.final_eta)
        if chart is ChartId.MAIN:
            run.add_crossings(traj, eta_base)

        if traj.status == "event":
            ev = traj.terminal_event
            if ev.kind is EventKind.BALL_ENTRY:
                label = ev.spec.label
                fate = _BALL_FATES.get(label, Fate.INDETERMINATE)
                reason = None
                if fate is Fate.INDETERMINATE:
                    reason = f"converged to {label}, which is not a profile fate"
                return run.report(
                    fate,
                    chart=chart,
                    state=ev.state,
                    event=ev,
                    node=label,
                    reason=reason,
                )
            if ev.kind is EventKind.PLANE_CROSS:
                # re-entry plane: back to moderate coordinates
                state = _sanitize(
                    ChartId.MAIN, convert_state(chart, ChartId.MAIN, ev.state, params)
                )
                chart = ChartId.MAIN
                continue
            if ev.kind is EventKind.STALL:
                return run.report(
                    Fate.INDETERMINATE,
                    chart=chart,
                    state=ev.state,
                    event=ev,
                    reason="field stall away from the recognized points",
                )

        if traj.status == "handoff":
            handoffs += 1
            if handoffs > max_handoffs:
                return run.report(
                    Fate.INDETERMINATE,
                    chart=chart,
                    state=traj.final_state,
                    reason=f"exceeded {max_handoffs} chart handoffs",
                )
            try:
                X, Y, Z = convert_state(chart, ChartId.MAIN, traj.final_state, params)
            except BlowprofError:
                return run.report(
                    Fate.INDETERMINATE,
                    chart=chart,
                    state=traj.final_state,
                    reason="left the chart atlas (state not convertible)",
                )
            # Route to whichever chart renders the state small again,
            # preferring ALT (it carries the Q5 detector) over the Y-infinity
            # charts.  A state no chart moderates (e.g. a Z-dominant transient
            # with X and Z both large) continues in MAIN under a threshold
            # raised above its largest component.
            main_state = np.array([X, Y, Z])
            order = [ChartId.ALT] if X > 0.0 else []
            if Y < 0.0:
                order.append(ChartId.CHART_Q3)
            elif Y > 0.0:
                order.append(ChartId.CHART_Q2)
            routed = False
            for chart_new in order:
                try:
                    cand = convert_state(ChartId.MAIN, chart_new, main_state, params)
                except (BlowprofError, ZeroDivisionError, OverflowError):
                    continue
                cand = np.asarray(cand, dtype=float)
                if not np.all(np.isfinite(cand)):
                    continue
                if np.max(np.abs(cand)) <= 0.5 * controls.handoff_threshold:
                    state = _sanitize(chart_new, cand)
                    chart = chart_new
                    routed = True
                    break
            if routed:
                continue
            new_thr = max(10.0 * main_thr, 10.0 * float(np.max(np.abs(main_state))))
            if new_thr > 1e14:
                return run.report(
                    Fate.INDETERMINATE,
                    chart=chart,
                    state=traj.final_state,
                    reason="state growing without entering any chart node",
                )
            main_thr = new_thr
            chart = ChartId.MAIN
            state = _sanitize(chart, main_state)
            continue

        if traj.status == "max_steps":
            return run.report(
                Fate.INDETERMINATE,
                chart=chart,
                state=traj.final_state,
                reason="step budget exhausted",
            )

        # leg completed its span (or a non-terminal event run ended): check
        # the section monitor for confirmed damping, then continue in the
        # same chart.  The cycle plateau is only reported once the whole
        # span budget is spent: an orbit hovering near the invariant-plane
        # cycles may still break off toward Y = -infinity.
        if run.verdict(ball_radius) == "P3":
            if critical:
                return run.report(
                    Fate.INDETERMINATE,
                    chart=chart,
                    state=traj.final_state,
                    node="P3",
                    reason="critical_case: sigma = sigma_c, damping toward P3 "
                    "is not decidable from the section amplitudes",
                )
            return run.report(
                Fate.ENTERS_P3,
                chart=chart,
                state=traj.final_state,
                node="P3",
            )
        state = traj.final_state

    if run.verdict(ball_radius) == "CYCLE":
        return run.report(
            Fate.CYCLE_SUSPECT,
            chart=chart,
            state=state,
            reason="bounded non-damping oscillation with X above the "
            "ball scale for the full span budget",
        )
    return run.report(
        Fate.INDETERMINATE,
        chart=chart,
        state=state,
        reason=f"span budget {controls.max_span} exhausted without a verdict",
    )


# ---------------------------------------------------------------------------
# transition bracketing and sweeps


class TransitionParameter(Enum):
    """Shooting parameter bisected by :func:`bisect_transition`."""

    SIGMA = "SIGMA"
    D = "D"
    ANGLE = "ANGLE"


@dataclass(frozen=True)
class TransitionBracket:
    """A bracket [lo, hi] across which the discrete fate changes."""

    parameter: TransitionParameter
    lo: float
    hi: float
    fate_lo: Fate
    fate_hi: Fate
    width: float
    probes: int
    report_lo: FateReport
    report_hi: FateReport

    def to_jsonable(self) -> dict:
        return {
            "parameter": self.parameter.value,
            "lo": self.lo,
            "hi": self.hi,
            "fate_lo": self.fate_lo.value,
            "fate_hi": self.fate_hi.value,
            "width": self.width,
            "probes": self.probes,
        }


def _instantiate(
    parameter: TransitionParameter,
    value: float,
    spec: SeedSpec,
    params: ModelParams,
) -> tuple[SeedSpec, ModelParams]:
    if parameter is TransitionParameter.SIGMA:
        return spec, ModelParams(m=params.m, N=params.N, sigma=value)
    if parameter is TransitionParameter.D:
        if spec.origin is not SeedOrigin.P1_BACKWARD:
            raise SeedError("BAD_SPEC", "D is a P1_BACKWARD parameter")
        return replace(spec, D=value), params
    if parameter is TransitionParameter.ANGLE:
        if spec.origin is SeedOrigin.P0_UNSTABLE:
            return replace(spec, theta=value), params
        if spec.origin is SeedOrigin.Q1_OUT:
            return replace(spec, phi=value), params
        raise SeedError(
            "BAD_SPEC", "ANGLE applies to P0_UNSTABLE (theta) or Q1_OUT (phi)"
        )
    raise SeedError("BAD_SPEC", f"unknown parameter {parameter!r}")  # pragma: no cover


def bisect_transition(
    parameter: TransitionParameter | str,
    origin: SeedSpec | SeedOrigin,
    lo: float,
    hi: float,
    tol: float,
    params_base: ModelParams,
    controls: IntegrationControls | None = None,
    *,
    ball_radius: float = 1e-4,
    field_gate: float = 1e-6,
) -> TransitionBracket:
    """Bracket the first fate transition in [lo, hi] to width ≤ tol.

    Standard bisection on the discrete fate function.  The fate function
    need not be monotone; this returns the FIRST transition from ``lo``
    upward (a third fate appearing at a midpoint shrinks the bracket onto
    its left edge).  A midpoint that classifies INDETERMINATE — or
    CYCLE_SUSPECT, which is a suspicion rather than a destination and
    occurs on the thin hovering band around a transition — is replaced by
    nearby probes at ±w/8 and ±w/4 (the two sub-intervals it separates);
    if every probe of an interval is non-conclusive, or non-conclusive
    outcomes exceed half of all probes, the bisection aborts with
    TOO_MANY_INDETERMINATE.
    """
    parameter = TransitionParameter(parameter)
    spec = origin if isinstance(origin, SeedSpec) else SeedSpec(origin=origin)
    if not (lo < hi):
        raise BisectionError("SAME_FATE_AT_ENDPOINTS", f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0.0:
        raise BisectionError("SAME_FATE_AT_ENDPOINTS", f"tol must be > 0, got {tol}")

    probes = 0
    indet = 0

    inconclusive = (Fate.INDETERMINATE, Fate.CYCLE_SUSPECT)

    def classify(value: float) -> FateReport:
        nonlocal probes, indet
        s, p = _instantiate(parameter, value, spec, params_base)
        rep = classify_fate(
            s, p, controls, ball_radius=ball_radius, field_gate=field_gate
        )
        probes += 1
        if rep.fate in inconclusive:
            indet += 1
        return rep

    rep_lo = classify(lo)
    rep_hi = classify(hi)
    if rep_lo.fate is Fate.INDETERMINATE or rep_hi.fate is Fate.INDETERMINATE:
        which = lo if rep_lo.fate is Fate.INDETERMINATE else hi
        raise BisectionError(
            "TOO_MANY_INDETERMINATE",
            f"endpoint {which!r} classified INDETERMINATE "
            f"({(rep_lo if which == lo else rep_hi).reason})",
        )
    if rep_lo.fate is rep_hi.fate:
        raise BisectionError(
            "SAME_FATE_AT_ENDPOINTS",
            f"both endpoints classify as {rep_lo.fate.value}",
        )

    while hi - lo > tol:
        width = hi - lo
        candidates = [
            lo + 0.5 * width,
            lo + 0.375 * width,
            lo + 0.625 * width,
            lo + 0.25 * width,
            lo + 0.75 * width,
        ]
        placed = False
        for value in candidates:
            rep = classify(value)
            if rep.fate in inconclusive:
                if probes >= 6 and indet > 0.5 * probes:
                    raise BisectionError(
                        "TOO_MANY_INDETERMINATE",
                        f"{indet} of {probes} probes were non-conclusive",
                    )
                continue
            if rep.fate is rep_lo.fate:
                lo, rep_lo = value, rep
            else:
                # either the hi fate or a third fate: in both cases the
                # first transition from lo lies to the left of `value`
                hi, rep_hi = value, rep
            placed = True
            break
        if not placed:
            raise BisectionError(
                "TOO_MANY_INDETERMINATE",
                f"all probes in [{lo}, {hi}] were non-conclusive",
            )

    return TransitionBracket(
        parameter=parameter,
        lo=lo,
        hi=hi,
        fate_lo=rep_lo.fate,
        fate_hi=rep_hi.fate,
        width=hi - lo,
        probes=probes,
        report_lo=rep_lo,
        report_hi=rep_hi,
    )


def sweep(
    parameter: TransitionParameter | str,
    values,
    origin: SeedSpec | SeedOrigin,
    params_base: ModelParams,
    controls: IntegrationControls | None = None,
    *,
    ball_radius: float = 1e-4,
    field_gate: float = 1e-6,
) -> list[tuple[float, FateReport]]:
    """Classify independently over a sorted grid of parameter values.

    Pure and order-independent: each grid point builds its own seed and
    params, so results may be computed concurrently by a caller.  Per-point
    failures (bad seeds, integrator errors) are recorded as INDETERMINATE
    reports, never raised.
    """
    parameter = TransitionParameter(parameter)
    spec = origin if isinstance(origin, SeedSpec) else SeedSpec(origin=origin)
    values = [float(v) for v in values]
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("sweep grid must be sorted ascending")
    out: list[tuple[float, FateReport]] = []
    for v in values:
        try:
            s, p = _instantiate(parameter, v, spec, params_base)
            rep = classify_fate(
                s, p, controls, ball_radius=ball_radius, field_gate=field_gate
            )
        except BlowprofError as e:
            direction = (
                "backward" if spec.origin is SeedOrigin.P1_BACKWARD else "forward"
            )
            rep = FateReport(
                fate=Fate.INDETERMINATE,
                spec=spec,
                params=params_base,
                direction=direction,
                eta_span=0.0,
                terminal_eta=0.0,
                terminal_chart=None,
                terminal_state=(),
                terminal_event=None,
                terminal_node=None,
                profile_class=None,
                reason=f"{e.code}: {e.message}",
                crossings=(),
                legs=(),
            )
        out.append((v, rep))
    return out


_SWEEP_COLUMNS = (
    "value,fate,eta_span,terminal_eta,s0,s1,s2,"
    "terminal_chart,terminal_node,profile_class,reason"
)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v).replace(",", ";")


def sweep_to_csv(results: list[tuple[float, FateReport]], path) -> None:
    """Serialize sweep results as CSV (deterministic 17-digit formatting)."""
    lines = [_SWEEP_COLUMNS]
    for value, rep in results:
        st = list(rep.terminal_state) + [None] * (3 - len(rep.terminal_state))
        cells = [
            value,
            rep.fate.value,
            rep.eta_span,
            rep.terminal_eta,
            st[0],
            st[1],
            st[2],
            None if rep.terminal_chart is None else rep.terminal_chart.name,
            rep.terminal_node,
            None if rep.profile_class is None else rep.profile_class.value,
            rep.reason,
        ]
        lines.append(",".join(_csv_cell(c) for c in cells))
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def sweep_to_jsonable(results: list[tuple[float, FateReport]]) -> list[dict]:
    """JSON-ready rows for sweep results."""
    return [dict(value=v, **rep.to_jsonable()) for v, rep in results]
