"""Adaptive integration of chart fields with dense output and events.

Wraps the integrator kernel (compiled when available, pure Python otherwise)
behind validated controls, named event specifications, admissibility checks,
signed trajectory time, dense interpolation, and CSV/JSON serialization.

η is the phase-space independent variable; backward integration negates the
field, so trajectories always carry strictly monotone η of the requested
sign.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field
from enum import Enum

import numpy as np

from . import _core
from .errors import ChartError, IntegrationError
from .model import ModelParams
from .vectorfields import ChartId, chart_dim, chart_variables

__all__ = [
    "IntegrationControls",
    "EventKind",
    "PlaneCross",
    "SurfaceCross",
    "BallEntry",
    "Escape",
    "Stall",
    "Event",
    "Trajectory",
    "integrate",
    "poincare_section",
    "convert_state",
]

#: admissibility slack for region constraints like X ≥ 0 (rounding noise)
_ADMISSIBLE_SLACK = 1e-12


@dataclass(frozen=True)
class IntegrationControls:
    """Adaptive-stepping and termination controls.

    ``max_span`` is the η-length budget of one integration; ``direction``
    selects forward or backward flow; ``handoff_threshold`` is the component
    magnitude at which a trajectory is considered to have left the chart
    (an implicit terminal escape event).
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_span: float = 1e4
    max_steps: int = 10**7
    handoff_threshold: float = 1e3
    direction: str = "forward"
    first_step: float = 0.0

    def __post_init__(self):
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if not self.max_span > 0.0:
            raise ValueError("max_span must be positive")
        if self.direction not in ("forward", "backward"):
            raise ValueError("direction must be 'forward' or 'backward'")

    @property
    def dir_sign(self) -> int:
        return -1 if self.direction == "backward" else 1


class EventKind(Enum):
    PLANE_CROSS = "PLANE_CROSS"
    SURFACE_CROSS = "SURFACE_CROSS"
    BALL_ENTRY = "BALL_ENTRY"
    ESCAPE = "ESCAPE"
    STALL = "STALL"


@dataclass(frozen=True)
class PlaneCross:
    """Crossing of the plane {component = level}.

    ``axis`` is a component index or name (per the chart's variables);
    ``direction`` +1 triggers on upward crossings of the component, −1 on
    downward, 0 on both.  ``arm_eta`` suppresses triggers before that η
    offset (useful when starting exactly on the plane).
    """

    axis: int | str
    level: float = 0.0
    direction: int = 0
    terminal: bool = False
    arm_eta: float = 0.0

    kind = EventKind.PLANE_CROSS


@dataclass(frozen=True)
class SurfaceCross:
    """Crossing of the separatrix paraboloid Z = S(X, Y).

    Supported on the charts that carry (X, Y, Z)-equivalent coordinates
    (MAIN, SHIFTED, RESCALED).  ``direction`` refers to the sign change of
    Z − S(X, Y): +1 from below to above.
    """

    direction: int = 0
    terminal: bool = False
    surface: str = "separatrix"

    kind = EventKind.SURFACE_CROSS


@dataclass(frozen=True)
class BallEntry:
    """Entry into a ball around a point with a slow-field gate.

    Declares entry when both the distance drops below ``radius`` and (if
    ``field_gate`` > 0) the field norm is below ``field_gate`` — the standard
    numerical surrogate for convergence to a critical point.  ``label`` tags
    the destination in reports.
    """

    center: tuple[float, ...]
    radius: float = 1e-4
    field_gate: float = 1e-6
    terminal: bool = True
    label: str = ""

    kind = EventKind.BALL_ENTRY


@dataclass(frozen=True)
class Escape:
    """A component magnitude exceeding a threshold (chart breakdown).

    ``component=None`` watches all components.
    """

    component: int | str | None = None
    threshold: float = 1e3
    terminal: bool = True

    kind = EventKind.ESCAPE


@dataclass(frozen=True)
class Stall:
    """Field norm dropping below ``threshold`` away from known points."""

    threshold: float = 1e-8
    terminal: bool = True

    kind = EventKind.STALL


@dataclass(frozen=True)
class Event:
    """A localized event occurrence on a trajectory."""

    kind: EventKind
    spec: object
    eta: float
    state: tuple[float, ...]
    handoff: bool = False

    def to_jsonable(self) -> dict:
        return {
            "kind": self.kind.value,
            "eta": self.eta,
            "state": list(self.state),
            "handoff": self.handoff,
            "label": getattr(self.spec, "label", ""),
        }


def _axis_index(chart: ChartId, axis: int | str | None) -> int:
    if axis is None:
        return -1
    if isinstance(axis, str):
        names = chart_variables(chart)
        if axis not in names:
            raise ChartError(
                "DIM_MISMATCH", f"component {axis!r} not in chart {chart.name} {names}"
            )
        return names.index(axis)
    idx = int(axis)
    if not 0 <= idx < chart_dim(chart):
        raise ChartError("DIM_MISMATCH", f"component index {idx} out of range")
    return idx


_SURFACE_FORMS = {ChartId.MAIN: 0, ChartId.SHIFTED: 1, ChartId.RESCALED: 2}


def _pack_event(chart: ChartId, spec, controls: IntegrationControls):
    """Translate one event spec into a kernel row."""
    dim = chart_dim(chart)
    if isinstance(spec, PlaneCross):
        idx = _axis_index(chart, spec.axis)
        return (
            _core.EVENT_PLANE,
            1.0 if spec.terminal else 0.0,
            float(spec.direction),
            float(spec.arm_eta),
            float(idx),
            float(spec.level),
            0.0,
            0.0,
            0.0,
            0.0,
        )
    if isinstance(spec, SurfaceCross):
        if chart not in _SURFACE_FORMS:
            raise ChartError(
                "BAD_CHART",
                f"surface events are defined on MAIN/SHIFTED/RESCALED, not {chart.name}",
            )
        return (
            _core.EVENT_SURFACE,
            1.0 if spec.terminal else 0.0,
            float(spec.direction),
            0.0,
            float(_SURFACE_FORMS[chart]),
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        )
    if isinstance(spec, BallEntry):
        center = tuple(float(c) for c in spec.center)
        if len(center) != dim:
            raise ChartError("DIM_MISMATCH", "ball center dimension mismatch")
        c3 = center + (0.0,) * (3 - len(center))
        return (
            _core.EVENT_BALL,
            1.0 if spec.terminal else 0.0,
            -1.0,
            0.0,
            c3[0],
            c3[1],
            c3[2],
            float(spec.radius),
            float(spec.field_gate),
            0.0,
        )
    if isinstance(spec, Escape):
        idx = _axis_index(chart, spec.component)
        return (
            _core.EVENT_ESCAPE,
            1.0 if spec.terminal else 0.0,
            1.0,
            0.0,
            float(idx),
            float(spec.threshold),
            0.0,
            0.0,
            0.0,
            0.0,
        )
    if isinstance(spec, Stall):
        return (
            _core.EVENT_STALL,
            1.0 if spec.terminal else 0.0,
            -1.0,
            0.0,
            float(spec.threshold),
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        )
    raise TypeError(f"unknown event spec {spec!r}")


_ADMISSIBLE_NONNEG = {
    ChartId.MAIN: (0, 2),
    ChartId.SHIFTED: (0, 2),
    ChartId.PLANE_Z0: (0,),
    ChartId.PLANE_X0: (1,),
    ChartId.ALT: (0, 2),
    ChartId.RESCALED: (0, 2),
    ChartId.CHART_Q1: (1, 2),
    ChartId.CHART_Q2: (0, 1, 2),
    ChartId.CHART_Q3: (),
}

_ADMISSIBLE_NONPOS = {ChartId.CHART_Q3: (0, 1, 2)}


def _check_admissible(chart: ChartId, y0: np.ndarray):
    if not np.all(np.isfinite(y0)):
        raise IntegrationError("INADMISSIBLE_START", f"non-finite initial state {y0}")
    names = chart_variables(chart)
    for idx in _ADMISSIBLE_NONNEG.get(chart, ()):
        if y0[idx] < -_ADMISSIBLE_SLACK:
            raise IntegrationError(
                "INADMISSIBLE_START",
                f"{names[idx]} must be >= 0 in chart {chart.name}, got {y0[idx]}",
            )
    for idx in _ADMISSIBLE_NONPOS.get(chart, ()):
        if y0[idx] > _ADMISSIBLE_SLACK:
            raise IntegrationError(
                "INADMISSIBLE_START",
                f"{names[idx]} must be <= 0 in chart {chart.name}, got {y0[idx]}",
            )


@dataclass
class Trajectory:
    """A time-stamped solution path with dense output and an event log.

    ``samples`` are (η, state) rows at accepted steps; ``dense`` holds the
    per-step quartic interpolant (locally accurate to the pair's 5th order),
    so :meth:`interpolate` evaluates the solution at any interior η.
    ``status`` is one of ``completed`` (span exhausted), ``event`` (terminal
    event), ``handoff`` (left the chart), ``max_steps``.
    """

    chart: ChartId
    params: ModelParams
    direction: str
    etas: np.ndarray
    states: np.ndarray
    events: list[Event]
    status: str
    nsteps: int
    nfev: int
    dense: list | None = dataclass_field(default=None, repr=False)

    @property
    def dir_sign(self) -> int:
        return -1 if self.direction == "backward" else 1

    @property
    def initial_state(self) -> np.ndarray:
        return self.states[0]

    @property
    def final_eta(self) -> float:
        return float(self.etas[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def terminal_event(self) -> Event | None:
        if self.status in ("event", "handoff") and self.events:
            return self.events[-1]
        return None

    def interpolate(self, eta: float) -> np.ndarray:
        """Dense-output evaluation at η between the recorded endpoints."""
        if self.dense is None:
            raise ValueError("trajectory was recorded without dense output")
        tau = self.dir_sign * float(eta)
        if not self.dense:
            if abs(tau) <= 1e-12:
                return self.states[0].copy()
            raise ValueError(f"eta {eta} outside trajectory range")
        lo, hi = 0.0, abs(self.final_eta)
        if not (min(lo, hi) - 1e-12 <= tau <= max(lo, hi) + 1e-12):
            raise ValueError(f"eta {eta} outside trajectory range")
        dim = self.states.shape[1]
        # dense rows: (t_old, h, y_old tuple, q!...)
        for row in self.dense:
            t_old, h = row[0], row[1]
            if tau <= t_old + h or row is self.dense[-1]:
                theta = 0.0 if h == 0.0 else (tau - t_old) / h
                theta = min(max(theta, 0.0), 1.0)
                y_old = row[2]
                out = []
                for i in range(dim):
                    q = row[3][4 * i : 4 * i + 4]
                    out.append(
                        y_old[i]
                        + h
                        * theta
                        * (q[0] + theta * (q[1] + theta * (q[2] + theta * q[3])))
                    )
                return np.array(out)
        raise ValueError(f"eta {eta} outside trajectory range")  # pragma: no cover

    # -- serialization -----------------------------------------------------

    def to_csv(self, path) -> None:
        """Write samples as CSV with header ``eta,<components>``.

        Deterministic 17-significant-digit formatting: identical inputs give
        byte-identical files.
        """
        names = chart_variables(self.chart)
        lines = ["eta," + ",".join(names)]
        for eta, state in zip(self.etas, self.states):
            lines.append(
                format(eta, ".17g") + "," + ",".join(format(v, ".17g") for v in state)
            )
        text = "\n".join(lines) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)

    def to_jsonable(self) -> dict:
        from . import __version__

        return {
            "version": __version__,
            "kernel": _core.KERNEL,
            "chart": self.chart.name,
            "params": {
                "m": self.params.m,
                "N": self.params.N,
                "sigma": self.params.sigma,
            },
            "direction": self.direction,
            "status": self.status,
            "nsteps": self.nsteps,
            "nfev": self.nfev,
            "variables": list(chart_variables(self.chart)),
            "events": [ev.to_jsonable() for ev in self.events],
            "samples": [
                [float(eta)] + [float(v) for v in state]
                for eta, state in zip(self.etas, self.states)
            ],
        }

    def to_json(self, path) -> None:
        """Write the JSON envelope (chart, params, events, samples)."""
        text = json.dumps(self.to_jsonable(), indent=2)
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)


_STATUS_NAMES = {
    _core.STATUS_DONE: "completed",
    _core.STATUS_EVENT: "event",
    _core.STATUS_MAX_STEPS: "max_steps",
}


def integrate(
    chart: ChartId,
    initial,
    params: ModelParams,
    controls: IntegrationControls | None = None,
    event_specs: list | None = None,
    record: bool = True,
) -> Trajectory:
    """Integrate a chart field from ``initial`` under ``controls``.

    The run terminates at the first terminal event, at ``max_span``, at
    ``max_steps``, or on chart handoff (any component exceeding
    ``handoff_threshold`` — an implicit terminal escape).  Events are
    localized on the dense interpolant by bisection (64 halvings, i.e. to
    machine-level η-accuracy well below 1e−12 of a step).

    Raises ``INADMISSIBLE_START`` for states outside the chart's admissible
    region and ``STEP_UNDERFLOW`` when the stepper collapses; the underflow
    error carries the partial trajectory as ``error.trajectory``.
    """
    chart = ChartId(chart)
    controls = controls or IntegrationControls()
    event_specs = list(event_specs or [])
    if chart is ChartId.RESCALED and params.sigma <= 0.0:
        raise ChartError("BAD_CHART", "RESCALED chart requires sigma > 0")
    y0 = np.asarray(initial, dtype=float)
    if y0.shape != (chart_dim(chart),):
        raise ChartError(
            "DIM_MISMATCH",
            f"chart {chart.name} expects dimension {chart_dim(chart)}, got {y0.shape}",
        )
    _check_admissible(chart, y0)

    rows = [_pack_event(chart, spec, controls) for spec in event_specs]
    # implicit chart-handoff escape
    handoff_spec = Escape(component=None, threshold=controls.handoff_threshold)
    rows.append(_pack_event(chart, handoff_spec, controls))
    all_specs = event_specs + [handoff_spec]

    # start-condition screening for terminal condition-type events
    immediate: list[Event] = []
    for spec, row in zip(all_specs, rows):
        g0 = _event_value_py(row, tuple(y0), chart, params)
        if isinstance(spec, Escape) and g0 >= 0.0:
            raise IntegrationError(
                "INADMISSIBLE_START",
                f"initial state already beyond escape threshold ({spec})",
            )
        if isinstance(spec, (BallEntry, Stall)) and spec.terminal and g0 <= 0.0:
            immediate.append(
                Event(kind=spec.kind, spec=spec, eta=0.0, state=tuple(y0))
            )
    if immediate:
        return Trajectory(
            chart=chart,
            params=params,
            direction=controls.direction,
            etas=np.array([0.0]),
            states=y0.reshape(1, -1),
            events=immediate,
            status="event",
            nsteps=0,
            nfev=0,
            dense=[] if record else None,
        )

    res = _core.integrate_raw(
        int(chart),
        tuple(y0),
        params.m,
        params.N,
        params.sigma,
        controls.dir_sign,
        controls.max_span,
        controls.rel_tol,
        controls.abs_tol,
        controls.max_steps,
        controls.first_step,
        rows,
        record,
    )

    if res["status"] == _core.STATUS_UNDERFLOW or res["status"] == _core.STATUS_EVENT_OVERFLOW:
        code = (
            "STEP_UNDERFLOW"
            if res["status"] == _core.STATUS_UNDERFLOW
            else "EVENT_OVERFLOW"
        )
        err = IntegrationError(
            code,
            f"integration stopped at eta={controls.dir_sign * res['t']!r}, "
            f"state={res['y']!r}",
        )
        err.trajectory = _build_trajectory(
            chart, params, controls, all_specs, res, "failed", record
        )
        raise err

    status = _STATUS_NAMES[res["status"]]
    traj = _build_trajectory(chart, params, controls, all_specs, res, status, record)
    if status == "event" and traj.events and traj.events[-1].handoff:
        traj.status = "handoff"
    return traj


def _build_trajectory(chart, params, controls, all_specs, res, status, record=True) -> Trajectory:
    sgn = controls.dir_sign
    etas = sgn * np.asarray(res["ts"], dtype=float)
    states = np.asarray(res["ys"], dtype=float)
    events = []
    n_user = len(all_specs) - 1
    for idx, t_star, y_star in res["events"]:
        spec = all_specs[idx]
        events.append(
            Event(
                kind=spec.kind,
                spec=spec,
                eta=sgn * t_star,
                state=tuple(y_star),
                handoff=idx == n_user,
            )
        )
    dense = [(row[0], row[1], row[2], row[3:]) for row in res["dense"]] if record else None
    return Trajectory(
        chart=chart,
        params=params,
        direction=controls.direction,
        etas=etas,
        states=states,
        events=events,
        status=status,
        nsteps=res["nsteps"],
        nfev=res["nfev"],
        dense=dense,
    )


def _event_value_py(row, y, chart, params):
    """Evaluate one packed event row at a state (python-side start screening)."""
    from . import _kernel_py

    h0 = math.sqrt(2.0 / (params.m + 1.0))
    lam = 1.0 / params.sigma if params.sigma > 0.0 else 0.0
    return _kernel_py._event_value(
        tuple(float(v) for v in row),
        tuple(float(v) for v in y),
        int(chart),
        params.m,
        params.N,
        params.sigma,
        h0,
        lam,
    )


def poincare_section(
    chart: ChartId,
    initial,
    section: tuple[int | str, float],
    n_returns: int,
    params: ModelParams,
    controls: IntegrationControls | None = None,
) -> list[np.ndarray]:
    """Successive same-direction crossings of a plane section.

    The crossing direction is fixed by the field at the initial state (or by
    the first observed crossing when the initial state is tangent); returns
    ``n_returns`` states on the section.  Raises ``NO_RETURN`` when the span
    budget is exhausted first.
    """
    chart = ChartId(chart)
    controls = controls or IntegrationControls()
    axis, level = section
    idx = _axis_index(chart, axis)

    from .vectorfields import eval_field

    y0 = np.asarray(initial, dtype=float)
    f0 = eval_field(chart, y0, params) * controls.dir_sign
    ref = 0.0
    if abs(f0[idx]) > 0.0 and abs(y0[idx] - level) <= 1e-9:
        ref = math.copysign(1.0, f0[idx])

    spec = PlaneCross(axis=idx, level=level, direction=0, terminal=False)
    traj = integrate(chart, y0, params, controls, [spec], record=False)
    hits: list[np.ndarray] = []
    for ev in traj.events:
        if ev.kind is not EventKind.PLANE_CROSS:
            continue
        f = eval_field(chart, ev.state, params) * controls.dir_sign
        d = math.copysign(1.0, f[idx]) if f[idx] != 0.0 else 0.0
        if ref == 0.0:
            ref = d
        if d == ref:
            hits.append(np.asarray(ev.state))
            if len(hits) >= n_returns:
                return hits
    raise IntegrationError(
        "NO_RETURN",
        f"only {len(hits)} same-direction returns within max_span={controls.max_span}",
    )


# ---------------------------------------------------------------------------
# chart-to-chart state conversion (used for handoffs)


def convert_state(from_chart: ChartId, to_chart: ChartId, state, params: ModelParams):
    """Convert a state between charts through the (X, Y, Z) dictionary.

    Supported whenever the intermediate MAIN coordinates are finite and the
    target chart's coordinates are defined there.
    """
    from_chart = ChartId(from_chart)
    to_chart = ChartId(to_chart)
    s = np.asarray(state, dtype=float)
    h0 = math.sqrt(2.0 / (params.m + 1.0))
    sigma = params.sigma

    # to MAIN coordinates
    if from_chart is ChartId.MAIN:
        X, Y, Z = s
    elif from_chart is ChartId.SHIFTED:
        X, Y, Z = s[0], s[1] - h0, s[2]
    elif from_chart is ChartId.RESCALED:
        if sigma <= 0.0:
            raise ChartError("BAD_CHART", "RESCALED chart requires sigma > 0")
        X, Y, Z = s[0] / sigma, s[1], s[2]
    elif from_chart is ChartId.ALT:
        x, y, z = s
        if x <= 0.0:
            raise ChartError("BAD_STATE", "ALT chart needs x > 0 to convert")
        X = 1.0 / math.sqrt(x)
        Y = y * X
        Z = z * X * X
    elif from_chart is ChartId.CHART_Q1:
        y, z, w = s
        if w == 0.0:
            raise ChartError("BAD_STATE", "CHART_Q1 needs w != 0 to convert")
        X = 1.0 / w
        Y = y * X
        Z = z * X
    elif from_chart in (ChartId.CHART_Q2, ChartId.CHART_Q3):
        x, z, w = s
        if w == 0.0:
            raise ChartError("BAD_STATE", "CHART_Q2/Q3 need w != 0 to convert")
        Y = 1.0 / w
        X = x * Y
        Z = z * Y
    elif from_chart is ChartId.PLANE_Z0:
        X, Y, Z = s[0], s[1], 0.0
    elif from_chart is ChartId.PLANE_X0:
        X, Y, Z = 0.0, s[0], s[1]
    else:  # pragma: no cover
        raise ChartError("BAD_CHART", f"unsupported source chart {from_chart}")

    # from MAIN coordinates to target
    if to_chart is ChartId.MAIN:
        return np.array([X, Y, Z])
    if to_chart is ChartId.SHIFTED:
        return np.array([X, Y + h0, Z])
    if to_chart is ChartId.RESCALED:
        if sigma <= 0.0:
            raise ChartError("BAD_CHART", "RESCALED chart requires sigma > 0")
        return np.array([sigma * X, Y, Z])
    if to_chart is ChartId.ALT:
        if X <= 0.0:
            raise ChartError("BAD_STATE", "ALT chart needs X > 0")
        return np.array([1.0 / (X * X), Y / X, Z / (X * X)])
    if to_chart is ChartId.CHART_Q1:
        if X <= 0.0:
            raise ChartError("BAD_STATE", "CHART_Q1 needs X > 0")
        return np.array([Y / X, Z / X, 1.0 / X])
    if to_chart in (ChartId.CHART_Q2, ChartId.CHART_Q3):
        if Y == 0.0:
            raise ChartError("BAD_STATE", "CHART_Q2/Q3 need Y != 0")
        return np.array([X / Y, Z / Y, 1.0 / Y])
    if to_chart is ChartId.PLANE_Z0:
        return np.array([X, Y])
    if to_chart is ChartId.PLANE_X0:
        return np.array([Y, Z])
    raise ChartError("BAD_CHART", f"unsupported target chart {to_chart}")  # pragma: no cover
