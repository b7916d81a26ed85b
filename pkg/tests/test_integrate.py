"""Integrator behavior: accuracy, events, invariant planes, chart handoffs.

Oracles: an explicit tanh solution on the vertical axis, scipy's DOP853 on
generic orbits, and exact conservation on the invariant planes.
"""

import io
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from blowprof import validate_params
from blowprof.errors import ChartError, IntegrationError
from blowprof.integrate import (
    BallEntry,
    Escape,
    EventKind,
    IntegrationControls,
    PlaneCross,
    Stall,
    Trajectory,
    convert_state,
    integrate,
    poincare_section,
)
from blowprof.vectorfields import ChartId, eval_field
import blowprof._core as _core

P240 = validate_params(2.0, 4.0, 0.5)
H0 = math.sqrt(2.0 / 3.0)


# ---------------------------------------------------------------------------
# controls validation
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"rel_tol": 0.0},
        {"rel_tol": -1e-8},
        {"abs_tol": 0.0},
        {"max_span": 0.0},
        {"max_steps": 0},
        {"direction": "sideways"},
        {"first_step": -1.0},
        {"handoff_threshold": 0.0},
    ],
)
def test_controls_reject_bad_values(kwargs):
    with pytest.raises(ValueError):
        IntegrationControls(**kwargs)


def test_controls_direction_sign():
    assert IntegrationControls(direction="forward").dir_sign == 1
    assert IntegrationControls(direction="backward").dir_sign == -1


# ---------------------------------------------------------------------------
# accuracy oracles
# ---------------------------------------------------------------------------


def test_axis_orbit_matches_tanh_solution():
    # On {X = 0, Z = 0} the flow reduces to Y' = 1 - Y^2/h0^2, whose
    # solution from Y(0) = 0 is Y = h0 tanh(eta / h0).
    traj = integrate(
        ChartId.MAIN,
        (0.0, 0.0, 0.0),
        P240,
        IntegrationControls(max_span=3.0, rel_tol=1e-12, abs_tol=1e-14),
    )
    for eta in (0.5, 1.5, 3.0):
        y = traj.interpolate(eta)[1]
        assert y == pytest.approx(H0 * math.tanh(eta / H0), abs=1e-10)


def test_plane_cross_event_localizes_to_closed_form_eta():
    level = 0.5
    eta_exact = H0 * math.atanh(level / H0)
    traj = integrate(
        ChartId.MAIN,
        (0.0, 0.0, 0.0),
        P240,
        IntegrationControls(max_span=3.0, rel_tol=1e-12, abs_tol=1e-14),
        [PlaneCross(axis="Y", level=level, direction=0, terminal=True)],
    )
    assert traj.status == "event"
    ev = traj.terminal_event
    assert ev.kind is EventKind.PLANE_CROSS
    assert ev.eta == pytest.approx(eta_exact, abs=1e-9)
    assert ev.state[1] == pytest.approx(level, abs=1e-11)


def test_generic_orbit_matches_scipy():
    y0 = np.array([0.1, 0.5, 0.1])

    def rhs(_, y):
        return eval_field(ChartId.MAIN, y, P240)

    ref = solve_ivp(rhs, (0.0, 5.0), y0, method="DOP853", rtol=1e-12, atol=1e-14)
    traj = integrate(
        ChartId.MAIN, y0, P240, IntegrationControls(max_span=5.0, rel_tol=1e-11, abs_tol=1e-13)
    )
    assert np.allclose(traj.final_state, ref.y[:, -1], rtol=1e-8, atol=1e-10)


def test_backward_integration_inverts_forward():
    y0 = np.array([0.1, 0.5, 0.1])
    fwd = integrate(ChartId.MAIN, y0, P240, IntegrationControls(max_span=2.0))
    back = integrate(
        ChartId.MAIN,
        fwd.final_state,
        P240,
        IntegrationControls(max_span=2.0, direction="backward"),
    )
    assert back.final_eta == pytest.approx(-2.0)
    assert np.allclose(back.final_state, y0, atol=1e-8)


def test_invariant_planes_are_preserved_exactly():
    for y0, comp in [
        ((0.0, 0.3, 0.5), 0),
        ((0.0, -0.4, 0.8), 0),
        ((0.2, -0.3, 0.0), 2),
        ((0.4, 0.5, 0.0), 2),
    ]:
        traj = integrate(
            ChartId.MAIN, y0, P240, IntegrationControls(max_span=50.0), record=True
        )
        drift = np.abs(traj.states[:, comp])
        scale = 1.0 + np.linalg.norm(traj.states, axis=1)
        assert float(np.max(drift / scale)) <= 1e-10


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


def test_available_kernels_expose_python_fallback():
    kernels = _core.available_kernels()
    assert "python" in kernels
    assert _core.KERNEL in ("python", "cython")


@pytest.mark.skipif(
    "cython" not in _core.available_kernels(), reason="compiled kernel not built"
)
def test_compiled_and_python_kernels_agree_bitwise():
    kernels = _core.available_kernels()
    args = (
        int(ChartId.MAIN),
        (0.05, 0.55, 0.05),
        2.0,
        4.0,
        0.5,
        1,
        40.0,
        1e-10,
        1e-12,
        10**7,
        0.0,
        [],
        False,
    )
    res_py = kernels["python"].integrate_raw(*args)
    res_cy = kernels["cython"].integrate_raw(*args)
    assert res_py["status"] == res_cy["status"]
    assert res_py["nsteps"] == res_cy["nsteps"]
    assert np.max(np.abs(np.asarray(res_py["y"]) - np.asarray(res_cy["y"]))) == 0.0


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------


def test_ball_entry_starting_inside_returns_immediately():
    ball = BallEntry(center=(0.0, 0.0, 0.0), radius=0.5)
    traj = integrate(
        ChartId.MAIN, (0.0, 0.1, 0.1), P240, IntegrationControls(max_span=5.0), [ball]
    )
    assert traj.status == "event"
    assert traj.nsteps == 0 and traj.final_eta == 0.0
    assert traj.terminal_event.kind is EventKind.BALL_ENTRY


def test_ball_entry_localizes_on_the_sphere():
    center = (0.0, -H0, 0.0)
    ball = BallEntry(center=center, radius=1e-3, field_gate=0.0, label="sink")
    # the axis orbit from below approaches the stable axis point
    traj = integrate(
        ChartId.MAIN,
        (0.0, -2.5 * H0, 0.0),
        P240,
        IntegrationControls(max_span=50.0, direction="backward"),
        [ball],
    )
    assert traj.status == "event"
    ev = traj.terminal_event
    assert ev.kind is EventKind.BALL_ENTRY and ev.spec.label == "sink"
    dist = np.linalg.norm(np.asarray(ev.state) - np.asarray(center))
    assert dist == pytest.approx(1e-3, rel=1e-6)


def test_escape_event_and_inadmissible_start():
    esc = Escape(component="Y", threshold=10.0)
    traj = integrate(
        ChartId.MAIN, (0.0, -1.5, 0.0), P240, IntegrationControls(max_span=50.0), [esc]
    )
    assert traj.status == "event"
    assert traj.terminal_event.kind is EventKind.ESCAPE
    assert abs(traj.final_state[1]) == pytest.approx(10.0, rel=1e-9)
    with pytest.raises(IntegrationError) as exc:
        integrate(ChartId.MAIN, (0.0, -11.0, 0.0), P240, None, [esc])
    assert exc.value.code == "INADMISSIBLE_START"


def test_implicit_handoff_escape_terminates_runaway_orbits():
    ctl = IntegrationControls(max_span=100.0, handoff_threshold=50.0)
    traj = integrate(ChartId.MAIN, (0.0, -1.5, 0.0), P240, ctl)
    assert traj.status == "event"
    assert traj.terminal_event.kind is EventKind.ESCAPE
    assert float(np.max(np.abs(traj.final_state))) == pytest.approx(50.0, rel=1e-9)


def test_stall_event_near_equilibrium():
    traj = integrate(
        ChartId.MAIN,
        (0.0, 0.0, 0.0),
        P240,
        IntegrationControls(max_span=100.0),
        [Stall(threshold=1e-6)],
    )
    assert traj.status == "event"
    assert traj.terminal_event.kind is EventKind.STALL
    # the orbit has nearly reached the upper axis point by then
    assert traj.final_state[1] == pytest.approx(H0, abs=1e-5)


def test_max_steps_status():
    traj = integrate(
        ChartId.MAIN,
        (0.1, 0.2, 0.3),
        P240,
        IntegrationControls(max_span=1e4, max_steps=25),
    )
    assert traj.status == "max_steps"
    assert traj.nsteps == 25


# ---------------------------------------------------------------------------
# trajectory container
# ---------------------------------------------------------------------------


def test_trajectory_csv_and_json_roundtrip():
    traj = integrate(
        ChartId.MAIN, (0.1, 0.5, 0.1), P240, IntegrationControls(max_span=2.0), record=True
    )
    buf = io.StringIO()
    traj.to_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "eta,X,Y,Z"
    assert len(lines) == 1 + len(traj.etas)
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 0.0 and first[1:] == pytest.approx([0.1, 0.5, 0.1])
    doc = traj.to_jsonable()
    assert doc["chart"] == "MAIN"
    assert doc["status"] == traj.status
    assert "kernel" in doc and "version" in doc


def test_interpolate_matches_recorded_nodes():
    traj = integrate(
        ChartId.MAIN, (0.1, 0.5, 0.1), P240, IntegrationControls(max_span=2.0), record=True
    )
    k = len(traj.etas) // 2
    assert np.allclose(traj.interpolate(traj.etas[k]), traj.states[k], atol=1e-12)


def test_dimension_mismatch_raises():
    with pytest.raises(ChartError) as exc:
        integrate(ChartId.MAIN, (0.1, 0.2), P240)
    assert exc.value.code == "DIM_MISMATCH"


def test_rescaled_chart_requires_positive_sigma():
    p0 = validate_params(2.0, 4.0, 0.0)
    with pytest.raises(ChartError) as exc:
        integrate(ChartId.RESCALED, (0.1, 0.1, 0.1), p0)
    assert exc.value.code == "BAD_CHART"


# ---------------------------------------------------------------------------
# sections and chart conversion
# ---------------------------------------------------------------------------


def test_poincare_section_closes_on_plane_cycles():
    # orbits in {X = 0, Z > 0} are closed curves of a conserved quantity
    hits = poincare_section(
        ChartId.MAIN,
        (0.0, 0.1, 0.5),
        ("Z", 0.5),
        3,
        P240,
        IntegrationControls(max_span=200.0),
    )
    assert len(hits) == 3
    for h in hits:
        assert h[1] == pytest.approx(0.1, abs=1e-6)
        assert h[2] == pytest.approx(0.5, abs=1e-9)


def test_poincare_section_no_return():
    with pytest.raises(IntegrationError) as exc:
        poincare_section(
            ChartId.MAIN,
            (0.0, 0.1, 0.5),
            ("Z", 5.0),
            1,
            P240,
            IntegrationControls(max_span=20.0),
        )
    assert exc.value.code == "NO_RETURN"


def test_convert_state_roundtrips():
    rng = np.random.default_rng(3)
    for _ in range(25):
        s = rng.uniform(0.1, 0.9, size=3)
        for target in (ChartId.CHART_Q1, ChartId.ALT, ChartId.SHIFTED, ChartId.RESCALED):
            out = convert_state(ChartId.MAIN, target, s, P240)
            back = convert_state(target, ChartId.MAIN, out, P240)
            assert np.allclose(back, s, rtol=1e-12, atol=1e-12), target


def test_convert_state_rejects_undefined_targets():
    with pytest.raises(ChartError) as exc:
        convert_state(ChartId.MAIN, ChartId.CHART_Q1, (0.0, 0.5, 0.2), P240)
    assert exc.value.code == "BAD_STATE"
