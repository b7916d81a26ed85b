"""Pure-Python integrator kernel (fallback).

Implements exactly the same stepping semantics as the compiled kernel
``_kernel.pyx``: a Dormand–Prince 5(4) pair with the standard quartic dense
output, RMS error control, and event localization by bisection on the dense
interpolant.  The two kernels mirror each other line for line so they can be
cross-checked; keep any change synchronized.

State dimension is 2 or 3; the right-hand sides are the package's chart
fields keyed by the ``ChartId`` integer codes.

Event rows are 10-tuples of floats::

    (kind, terminal, direction, t_arm, p0, p1, p2, p3, p4, p5)

kind: 1 PLANE  g = y[p0] − p1
      2 BALL   g = dist(y, (p0,p1,p2)) − p3, combined with field-norm gate p4
               (if p4 > 0: g = max(dist − p3, fieldnorm − p4))
      3 ESCAPE g = |y[p0]| − p1 (p0 < 0: max over components)
      4 SURFACE g = Z − S(X, Y) with the separatrix paraboloid S; p0 selects
               the state convention (0 MAIN, 1 SHIFTED, 2 RESCALED)
      5 STALL  g = fieldnorm − p0

direction: −1 trigger on + → − crossings, +1 on − → +, 0 on any sign change.
Events localized before ``t_arm`` are ignored.
"""

from __future__ import annotations

import math

KERNEL_NAME = "python"

EVENT_PLANE = 1
EVENT_BALL = 2
EVENT_ESCAPE = 3
EVENT_SURFACE = 4
EVENT_STALL = 5

STATUS_DONE = 0
STATUS_EVENT = 1
STATUS_MAX_STEPS = 2
STATUS_UNDERFLOW = 3
STATUS_EVENT_OVERFLOW = 4

_MAX_EVENT_RECORDS = 4096

# Dormand–Prince 5(4) tableau
_C2, _C3, _C4, _C5, _C6 = 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
)
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = (
    35.0 / 384.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# dense-output matrix (7 stages x theta^1..theta^4)
_P = (
    (1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0),
    (0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0),
    (0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0),
    (0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0),
    (0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0),
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXPONENT = -0.2  # −1/(order+1) for the 4th-order error estimate


def _field(code, y, m, N, sigma, h0, lam):
    """Chart right-hand side; codes match ChartId integer values."""
    if code == 0:  # MAIN (X, Y, Z)
        X, Y, Z = y[0], y[1], y[2]
        return (
            0.5 * (m - 1.0) * X * Y - X * X,
            -0.5 * (m + 1.0) * Y * Y + 1.0 - Z - (N - 1.0) * X * Y,
            Z * ((m - 1.0) * Y + sigma * X),
        )
    if code == 1:  # SHIFTED (X, H, Z), Y = H − h0
        X, H, Z = y[0], y[1], y[2]
        Y = H - h0
        return (
            0.5 * (m - 1.0) * X * Y - X * X,
            -0.5 * (m + 1.0) * Y * Y + 1.0 - Z - (N - 1.0) * X * Y,
            Z * ((m - 1.0) * Y + sigma * X),
        )
    if code == 2:  # PLANE_Z0 (X, Y)
        X, Y = y[0], y[1]
        return (
            0.5 * (m - 1.0) * X * Y - X * X,
            -0.5 * (m + 1.0) * Y * Y + 1.0 - (N - 1.0) * X * Y,
        )
    if code == 3:  # PLANE_X0 (Y, Z)
        Y, Z = y[0], y[1]
        return (
            -0.5 * (m + 1.0) * Y * Y + 1.0 - Z,
            Z * (m - 1.0) * Y,
        )
    if code == 4:  # ALT (x, y, z)
        x, yy, z = y[0], y[1], y[2]
        return (
            x * (2.0 - (m - 1.0) * yy),
            -m * yy * yy - (N - 2.0) * yy + x - z,
            (sigma + 2.0) * z,
        )
    if code == 5:  # RESCALED (U, Y, Z), lam = 1/sigma
        U, Y, Z = y[0], y[1], y[2]
        return (
            0.5 * (m - 1.0) * U * Y - lam * U * U,
            -0.5 * (m + 1.0) * Y * Y + 1.0 - Z - (N - 1.0) * lam * U * Y,
            Z * ((m - 1.0) * Y + U),
        )
    if code == 6:  # CHART_Q1 (y, z, w)
        yv, z, w = y[0], y[1], y[2]
        return (
            -(N - 2.0) * yv - m * yv * yv - z * w + w * w,
            (sigma + 1.0) * z + 0.5 * (m - 1.0) * yv * z,
            w - 0.5 * (m - 1.0) * yv * w,
        )
    if code == 7:  # CHART_Q2 (x, z, w) — negated CHART_Q3 field
        x, z, w = y[0], y[1], y[2]
        return (
            -(-m * x + (2.0 - N) * x * x + x * w * w - x * z * w),
            -(
                -0.5 * (3.0 * m - 1.0) * z
                - (sigma + N - 1.0) * x * z
                + z * w * w
                - z * z * w
            ),
            -(-0.5 * (m + 1.0) * w - z * w * w + w * w * w - (N - 1.0) * x * w),
        )
    if code == 8:  # CHART_Q3 (x, z, w)
        x, z, w = y[0], y[1], y[2]
        return (
            -m * x + (2.0 - N) * x * x + x * w * w - x * z * w,
            -0.5 * (3.0 * m - 1.0) * z
            - (sigma + N - 1.0) * x * z
            + z * w * w
            - z * z * w,
            -0.5 * (m + 1.0) * w - z * w * w + w * w * w - (N - 1.0) * x * w,
        )
    raise ValueError(f"unknown chart code {code}")


def rhs_point(code, y, m, N, sigma):
    """Evaluate one chart field at one state; returns a tuple."""
    h0 = math.sqrt(2.0 / (m + 1.0))
    lam = 1.0 / sigma if sigma > 0.0 else 0.0
    return _field(int(code), tuple(float(v) for v in y), m, N, sigma, h0, lam)


def _fieldnorm(code, y, m, N, sigma, h0, lam):
    f = _field(code, y, m, N, sigma, h0, lam)
    s = 0.0
    for v in f:
        s += v * v
    return math.sqrt(s)


def _surface_height(form, y, m, N, sigma, h0, lam):
    if form == 1:  # SHIFTED
        X, Y = y[0], y[1] - h0
    elif form == 2:  # RESCALED
        X, Y = y[0] * lam, y[1]
    else:  # MAIN
        X, Y = y[0], y[1]
    return (
        2.0 * m / (m + 1.0)
        - (sigma + 2.0) * (2.0 * N + sigma - 2.0) / (8.0 * m) * X * X
        - 0.5 * (2.0 * N + sigma - 2.0) * X * Y
        - m * Y * Y
    )


def _event_value(row, y, code, m, N, sigma, h0, lam):
    kind = int(row[0])
    if kind == EVENT_PLANE:
        return y[int(row[4])] - row[5]
    if kind == EVENT_BALL:
        dim = len(y)
        s = 0.0
        for i in range(dim):
            d = y[i] - row[4 + i]
            s += d * d
        g = math.sqrt(s) - row[7]
        gate = row[8]
        if gate > 0.0:
            gn = _fieldnorm(code, y, m, N, sigma, h0, lam) - gate
            if gn > g:
                g = gn
        return g
    if kind == EVENT_ESCAPE:
        axis = int(row[4])
        if axis < 0:
            big = 0.0
            for v in y:
                if abs(v) > big:
                    big = abs(v)
            return big - row[5]
        return abs(y[axis]) - row[5]
    if kind == EVENT_SURFACE:
        return y[2] - _surface_height(int(row[4]), y, m, N, sigma, h0, lam)
    if kind == EVENT_STALL:
        return _fieldnorm(code, y, m, N, sigma, h0, lam) - row[4]
    raise ValueError(f"unknown event kind {kind}")


def _dense_eval(y_old, h, Q, theta, dim):
    out = []
    for i in range(dim):
        q = Q[i]
        out.append(y_old[i] + h * theta * (q[0] + theta * (q[1] + theta * (q[2] + theta * q[3]))))
    return tuple(out)


def _initial_step(code, y, f, m, N, sigma, h0, lam, direction, rtol, atol, span):
    dim = len(y)
    d0 = 0.0
    d1 = 0.0
    for i in range(dim):
        scale = atol + abs(y[i]) * rtol
        d0 += (y[i] / scale) ** 2
        d1 += (f[i] / scale) ** 2
    d0 = math.sqrt(d0 / dim)
    d1 = math.sqrt(d1 / dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h_init = 1e-6
    else:
        h_init = 0.01 * d0 / d1
    h_init = min(h_init, span)
    y1 = tuple(y[i] + h_init * f[i] for i in range(dim))
    f1 = _field(code, y1, m, N, sigma, h0, lam)
    if direction < 0:
        f1 = tuple(-v for v in f1)
    d2 = 0.0
    for i in range(dim):
        scale = atol + abs(y[i]) * rtol
        d2 += ((f1[i] - f[i]) / scale) ** 2
    d2 = math.sqrt(d2 / dim) / h_init
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h_init * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h_init, h1, span)


def integrate_raw(
    code,
    y0,
    m,
    N,
    sigma,
    direction,
    span,
    rtol,
    atol,
    max_steps,
    first_step,
    events,
    record,
):
    """Integrate one chart field in internal time τ ∈ [0, span].

    ``direction`` = ±1 selects forward/backward integration (field negation);
    τ is always non-negative, callers map it to signed η.  Returns a dict with
    ``status``, final ``t``/``y``, step/eval counters, triggered ``events`` as
    (index, τ*, y*) triples, and — when ``record`` — accepted-step samples
    ``ts``/``ys`` and dense rows ``(t_old, h, y_old…, Q flattened)``.
    """
    code = int(code)
    dim = len(y0)
    h0c = math.sqrt(2.0 / (m + 1.0))
    lam = 1.0 / sigma if sigma > 0.0 else 0.0
    sgn = -1.0 if direction < 0 else 1.0

    def field(yv):
        f = _field(code, yv, m, N, sigma, h0c, lam)
        if sgn < 0.0:
            return tuple(-v for v in f)
        return f

    y = tuple(float(v) for v in y0)
    t = 0.0
    f0 = field(y)
    nfev = 1
    nsteps = 0
    naccept = 0

    ev_rows = [tuple(float(v) for v in row) for row in events]
    g_prev = [
        _event_value(row, y, code, m, N, sigma, h0c, lam) for row in ev_rows
    ]

    ts = [0.0]
    ys = [y]
    dense_rows = []
    ev_records = []

    h = float(first_step) if first_step > 0.0 else _initial_step(
        code, y, f0, m, N, sigma, h0c, lam, direction, rtol, atol, span
    )
    status = STATUS_DONE
    rejected = False

    while t < span:
        if nsteps >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h > span - t:
            h = span - t
        if h < 1e-15 * max(abs(t), 1.0):
            status = STATUS_UNDERFLOW
            break
        nsteps += 1

        k1 = f0
        yv = tuple(y[i] + h * _A21 * k1[i] for i in range(dim))
        k2 = field(yv)
        yv = tuple(y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in range(dim))
        k3 = field(yv)
        yv = tuple(
            y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in range(dim)
        )
        k4 = field(yv)
        yv = tuple(
            y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
            for i in range(dim)
        )
        k5 = field(yv)
        yv = tuple(
            y[i]
            + h
            * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
            for i in range(dim)
        )
        k6 = field(yv)
        y_new = tuple(
            y[i]
            + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
            for i in range(dim)
        )
        k7 = field(y_new)
        nfev += 6

        err_norm = 0.0
        for i in range(dim):
            e = h * (
                _E1 * k1[i]
                + _E3 * k3[i]
                + _E4 * k4[i]
                + _E5 * k5[i]
                + _E6 * k6[i]
                + _E7 * k7[i]
            )
            scale = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            err_norm += (e / scale) ** 2
        err_norm = math.sqrt(err_norm / dim)

        if err_norm > 1.0:
            factor = _SAFETY * err_norm**_ERR_EXPONENT
            if factor < _MIN_FACTOR:
                factor = _MIN_FACTOR
            h *= factor
            rejected = True
            continue

        # accepted
        is_last = t + h >= span * (1.0 - 1e-16)
        t_new = span if is_last else t + h

        ks = (k1, k2, k3, k4, k5, k6, k7)
        Q = None
        if record or ev_rows:
            Q = []
            for i in range(dim):
                q0 = q1 = q2 = q3 = 0.0
                for s in range(7):
                    kv = ks[s][i]
                    q0 += kv * _P[s][0]
                    q1 += kv * _P[s][1]
                    q2 += kv * _P[s][2]
                    q3 += kv * _P[s][3]
                Q.append((q0, q1, q2, q3))

        terminal_hit = None  # (t_star, y_star, index)
        step_hits = []
        for idx, row in enumerate(ev_rows):
            g_new = _event_value(row, y_new, code, m, N, sigma, h0c, lam)
            g_old = g_prev[idx]
            dirn = row[2]
            crossed = (
                g_old != 0.0
                and (g_new == 0.0 or (g_old < 0.0) != (g_new < 0.0))
                and (
                    dirn == 0.0
                    or (dirn > 0.0 and g_old < 0.0)
                    or (dirn < 0.0 and g_old > 0.0)
                )
            )
            g_prev[idx] = g_new
            if not crossed:
                continue
            lo, hi = 0.0, 1.0
            g_lo_neg = g_old < 0.0
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                y_mid = _dense_eval(y, h, Q, mid, dim)
                g_mid = _event_value(row, y_mid, code, m, N, sigma, h0c, lam)
                if g_mid == 0.0:
                    hi = mid
                    break
                if (g_mid < 0.0) == g_lo_neg:
                    lo = mid
                else:
                    hi = mid
            t_star = t + hi * h
            if t_star < row[3]:  # before arming time
                continue
            y_star = _dense_eval(y, h, Q, hi, dim)
            step_hits.append((t_star, idx, y_star))
            if row[1] != 0.0 and (terminal_hit is None or t_star < terminal_hit[0]):
                terminal_hit = (t_star, y_star, idx)

        if step_hits:
            step_hits.sort(key=lambda rec: rec[0])
            for t_star, idx, y_star in step_hits:
                if terminal_hit is not None and t_star > terminal_hit[0]:
                    break
                ev_records.append((idx, t_star, y_star))
            if len(ev_records) > _MAX_EVENT_RECORDS:
                status = STATUS_EVENT_OVERFLOW
                break

        if record:
            flat_q = []
            for i in range(dim):
                flat_q.extend(Q[i])
            dense_rows.append((t, h, y) + tuple(flat_q))

        if terminal_hit is not None:
            t, y = terminal_hit[0], terminal_hit[1]
            if record:
                ts.append(t)
                ys.append(y)
            status = STATUS_EVENT
            break

        t = t_new
        y = y_new
        f0 = k7
        naccept += 1
        if record:
            ts.append(t)
            ys.append(y)

        if err_norm == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err_norm**_ERR_EXPONENT
            if factor > _MAX_FACTOR:
                factor = _MAX_FACTOR
        if rejected and factor > 1.0:
            factor = 1.0
        rejected = False
        h *= factor

    if not record:
        ts.append(t)
        ys.append(y)

    return {
        "status": status,
        "t": t,
        "y": y,
        "nsteps": nsteps,
        "naccept": naccept,
        "nfev": nfev,
        "events": ev_records,
        "ts": ts,
        "ys": ys,
        "dense": dense_rows,
    }
