# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integrator kernel.

Line-for-line mirror of ``_kernel_py.py`` (same tableau, same control logic,
same event semantics); see that module for the full documentation.  Keep the
two synchronized.
"""

from libc.math cimport sqrt, fabs, pow

KERNEL_NAME = "cython"

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

DEF MAX_EVENTS = 16
DEF MAX_EVENT_RECORDS = 4096

cdef double _C2 = 0.2, _C3 = 0.3, _C4 = 0.8, _C5 = 8.0 / 9.0
cdef double _A21 = 0.2
cdef double _A31 = 3.0 / 40.0, _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0, _A42 = -56.0 / 15.0, _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0, _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0, _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0, _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0, _A64 = 49.0 / 176.0, _A65 = -5103.0 / 18656.0
cdef double _B1 = 35.0 / 384.0, _B3 = 500.0 / 1113.0, _B4 = 125.0 / 192.0
cdef double _B5 = -2187.0 / 6784.0, _B6 = 11.0 / 84.0
cdef double _E1 = 71.0 / 57600.0, _E3 = -71.0 / 16695.0, _E4 = 71.0 / 1920.0
cdef double _E5 = -17253.0 / 339200.0, _E6 = 22.0 / 525.0, _E7 = -1.0 / 40.0

cdef double[7][4] _P
_P[0][0] = 1.0
_P[0][1] = -8048581381.0 / 2820520608.0
_P[0][2] = 8663915743.0 / 2820520608.0
_P[0][3] = -12715105075.0 / 11282082432.0
_P[1][0] = 0.0
_P[1][1] = 0.0
_P[1][2] = 0.0
_P[1][3] = 0.0
_P[2][0] = 0.0
_P[2][1] = 131558114200.0 / 32700410799.0
_P[2][2] = -68118460800.0 / 10900136933.0
_P[2][3] = 87487479700.0 / 32700410799.0
_P[3][0] = 0.0
_P[3][1] = -1754552775.0 / 470086768.0
_P[3][2] = 14199869525.0 / 1410260304.0
_P[3][3] = -10690763975.0 / 1880347072.0
_P[4][0] = 0.0
_P[4][1] = 127303824393.0 / 49829197408.0
_P[4][2] = -318862633887.0 / 49829197408.0
_P[4][3] = 701980252875.0 / 199316789632.0
_P[5][0] = 0.0
_P[5][1] = -282668133.0 / 205662961.0
_P[5][2] = 2019193451.0 / 616988883.0
_P[5][3] = -1453857185.0 / 822651844.0
_P[6][0] = 0.0
_P[6][1] = 40617522.0 / 29380423.0
_P[6][2] = -110615467.0 / 29380423.0
_P[6][3] = 69997945.0 / 29380423.0

cdef double _SAFETY = 0.9
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 10.0
cdef double _ERR_EXPONENT = -0.2


cdef int c_dim(int code) nogil:
    if code == 2 or code == 3:
        return 2
    return 3


cdef void c_field(int code, double* y, double m, double N, double sigma,
                  double h0, double lam, double* out) nogil:
    cdef double X, Y, Z, H, x, yy, z, w, U, yv
    if code == 0:
        X = y[0]; Y = y[1]; Z = y[2]
        out[0] = 0.5 * (m - 1.0) * X * Y - X * X
        out[1] = -0.5 * (m + 1.0) * Y * Y + 1.0 - Z - (N - 1.0) * X * Y
        out[2] = Z * ((m - 1.0) * Y + sigma * X)
    elif code == 1:
        X = y[0]; H = y[1]; Z = y[2]
        Y = H - h0
        out[0] = 0.5 * (m - 1.0) * X * Y - X * X
        out[1] = -0.5 * (m + 1.0) * Y * Y + 1.0 - Z - (N - 1.0) * X * Y
        out[2] = Z * ((m - 1.0) * Y + sigma * X)
    elif code == 2:
        X = y[0]; Y = y[1]
        out[0] = 0.5 * (m - 1.0) * X * Y - X * X
        out[1] = -0.5 * (m + 1.0) * Y * Y + 1.0 - (N - 1.0) * X * Y
    elif code == 3:
        Y = y[0]; Z = y[1]
        out[0] = -0.5 * (m + 1.0) * Y * Y + 1.0 - Z
        out[1] = Z * (m - 1.0) * Y
    elif code == 4:
        x = y[0]; yy = y[1]; z = y[2]
        out[0] = x * (2.0 - (m - 1.0) * yy)
        out[1] = -m * yy * yy - (N - 2.0) * yy + x - z
        out[2] = (sigma + 2.0) * z
    elif code == 5:
        U = y[0]; Y = y[1]; Z = y[2]
        out[0] = 0.5 * (m - 1.0) * U * Y - lam * U * U
        out[1] = -0.5 * (m + 1.0) * Y * Y + 1.0 - Z - (N - 1.0) * lam * U * Y
        out[2] = Z * ((m - 1.0) * Y + U)
    elif code == 6:
        yv = y[0]; z = y[1]; w = y[2]
        out[0] = -(N - 2.0) * yv - m * yv * yv - z * w + w * w
        out[1] = (sigma + 1.0) * z + 0.5 * (m - 1.0) * yv * z
        out[2] = w - 0.5 * (m - 1.0) * yv * w
    elif code == 7:
        x = y[0]; z = y[1]; w = y[2]
        out[0] = -(-m * x + (2.0 - N) * x * x + x * w * w - x * z * w)
        out[1] = -(-0.5 * (3.0 * m - 1.0) * z - (sigma + N - 1.0) * x * z
                   + z * w * w - z * z * w)
        out[2] = -(-0.5 * (m + 1.0) * w - z * w * w + w * w * w - (N - 1.0) * x * w)
    else:
        x = y[0]; z = y[1]; w = y[2]
        out[0] = -m * x + (2.0 - N) * x * x + x * w * w - x * z * w
        out[1] = (-0.5 * (3.0 * m - 1.0) * z - (sigma + N - 1.0) * x * z
                  + z * w * w - z * z * w)
        out[2] = -0.5 * (m + 1.0) * w - z * w * w + w * w * w - (N - 1.0) * x * w


def rhs_point(code, y, m, N, sigma):
    """Evaluate one chart field at one state; returns a tuple."""
    cdef double[3] yv
    cdef double[3] out
    cdef int icode = int(code)
    cdef int dim = c_dim(icode)
    cdef int i
    if len(y) != dim:
        raise ValueError("state dimension mismatch")
    for i in range(dim):
        yv[i] = y[i]
    cdef double h0 = sqrt(2.0 / (m + 1.0))
    cdef double lam = 1.0 / sigma if sigma > 0.0 else 0.0
    c_field(icode, yv, m, N, sigma, h0, lam, out)
    if dim == 2:
        return (out[0], out[1])
    return (out[0], out[1], out[2])


cdef double c_fieldnorm(int code, double* y, int dim, double m, double N,
                        double sigma, double h0, double lam) nogil:
    cdef double[3] f
    cdef double s = 0.0
    cdef int i
    c_field(code, y, m, N, sigma, h0, lam, f)
    for i in range(dim):
        s += f[i] * f[i]
    return sqrt(s)


cdef double c_surface_height(int form, double* y, double m, double N,
                             double sigma, double h0, double lam) nogil:
    cdef double X, Y
    if form == 1:
        X = y[0]; Y = y[1] - h0
    elif form == 2:
        X = y[0] * lam; Y = y[1]
    else:
        X = y[0]; Y = y[1]
    return (2.0 * m / (m + 1.0)
            - (sigma + 2.0) * (2.0 * N + sigma - 2.0) / (8.0 * m) * X * X
            - 0.5 * (2.0 * N + sigma - 2.0) * X * Y
            - m * Y * Y)


cdef double c_event_value(double* row, double* y, int dim, int code, double m,
                          double N, double sigma, double h0, double lam) nogil:
    cdef int kind = <int> row[0]
    cdef int axis, i
    cdef double s, d, g, gate, gn, big
    if kind == 1:  # PLANE
        return y[<int> row[4]] - row[5]
    if kind == 2:  # BALL
        s = 0.0
        for i in range(dim):
            d = y[i] - row[4 + i]
            s += d * d
        g = sqrt(s) - row[7]
        gate = row[8]
        if gate > 0.0:
            gn = c_fieldnorm(code, y, dim, m, N, sigma, h0, lam) - gate
            if gn > g:
                g = gn
        return g
    if kind == 3:  # ESCAPE
        axis = <int> row[4]
        if axis < 0:
            big = 0.0
            for i in range(dim):
                if fabs(y[i]) > big:
                    big = fabs(y[i])
            return big - row[5]
        return fabs(y[axis]) - row[5]
    if kind == 4:  # SURFACE
        return y[2] - c_surface_height(<int> row[4], y, m, N, sigma, h0, lam)
    # STALL
    return c_fieldnorm(code, y, dim, m, N, sigma, h0, lam) - row[4]


cdef void c_dense_eval(double* y_old, double h, double* Q, double theta,
                       int dim, double* out) nogil:
    cdef int i
    for i in range(dim):
        out[i] = y_old[i] + h * theta * (
            Q[4 * i] + theta * (Q[4 * i + 1] + theta * (Q[4 * i + 2] + theta * Q[4 * i + 3]))
        )


cdef double c_initial_step(int code, double* y, double* f, int dim, double m,
                           double N, double sigma, double h0, double lam,
                           int direction, double rtol, double atol, double span):
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0
    cdef double scale, h_init, h1
    cdef double[3] y1
    cdef double[3] f1
    cdef int i
    for i in range(dim):
        scale = atol + fabs(y[i]) * rtol
        d0 += (y[i] / scale) * (y[i] / scale)
        d1 += (f[i] / scale) * (f[i] / scale)
    d0 = sqrt(d0 / dim)
    d1 = sqrt(d1 / dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h_init = 1e-6
    else:
        h_init = 0.01 * d0 / d1
    if h_init > span:
        h_init = span
    for i in range(dim):
        y1[i] = y[i] + h_init * f[i]
    c_field(code, y1, m, N, sigma, h0, lam, f1)
    if direction < 0:
        for i in range(dim):
            f1[i] = -f1[i]
    for i in range(dim):
        scale = atol + fabs(y[i]) * rtol
        d2 += ((f1[i] - f[i]) / scale) * ((f1[i] - f[i]) / scale)
    d2 = sqrt(d2 / dim) / h_init
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = h_init * 1e-3
        if h1 < 1e-6:
            h1 = 1e-6
    else:
        h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
    if 100.0 * h_init < h1:
        h1 = 100.0 * h_init
    if h1 > span:
        h1 = span
    return h1


def integrate_raw(code, y0, m, N, sigma, direction, span, rtol, atol,
                  max_steps, first_step, events, record):
    """See ``_kernel_py.integrate_raw``: same contract, compiled."""
    cdef int icode = int(code)
    cdef int dim = len(y0)
    cdef double dm = m, dN = N, dsigma = sigma, dspan = span
    cdef double drtol = rtol, datol = atol
    cdef long imax_steps = int(max_steps)
    cdef int idirection = int(direction)
    cdef int irecord = 1 if record else 0
    cdef double h0c = sqrt(2.0 / (dm + 1.0))
    cdef double lam = 1.0 / dsigma if dsigma > 0.0 else 0.0
    cdef double sgn = -1.0 if idirection < 0 else 1.0

    cdef double[3] y
    cdef double[3] y_new
    cdef double[3] yv
    cdef double[3] y_mid
    cdef double[3] y_star_term
    cdef double[3] f0
    cdef double[3] k1, k2, k3, k4, k5, k6, k7
    cdef double[12] Q
    cdef double[MAX_EVENTS][10] rows
    cdef double[MAX_EVENTS] g_prev
    cdef int n_events = len(events)
    cdef int i, s, idx
    cdef long nsteps = 0, naccept = 0, nfev = 0

    if n_events > MAX_EVENTS:
        raise ValueError("too many event rows")
    if dim != c_dim(icode):
        raise ValueError("state dimension mismatch")

    for i in range(dim):
        y[i] = y0[i]
    for idx in range(n_events):
        for i in range(10):
            rows[idx][i] = events[idx][i]

    c_field(icode, y, dm, dN, dsigma, h0c, lam, f0)
    if sgn < 0.0:
        for i in range(dim):
            f0[i] = -f0[i]
    nfev = 1

    for idx in range(n_events):
        g_prev[idx] = c_event_value(rows[idx], y, dim, icode, dm, dN, dsigma, h0c, lam)

    ts = [0.0]
    ys = [_as_tuple(y, dim)]
    dense_rows = []
    ev_records = []

    cdef double t = 0.0
    cdef double h
    if first_step > 0.0:
        h = first_step
    else:
        h = c_initial_step(icode, y, f0, dim, dm, dN, dsigma, h0c, lam,
                           idirection, drtol, datol, dspan)
    cdef int status = STATUS_DONE
    cdef bint rejected = False

    cdef double err_norm, e, scale, factor, t_new
    cdef bint is_last, crossed, g_lo_neg
    cdef double g_new, g_old, dirn, lo, hi, mid, g_mid, t_star
    cdef double term_t
    cdef int term_idx
    cdef bint have_terminal, need_q
    cdef int nhits
    cdef double[MAX_EVENTS] hit_t
    cdef int[MAX_EVENTS] hit_idx
    cdef double[MAX_EVENTS][3] hit_y
    cdef int a, b_
    cdef double tmp_t
    cdef int tmp_i
    cdef double[3] tmp_y

    while t < dspan:
        if nsteps >= imax_steps:
            status = STATUS_MAX_STEPS
            break
        if h > dspan - t:
            h = dspan - t
        if h < 1e-15 * max(fabs(t), 1.0):
            status = STATUS_UNDERFLOW
            break
        nsteps += 1

        for i in range(dim):
            k1[i] = f0[i]
        for i in range(dim):
            yv[i] = y[i] + h * _A21 * k1[i]
        c_field(icode, yv, dm, dN, dsigma, h0c, lam, k2)
        if sgn < 0.0:
            for i in range(dim):
                k2[i] = -k2[i]
        for i in range(dim):
            yv[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        c_field(icode, yv, dm, dN, dsigma, h0c, lam, k3)
        if sgn < 0.0:
            for i in range(dim):
                k3[i] = -k3[i]
        for i in range(dim):
            yv[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        c_field(icode, yv, dm, dN, dsigma, h0c, lam, k4)
        if sgn < 0.0:
            for i in range(dim):
                k4[i] = -k4[i]
        for i in range(dim):
            yv[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        c_field(icode, yv, dm, dN, dsigma, h0c, lam, k5)
        if sgn < 0.0:
            for i in range(dim):
                k5[i] = -k5[i]
        for i in range(dim):
            yv[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                + _A64 * k4[i] + _A65 * k5[i])
        c_field(icode, yv, dm, dN, dsigma, h0c, lam, k6)
        if sgn < 0.0:
            for i in range(dim):
                k6[i] = -k6[i]
        for i in range(dim):
            y_new[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                   + _B5 * k5[i] + _B6 * k6[i])
        c_field(icode, y_new, dm, dN, dsigma, h0c, lam, k7)
        if sgn < 0.0:
            for i in range(dim):
                k7[i] = -k7[i]
        nfev += 6

        err_norm = 0.0
        for i in range(dim):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                     + _E6 * k6[i] + _E7 * k7[i])
            scale = datol + drtol * max(fabs(y[i]), fabs(y_new[i]))
            err_norm += (e / scale) * (e / scale)
        err_norm = sqrt(err_norm / dim)

        if err_norm > 1.0:
            factor = _SAFETY * pow(err_norm, _ERR_EXPONENT)
            if factor < _MIN_FACTOR:
                factor = _MIN_FACTOR
            h *= factor
            rejected = True
            continue

        is_last = t + h >= dspan * (1.0 - 1e-16)
        t_new = dspan if is_last else t + h

        need_q = irecord or n_events > 0
        if need_q:
            for i in range(dim):
                Q[4 * i] = (k1[i] * _P[0][0] + k2[i] * _P[1][0] + k3[i] * _P[2][0]
                            + k4[i] * _P[3][0] + k5[i] * _P[4][0] + k6[i] * _P[5][0]
                            + k7[i] * _P[6][0])
                Q[4 * i + 1] = (k1[i] * _P[0][1] + k2[i] * _P[1][1] + k3[i] * _P[2][1]
                                + k4[i] * _P[3][1] + k5[i] * _P[4][1] + k6[i] * _P[5][1]
                                + k7[i] * _P[6][1])
                Q[4 * i + 2] = (k1[i] * _P[0][2] + k2[i] * _P[1][2] + k3[i] * _P[2][2]
                                + k4[i] * _P[3][2] + k5[i] * _P[4][2] + k6[i] * _P[5][2]
                                + k7[i] * _P[6][2])
                Q[4 * i + 3] = (k1[i] * _P[0][3] + k2[i] * _P[1][3] + k3[i] * _P[2][3]
                                + k4[i] * _P[3][3] + k5[i] * _P[4][3] + k6[i] * _P[5][3]
                                + k7[i] * _P[6][3])

        have_terminal = False
        term_t = 0.0
        term_idx = -1
        nhits = 0
        for idx in range(n_events):
            g_new = c_event_value(rows[idx], y_new, dim, icode, dm, dN, dsigma, h0c, lam)
            g_old = g_prev[idx]
            dirn = rows[idx][2]
            crossed = (g_old != 0.0
                       and (g_new == 0.0 or (g_old < 0.0) != (g_new < 0.0))
                       and (dirn == 0.0
                            or (dirn > 0.0 and g_old < 0.0)
                            or (dirn < 0.0 and g_old > 0.0)))
            g_prev[idx] = g_new
            if not crossed:
                continue
            lo = 0.0
            hi = 1.0
            g_lo_neg = g_old < 0.0
            for s in range(64):
                mid = 0.5 * (lo + hi)
                c_dense_eval(y, h, Q, mid, dim, y_mid)
                g_mid = c_event_value(rows[idx], y_mid, dim, icode, dm, dN, dsigma, h0c, lam)
                if g_mid == 0.0:
                    hi = mid
                    break
                if (g_mid < 0.0) == g_lo_neg:
                    lo = mid
                else:
                    hi = mid
            t_star = t + hi * h
            if t_star < rows[idx][3]:
                continue
            hit_t[nhits] = t_star
            hit_idx[nhits] = idx
            c_dense_eval(y, h, Q, hi, dim, hit_y[nhits])
            nhits += 1
            if rows[idx][1] != 0.0 and (not have_terminal or t_star < term_t):
                have_terminal = True
                term_t = t_star
                term_idx = idx
                c_dense_eval(y, h, Q, hi, dim, y_star_term)

        if nhits > 0:
            # insertion sort by time (nhits is tiny)
            for a in range(1, nhits):
                tmp_t = hit_t[a]
                tmp_i = hit_idx[a]
                for i in range(dim):
                    tmp_y[i] = hit_y[a][i]
                b_ = a - 1
                while b_ >= 0 and hit_t[b_] > tmp_t:
                    hit_t[b_ + 1] = hit_t[b_]
                    hit_idx[b_ + 1] = hit_idx[b_]
                    for i in range(dim):
                        hit_y[b_ + 1][i] = hit_y[b_][i]
                    b_ -= 1
                hit_t[b_ + 1] = tmp_t
                hit_idx[b_ + 1] = tmp_i
                for i in range(dim):
                    hit_y[b_ + 1][i] = tmp_y[i]
            for a in range(nhits):
                if have_terminal and hit_t[a] > term_t:
                    break
                ev_records.append((hit_idx[a], hit_t[a], _as_tuple(hit_y[a], dim)))
            if len(ev_records) > MAX_EVENT_RECORDS:
                status = STATUS_EVENT_OVERFLOW
                break

        if irecord:
            dense_rows.append((t, h, _as_tuple(y, dim)) + _q_tuple(Q, dim))

        if have_terminal:
            t = term_t
            for i in range(dim):
                y[i] = y_star_term[i]
            if irecord:
                ts.append(t)
                ys.append(_as_tuple(y, dim))
            status = STATUS_EVENT
            break

        t = t_new
        for i in range(dim):
            y[i] = y_new[i]
            f0[i] = k7[i]
        naccept += 1
        if irecord:
            ts.append(t)
            ys.append(_as_tuple(y, dim))

        if err_norm == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * pow(err_norm, _ERR_EXPONENT)
            if factor > _MAX_FACTOR:
                factor = _MAX_FACTOR
        if rejected and factor > 1.0:
            factor = 1.0
        rejected = False
        h *= factor

    if not irecord:
        ts.append(t)
        ys.append(_as_tuple(y, dim))

    return {
        "status": status,
        "t": t,
        "y": _as_tuple(y, dim),
        "nsteps": nsteps,
        "naccept": naccept,
        "nfev": nfev,
        "events": ev_records,
        "ts": ts,
        "ys": ys,
        "dense": dense_rows,
    }


cdef _as_tuple(double* y, int dim):
    if dim == 2:
        return (y[0], y[1])
    return (y[0], y[1], y[2])


cdef _q_tuple(double* Q, int dim):
    cdef int i
    out = []
    for i in range(4 * dim):
        out.append(Q[i])
    return tuple(out)
