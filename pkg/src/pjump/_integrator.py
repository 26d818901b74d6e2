"""Compiled Dormand-Prince 8(5,3) stepper for the perturbed jumping oscillator.

Tableau and error weights are scipy's DOP853 coefficients; the step-size
controller mirrors ``scipy.integrate.solve_ivp(method="DOP853")``.  Output is
produced by landing steps exactly on the requested sample times, so no
interpolant is involved there.  Between consecutive samples the stepper also
records the running maximum of ``|x| + |x'|``; inside each accepted step that
maximum is located on DOP853's 7th-order continuous extension.
"""
import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _coef

_NS = _coef.N_STAGES
_A = np.ascontiguousarray(_coef.A[:_NS, :_NS])
_B = np.ascontiguousarray(_coef.B)
_C = np.ascontiguousarray(_coef.C[:_NS])
_E3 = np.ascontiguousarray(_coef.E3)
_E5 = np.ascontiguousarray(_coef.E5)
_NX = _coef.N_STAGES_EXTENDED
_AX = np.ascontiguousarray(_coef.A)
_CX = np.ascontiguousarray(_coef.C)
_D = np.ascontiguousarray(_coef.D)
_NPOW = _coef.INTERPOLATOR_POWER
_SUB = 8  # interior probes per step for the amplitude maximum

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXP = -1.0 / 8.0

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_BUDGET = 2


@njit(cache=True, nogil=True)
def field(t, x, y, par, ks, cs, phs):
    omega = par[0]
    a1 = par[1]
    b1 = par[2]
    p = par[3]
    q = par[4]
    beta = par[5]
    gamma = par[6]
    om1p = par[7]
    w = par[8]
    if y > 0.0:
        dx = -omega * y ** (q - 1.0)
    elif y < 0.0:
        dx = omega * (-y) ** (q - 1.0)
    else:
        dx = 0.0
    if x > 0.0:
        dy = omega * a1 * x ** (p - 1.0)
        fx = beta * x ** gamma
    elif x < 0.0:
        dy = -omega * b1 * (-x) ** (p - 1.0)
        fx = -beta * (-x) ** gamma
    else:
        dy = 0.0
        fx = 0.0
    e = 0.0
    for i in range(ks.shape[0]):
        e += cs[i] * np.cos(ks[i] * w * t + phs[i])
    dy += om1p * (fx - e)
    return dx, dy


@njit(cache=True, nogil=True)
def _amplitude(x, y, par):
    # |x| + |x'| with x' = -omega phi_q(y)
    return abs(x) + par[0] * abs(y) ** (par[4] - 1.0)


@njit(cache=True, nogil=True)
def _dense_eval(F, x0, y0, s):
    # continuous extension at fraction s of the step (scipy's Dop853DenseOutput)
    vx = 0.0
    vy = 0.0
    for i in range(_NPOW):
        j = _NPOW - 1 - i
        vx += F[j, 0]
        vy += F[j, 1]
        if i % 2 == 0:
            vx *= s
            vy *= s
        else:
            vx *= 1.0 - s
            vy *= 1.0 - s
    return x0 + vx, y0 + vy


@njit(cache=True, nogil=True)
def _step_peak(t, x, y, hh, xn, yn, K, par, ks, cs, phs):
    """Max of |x| + |x'| over the accepted step [t, t + hh]."""
    for s in range(_NS + 1, _NX):
        ax = 0.0
        ay = 0.0
        for j in range(s):
            ax += _AX[s, j] * K[j, 0]
            ay += _AX[s, j] * K[j, 1]
        kx, ky = field(t + _CX[s] * hh, x + hh * ax, y + hh * ay, par, ks, cs, phs)
        K[s, 0] = kx
        K[s, 1] = ky
    F = np.empty((_NPOW, 2))
    dx = xn - x
    dy = yn - y
    F[0, 0] = dx
    F[0, 1] = dy
    F[1, 0] = hh * K[0, 0] - dx
    F[1, 1] = hh * K[0, 1] - dy
    F[2, 0] = 2.0 * dx - hh * (K[_NS, 0] + K[0, 0])
    F[2, 1] = 2.0 * dy - hh * (K[_NS, 1] + K[0, 1])
    for i in range(_NPOW - 3):
        sx = 0.0
        sy = 0.0
        for j in range(_NX):
            sx += _D[i, j] * K[j, 0]
            sy += _D[i, j] * K[j, 1]
        F[3 + i, 0] = hh * sx
        F[3 + i, 1] = hh * sy
    best = max(_amplitude(x, y, par), _amplitude(xn, yn, par))
    ibest = -1
    for i in range(1, _SUB + 1):
        px, py = _dense_eval(F, x, y, i / (_SUB + 1.0))
        a = _amplitude(px, py, par)
        if a > best:
            best = a
            ibest = i
    if ibest < 0:
        return best
    # golden-section refinement around the best interior probe
    lo = (ibest - 1) / (_SUB + 1.0)
    hi = (ibest + 1) / (_SUB + 1.0)
    g = 0.6180339887498949
    c = hi - g * (hi - lo)
    d = lo + g * (hi - lo)
    px, py = _dense_eval(F, x, y, c)
    fc = _amplitude(px, py, par)
    px, py = _dense_eval(F, x, y, d)
    fd = _amplitude(px, py, par)
    for _ in range(40):
        if fc > fd:
            hi = d
            d = c
            fd = fc
            c = hi - g * (hi - lo)
            px, py = _dense_eval(F, x, y, c)
            fc = _amplitude(px, py, par)
        else:
            lo = c
            c = d
            fc = fd
            d = lo + g * (hi - lo)
            px, py = _dense_eval(F, x, y, d)
            fd = _amplitude(px, py, par)
    return max(best, fc, fd)


@njit(cache=True, nogil=True)
def _initial_step(t0, x0, y0, fx0, fy0, par, ks, cs, phs, rtol, atol):
    sx = atol + abs(x0) * rtol
    sy = atol + abs(y0) * rtol
    d0 = np.sqrt(((x0 / sx) ** 2 + (y0 / sy) ** 2) / 2.0)
    d1 = np.sqrt(((fx0 / sx) ** 2 + (fy0 / sy) ** 2) / 2.0)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    fx1, fy1 = field(t0 + h0, x0 + h0 * fx0, y0 + h0 * fy0, par, ks, cs, phs)
    d2 = np.sqrt((((fx1 - fx0) / sx) ** 2 + ((fy1 - fy0) / sy) ** 2) / 2.0) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100.0 * h0, h1)


@njit(cache=True, nogil=True)
def drive(x0, y0, t0, t_out, par, ks, cs, phs, rtol, atol, max_steps):
    """Integrate from ``(x0, y0)`` at ``t0`` through the increasing times ``t_out``.

    Returns ``(xs, ys, peaks, n_steps, status, t_reached)``; on failure the
    outputs past the failure point are undefined.
    """
    n = t_out.shape[0]
    xs = np.empty(n)
    ys = np.empty(n)
    peaks = np.empty(n)
    K = np.empty((_NX, 2))
    t = t0
    x = x0
    y = y0
    fx, fy = field(t, x, y, par, ks, cs, phs)
    h = _initial_step(t, x, y, fx, fy, par, ks, cs, phs, rtol, atol)
    peak = _amplitude(x, y, par)
    steps = 0
    for i in range(n):
        tend = t_out[i]
        rejected = False
        while t < tend:
            if steps >= max_steps:
                return xs, ys, peaks, steps, STATUS_BUDGET, t
            last = h >= tend - t
            hh = tend - t if last else h
            K[0, 0] = fx
            K[0, 1] = fy
            for s in range(1, _NS):
                ax = 0.0
                ay = 0.0
                for j in range(s):
                    ax += _A[s, j] * K[j, 0]
                    ay += _A[s, j] * K[j, 1]
                kx, ky = field(t + _C[s] * hh, x + hh * ax, y + hh * ay, par, ks, cs, phs)
                K[s, 0] = kx
                K[s, 1] = ky
            bx = 0.0
            by = 0.0
            for j in range(_NS):
                bx += _B[j] * K[j, 0]
                by += _B[j] * K[j, 1]
            xn = x + hh * bx
            yn = y + hh * by
            fxn, fyn = field(t + hh, xn, yn, par, ks, cs, phs)
            K[_NS, 0] = fxn
            K[_NS, 1] = fyn
            sx = atol + rtol * max(abs(x), abs(xn))
            sy = atol + rtol * max(abs(y), abs(yn))
            e5x = 0.0
            e5y = 0.0
            e3x = 0.0
            e3y = 0.0
            for j in range(_NS + 1):
                e5x += _E5[j] * K[j, 0]
                e5y += _E5[j] * K[j, 1]
                e3x += _E3[j] * K[j, 0]
                e3y += _E3[j] * K[j, 1]
            e5 = (e5x / sx) ** 2 + (e5y / sy) ** 2
            e3 = (e3x / sx) ** 2 + (e3y / sy) ** 2
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = hh * e5 / np.sqrt((e5 + 0.01 * e3) * 2.0)
            steps += 1
            if err < 1.0:
                if err == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = min(_MAX_FACTOR, _SAFETY * err ** _ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                amp = _step_peak(t, x, y, hh, xn, yn, K, par, ks, cs, phs)
                t = tend if last else t + hh
                x = xn
                y = yn
                fx = fxn
                fy = fyn
                if amp > peak:
                    peak = amp
                h = max(h, hh * factor) if last else hh * factor
                rejected = False
            else:
                h = hh * max(_MIN_FACTOR, _SAFETY * err ** _ERR_EXP)
                rejected = True
                if h < 1e-14 * max(1.0, abs(t)):
                    return xs, ys, peaks, steps, STATUS_UNDERFLOW, t
        xs[i] = x
        ys[i] = y
        peaks[i] = peak
        peak = _amplitude(x, y, par)
    return xs, ys, peaks, steps, STATUS_OK, t
