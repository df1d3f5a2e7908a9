"""Compiled Dormand-Prince 5(4) integrator for scalar polynomial ODEs.

The trajectory is carried as the offset ``y = z - c`` so the displacement
``z(t1) - c`` comes out without cancellation.  Modes:

* ``MODE_PLAIN`` -- state ``[y]``
* ``MODE_VAR``   -- state ``[y, w]`` with ``w' = f_z w``
* ``MODE_REAL``  -- state ``[y, L, G, H, F]`` where ``L' = f_1``,
  ``G' = exp(L) f_2``, ``H' = exp(2L) f_3``, ``F' = f_3``
"""

import math

import numpy as np
from numba import njit

MODE_PLAIN = 0
MODE_VAR = 1
MODE_REAL = 2

COMPLETED = 0
ESCAPED = 1
STEP_LIMIT = 2
UNDERFLOW = 3

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# dense output, order 4
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_ALPHA = 0.17
_BETA = 0.04


@njit(cache=True, nogil=True)
def eval_coeffs(t, omega, poly, hk, ha, hb, out):
    base = 2.0 * math.pi / omega
    for i in range(poly.shape[0]):
        v = 0.0
        for j in range(poly.shape[1] - 1, -1, -1):
            v = v * t + poly[i, j]
        for j in range(hk.shape[1]):
            k = hk[i, j]
            if k != 0.0:
                v += ha[i, j] * math.cos(base * k * t) + hb[i, j] * math.sin(base * k * t)
        out[i] = v


@njit(cache=True, nogil=True)
def poly_derivs(P, n, z):
    """f, f', f'', f''' of ``sum_i P[i] z**i`` by Horner's scheme."""
    b = P[n] + 0j
    c = 0j
    d = 0j
    e = 0j
    for i in range(n - 1, -1, -1):
        e = e * z + d
        d = d * z + c
        c = c * z + b
        b = b * z + P[i]
    return b, c, 2.0 * d, 6.0 * e


@njit(cache=True, nogil=True)
def _rhs(mode, s, y, c, t0, sgn, n, omega, poly, hk, ha, hb, P, out):
    t = t0 + sgn * s
    eval_coeffs(t, omega, poly, hk, ha, hb, P)
    z = c + y[0]
    f, f1, f2, f3 = poly_derivs(P, n, z)
    out[0] = sgn * f
    if mode == MODE_VAR:
        out[1] = sgn * f1 * y[1]
    elif mode == MODE_REAL:
        E = math.exp(y[1].real)
        out[1] = sgn * f1
        out[2] = sgn * E * f2
        out[3] = sgn * E * E * f3
        out[4] = sgn * f3


@njit(cache=True, nogil=True)
def _dense(y, K, h, theta, m, out):
    th2 = theta * theta
    th3 = th2 * theta
    th4 = th3 * theta
    for i in range(m):
        acc = 0j
        for j in range(7):
            acc += K[j, i] * (_P[j, 0] * theta + _P[j, 1] * th2 + _P[j, 2] * th3 + _P[j, 3] * th4)
        out[i] = y[i] + h * acc


@njit(cache=True, nogil=True)
def integrate(mode, c, t0, t1, y0, rtol, atol, radius, max_steps,
              n, omega, poly, hk, ha, hb):
    """Integrate from ``t0`` to ``t1``.

    Returns ``(status, s_end, y, steps, zmax, z_cross)`` where ``s_end`` is the
    elapsed |time| (the crossing time of ``radius`` for escapes).
    """
    m = y0.shape[0]
    T = abs(t1 - t0)
    sgn = 1.0 if t1 >= t0 else -1.0
    y = y0.copy()
    zmax = abs(c + y[0])
    if T == 0.0:
        return COMPLETED, 0.0, y, 0, zmax, c + y[0]
    P = np.empty(n + 1)
    K = np.empty((7, m), dtype=np.complex128)
    ytmp = np.empty(m, dtype=np.complex128)
    ynew = np.empty(m, dtype=np.complex128)
    kout = np.empty(m, dtype=np.complex128)

    _rhs(mode, 0.0, y, c, t0, sgn, n, omega, poly, hk, ha, hb, P, kout)
    K[0, :] = kout

    # initial step (Hairer, Norsett & Wanner II.4)
    d0 = 0.0
    d1 = 0.0
    for i in range(m):
        sc = atol + rtol * abs(y[i])
        d0 = max(d0, abs(y[i]) / sc)
        d1 = max(d1, abs(K[0, i]) / sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6 * T
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, T)
    for i in range(m):
        ytmp[i] = y[i] + h0 * K[0, i]
    _rhs(mode, h0, ytmp, c, t0, sgn, n, omega, poly, hk, ha, hb, P, kout)
    d2 = 0.0
    for i in range(m):
        sc = atol + rtol * abs(y[i])
        d2 = max(d2, abs(kout[i] - K[0, i]) / sc / h0)
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6 * T, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(100.0 * h0, h1, T)

    s = 0.0
    steps = 0
    err_prev = 1e-4
    rejected = False
    while s < T:
        if steps >= max_steps:
            return STEP_LIMIT, s, y, steps, zmax, c + y[0]
        if h < 8.9e-16 * max(abs(t0 + sgn * s), T * 1e-3, 1e-300):
            if abs(c + y[0]) > 0.1 * radius:
                return ESCAPED, s, y, steps, zmax, c + y[0]
            return UNDERFLOW, s, y, steps, zmax, c + y[0]
        last = False
        if s + h >= T * (1.0 - 1e-14):
            h = T - s
            last = True
        for st in range(1, 7):
            for i in range(m):
                acc = 0j
                for j in range(st):
                    acc += _A[st, j] * K[j, i]
                ytmp[i] = y[i] + h * acc
            _rhs(mode, s + _C[st] * h, ytmp, c, t0, sgn, n, omega, poly, hk, ha, hb, P, kout)
            K[st, :] = kout
        # ytmp now holds the 5th-order solution (row 6 of A equals B)
        for i in range(m):
            ynew[i] = ytmp[i]
        err = 0.0
        finite = True
        for i in range(m):
            acc = 0j
            for j in range(7):
                acc += _E[j] * K[j, i]
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            e = abs(h * acc) / sc
            if not (e < 1e300):
                finite = False
            err = max(err, e)
        if not finite:
            h *= 0.2
            rejected = True
            continue
        if err <= 1.0:
            znew = c + ynew[0]
            if abs(znew) > radius:
                # locate |z| = radius inside the step on the dense output
                lo = 0.0
                hi = 1.0
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    _dense(y, K, h, mid, m, ytmp)
                    if abs(c + ytmp[0]) > radius:
                        hi = mid
                    else:
                        lo = mid
                _dense(y, K, h, hi, m, ytmp)
                return ESCAPED, s + hi * h, ytmp.copy(), steps + 1, radius, c + ytmp[0]
            zmax = max(zmax, abs(znew))
            s = T if last else s + h
            for i in range(m):
                y[i] = ynew[i]
            K[0, :] = K[6, :]
            steps += 1
            if err == 0.0:
                fac = 10.0
            else:
                fac = _SAFETY * err ** (-_ALPHA) * err_prev ** _BETA
                fac = min(10.0, max(0.2, fac))
            if rejected:
                fac = min(fac, 1.0)
            h *= fac
            err_prev = max(err, 1e-4)
            rejected = False
        else:
            h *= max(0.2, _SAFETY * err ** -0.2)
            rejected = True
    return COMPLETED, T, y, steps, zmax, c + y[0]


@njit(cache=True, nogil=True)
def displacement_batch(cs, with_var, omega_h, rtol, atol, radius_floor, radius_mult, max_steps,
                       n, omega, poly, hk, ha, hb):
    """``q`` (and ``q'``) for many initial values over ``[0, omega_h]``."""
    N = cs.shape[0]
    status = np.empty(N, dtype=np.int64)
    q = np.empty(N, dtype=np.complex128)
    dq = np.empty(N, dtype=np.complex128)
    zmax = np.empty(N)
    mode = MODE_VAR if with_var else MODE_PLAIN
    y0 = np.zeros(2 if with_var else 1, dtype=np.complex128)
    for k in range(N):
        c = cs[k]
        if with_var:
            y0[0] = 0j
            y0[1] = 1.0 + 0j
        else:
            y0[0] = 0j
        R = max(radius_floor, radius_mult * abs(c))
        st, s_end, y, steps, zm, zc = integrate(mode, c, 0.0, omega_h, y0, rtol, atol, R,
                                                max_steps, n, omega, poly, hk, ha, hb)
        status[k] = st
        q[k] = y[0]
        dq[k] = (y[1] - 1.0) if with_var else 0j
        zmax[k] = zm
    return status, q, dq, zmax
