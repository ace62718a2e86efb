"""Adaptive embedded Runge-Kutta 5(4) propagation kernel with dense output.

One kernel serves every potential variant; the model enters through an
integer tag plus a handful of scalar parameters (and face arrays for the
finite-stripe case), which keeps the whole inner loop JIT-compilable.
Events (velocity sign changes, floor crossing, lateral exit) are refined
by bisection on the step's dense-output polynomial to 1e-12 s.

Falls back to plain Python transparently when numba is unavailable; the
code path and arithmetic are identical either way.
"""
from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit as _njit

    def _jit(fn):
        return _njit(cache=True)(fn)
except Exception:  # pragma: no cover - exercised only without numba
    def _jit(fn):
        return fn

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# dense-output weights (4th-order continuous extension)
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0

# model tags
KIND_PURE_EXP = 0
KIND_TWO_TERM = 1
KIND_FULL_EXPANSION = 2
KIND_EXACT_STRIPES = 3

# trajectory status codes
STATUS_COMPLETED = 0
STATUS_PENETRATED = 2
STATUS_LATERAL_EXIT = 3
STATUS_UNDERFLOW = -1
STATUS_MAX_STEPS = -2
STATUS_DOMAIN = -3

# event kinds
EV_APEX = 0
EV_BOUNCE = 1
EV_PENETRATION = 2
EV_LATERAL = 3

_EPS = 2.220446049250313e-16


@_jit
def _umag(kind, mu, p1, p2, p3, p4, face_x, face_sign, x, y):
    """Magnetic potential energy [J]; -1.0 signals a domain failure."""
    if kind == 0:
        arg = p2 * y
        if arg < -60.0:  # sub-surface trial stages only; keep exp finite
            arg = -60.0
        return p1 * math.exp(-arg)
    if kind == 1:
        arg = p2 * y
        if arg < -60.0:
            arg = -60.0
        e1 = math.exp(-arg)
        bm = p1 * e1 + p3 * e1 * e1 * e1 * math.cos(2.0 * p2 * x)
        return mu * math.sqrt(bm * bm + p4 * p4)
    if kind == 2:
        arg = p2 * y
        if arg < -60.0:
            arg = -60.0
        e1 = math.exp(-arg)
        e2 = e1 * e1
        e4 = e2 * e2
        e9 = e4 * e4 * e1
        bsq = p1 * p1 * e2 + 2.0 * p1 * p3 * math.cos(2.0 * p2 * x) * e4 + p3 * p3 * e9
        if bsq < 0.0:
            return -1.0
        return mu * math.sqrt(bsq + p4 * p4)
    # finite stripe array: charge-sheet sum; clamp to just above the surface
    yy = y
    if yy < 1e-12:
        yy = 1e-12
    b = p4
    bx = 0.0
    by = 0.0
    for i in range(face_x.shape[0]):
        dx = x - face_x[i]
        d2 = dx * dx
        bx += face_sign[i] * math.atan2(b * dx, d2 + yy * (yy + b))
        by += face_sign[i] * 0.5 * math.log1p((2.0 * yy * b + b * b) / (d2 + yy * yy))
    bx *= p1
    by *= p1
    return mu * math.sqrt(bx * bx + by * by + p3 * p3)


@_jit
def _accel(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign, x, y):
    """Acceleration (ax, ay, ok) from the magnetic potential plus gravity."""
    if kind == 0:
        arg = p2 * y
        if arg < -60.0:
            arg = -60.0
        return 0.0, (p2 * p1 / mass) * math.exp(-arg) - g, True
    if kind == 1:
        k = p2
        arg = k * y
        if arg < -60.0:
            arg = -60.0
        e1 = math.exp(-arg)
        e3 = e1 * e1 * e1
        c = math.cos(2.0 * k * x)
        s = math.sin(2.0 * k * x)
        bm = p1 * e1 + p3 * c * e3
        smag = math.sqrt(bm * bm + p4 * p4)
        if smag <= 0.0:
            return 0.0, -g, True
        dbm_dx = -2.0 * k * p3 * s * e3
        dbm_dy = -k * p1 * e1 - 3.0 * k * p3 * c * e3
        f = -(mu / mass) * bm / smag
        return f * dbm_dx, f * dbm_dy - g, True
    if kind == 2:
        k = p2
        arg = k * y
        if arg < -60.0:
            arg = -60.0
        e1 = math.exp(-arg)
        e2 = e1 * e1
        e4 = e2 * e2
        e9 = e4 * e4 * e1
        c = math.cos(2.0 * k * x)
        s = math.sin(2.0 * k * x)
        bsq = p1 * p1 * e2 + 2.0 * p1 * p3 * c * e4 + p3 * p3 * e9
        if bsq < 0.0:
            return 0.0, 0.0, False
        btot = math.sqrt(bsq + p4 * p4)
        if btot <= 0.0:
            return 0.0, -g, True
        ds_dx = -4.0 * k * p1 * p3 * s * e4
        ds_dy = (-2.0 * k * p1 * p1 * e2 - 8.0 * k * p1 * p3 * c * e4
                 - 9.0 * k * p3 * p3 * e9)
        f = -(mu / mass) / (2.0 * btot)
        return f * ds_dx, f * ds_dy - g, True
    # finite stripes: central differences of the charge-sheet energy
    h = 1e-10
    if y / 100.0 < h:
        h = y / 100.0
    up = _umag(kind, mu, p1, p2, p3, p4, face_x, face_sign, x + h, y)
    um = _umag(kind, mu, p1, p2, p3, p4, face_x, face_sign, x - h, y)
    wp = _umag(kind, mu, p1, p2, p3, p4, face_x, face_sign, x, y + h)
    wm = _umag(kind, mu, p1, p2, p3, p4, face_x, face_sign, x, y - h)
    inv = 1.0 / (2.0 * h * mass)
    return -(up - um) * inv, -(wp - wm) * inv - g, True


@_jit
def _dense1(cont, i, comp, theta):
    """Evaluate one state component of step i's dense output at theta in [0,1]."""
    om = 1.0 - theta
    return cont[i, comp] + theta * (cont[i, 4 + comp] + om * (
        cont[i, 8 + comp] + theta * (cont[i, 12 + comp] + om * cont[i, 16 + comp])))


@_jit
def _bisect_root(cont, i, comp, target, lo, hi, sign_lo, h):
    """Find theta where component crosses `target`, to 1e-12 s in time."""
    a = lo
    b = hi
    while (b - a) * h > 1e-12:
        m = 0.5 * (a + b)
        vm = _dense1(cont, i, comp, m) - target
        if (vm > 0.0) == sign_lo:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


@_jit
def _bisect_abs(cont, i, comp, limit, lo, hi, h):
    """Find theta where |component| crosses `limit` upward, to 1e-12 s."""
    a = lo
    b = hi
    while (b - a) * h > 1e-12:
        m = 0.5 * (a + b)
        if abs(_dense1(cont, i, comp, m)) < limit:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


@_jit
def _integrate(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign,
               x0, y0, vx0, vy0, t0, t_end, rtol, atol_pos, atol_vel,
               h_max, x_limit, max_steps):
    cap = 4096
    ts = np.empty(cap + 1)
    cont = np.empty((cap, 20))
    ev_cap = 256
    ev_t = np.empty(ev_cap)
    ev_kind = np.empty(ev_cap, dtype=np.int64)
    nev = 0

    x = x0
    y = y0
    vx = vx0
    vy = vy0
    t = t0
    ts[0] = t0
    n = 0
    status = STATUS_COMPLETED
    t_final = t_end
    k_decay = p2

    ax, ay, ok = _accel(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign, x, y)
    if not ok:
        return STATUS_DOMAIN, 0, ts, cont, ev_t, ev_kind, 0, t, x, y, vx, vy
    k1x, k1y, k1u, k1v = vx, vy, ax, ay

    # magnetic energy far from the mirror (uniform bias floor); the wall-zone
    # step cap triggers on the decaying part only
    if kind == 1 or kind == 2:
        u_floor = mu * p4
    elif kind == 3:
        u_floor = mu * p3
    else:
        u_floor = 0.0

    span = t_end - t0
    h = span * 1e-3
    if h > h_max:
        h = h_max

    while t < t_end:
        if n >= max_steps:
            status = STATUS_MAX_STEPS
            t_final = t
            break
        # resolve the exponential wall: cap the step inside the interaction zone
        umag_here = _umag(kind, mu, p1, p2, p3, p4, face_x, face_sign, x, y)
        if umag_here < 0.0:
            status = STATUS_DOMAIN
            t_final = t
            break
        ke = 0.5 * mass * (vx * vx + vy * vy)
        if umag_here - u_floor > 1e-3 * ke and abs(vy) > 0.0:
            capv = 0.05 / (k_decay * abs(vy))
            if h > capv:
                h = capv
        if h > h_max:
            h = h_max
        hmin = 16.0 * _EPS * max(abs(t), abs(t_end))
        rem = t_end - t
        if rem <= hmin:
            break  # effectively at t_end
        if h > rem:
            h = rem
        if h < hmin:
            status = STATUS_UNDERFLOW
            t_final = t
            break

        # stages 2..6
        x2 = x + h * (_A21 * k1x)
        y2 = y + h * (_A21 * k1y)
        u2 = vx + h * (_A21 * k1u)
        v2 = vy + h * (_A21 * k1v)
        a2x, a2y, ok = _accel(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign, x2, y2)
        if not ok:
            status = STATUS_DOMAIN
            t_final = t
            break
        k2x, k2y, k2u, k2v = u2, v2, a2x, a2y

        x3 = x + h * (_A31 * k1x + _A32 * k2x)
        y3 = y + h * (_A31 * k1y + _A32 * k2y)
        u3 = vx + h * (_A31 * k1u + _A32 * k2u)
        v3 = vy + h * (_A31 * k1v + _A32 * k2v)
        a3x, a3y, ok = _accel(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign, x3, y3)
        if not ok:
            status = STATUS_DOMAIN
            t_final = t
            break
        k3x, k3y, k3u, k3v = u3, v3, a3x, a3y

        x4 = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
        y4 = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
        u4 = vx + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u)
        v4 = vy + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v)
        a4x, a4y, ok = _accel(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign, x4, y4)
        if not ok:
            status = STATUS_DOMAIN
            t_final = t
            break
        k4x, k4y, k4u, k4v = u4, v4, a4x, a4y

        x5 = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
        y5 = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
        u5 = vx + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u)
        v5 = vy + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v)
        a5x, a5y, ok = _accel(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign, x5, y5)
        if not ok:
            status = STATUS_DOMAIN
            t_final = t
            break
        k5x, k5y, k5u, k5v = u5, v5, a5x, a5y

        x6 = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x)
        y6 = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y)
        u6 = vx + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u)
        v6 = vy + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v)
        a6x, a6y, ok = _accel(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign, x6, y6)
        if not ok:
            status = STATUS_DOMAIN
            t_final = t
            break
        k6x, k6y, k6u, k6v = u6, v6, a6x, a6y

        # 5th-order solution; its derivative is the FSAL stage 7
        xn = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
        yn = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
        un = vx + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
        vn = vy + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
        a7x, a7y, ok = _accel(kind, mass, mu, g, p1, p2, p3, p4, face_x, face_sign, xn, yn)
        if not ok:
            status = STATUS_DOMAIN
            t_final = t
            break
        k7x, k7y, k7u, k7v = un, vn, a7x, a7y

        ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x + _E7 * k7x)
        ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
        eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
        ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
        scx = atol_pos + rtol * max(abs(x), abs(xn))
        scy = atol_pos + rtol * max(abs(y), abs(yn))
        scu = atol_vel + rtol * max(abs(vx), abs(un))
        scv = atol_vel + rtol * max(abs(vy), abs(vn))
        q = ((ex / scx) ** 2 + (ey / scy) ** 2 + (eu / scu) ** 2 + (ev / scv) ** 2) / 4.0
        err = math.sqrt(q)

        if err > 1.0:
            fac = 0.9 * err ** (-0.2)
            if fac < 0.2:
                fac = 0.2
            h *= fac
            continue

        # accept: dense coefficients
        if n >= cap:
            newcap = cap * 2
            nts = np.empty(newcap + 1)
            nts[:cap + 1] = ts
            ts = nts
            ncont = np.empty((newcap, 20))
            ncont[:cap] = cont
            cont = ncont
            cap = newcap
        cont[n, 0] = x
        cont[n, 1] = y
        cont[n, 2] = vx
        cont[n, 3] = vy
        cont[n, 4] = xn - x
        cont[n, 5] = yn - y
        cont[n, 6] = un - vx
        cont[n, 7] = vn - vy
        cont[n, 8] = h * k1x - (xn - x)
        cont[n, 9] = h * k1y - (yn - y)
        cont[n, 10] = h * k1u - (un - vx)
        cont[n, 11] = h * k1v - (vn - vy)
        cont[n, 12] = (xn - x) - h * k7x - cont[n, 8]
        cont[n, 13] = (yn - y) - h * k7y - cont[n, 9]
        cont[n, 14] = (un - vx) - h * k7u - cont[n, 10]
        cont[n, 15] = (vn - vy) - h * k7v - cont[n, 11]
        cont[n, 16] = h * (_D1 * k1x + _D3 * k3x + _D4 * k4x + _D5 * k5x + _D6 * k6x + _D7 * k7x)
        cont[n, 17] = h * (_D1 * k1y + _D3 * k3y + _D4 * k4y + _D5 * k5y + _D6 * k6y + _D7 * k7y)
        cont[n, 18] = h * (_D1 * k1u + _D3 * k3u + _D4 * k4u + _D5 * k5u + _D6 * k6u + _D7 * k7u)
        cont[n, 19] = h * (_D1 * k1v + _D3 * k3v + _D4 * k4v + _D5 * k5v + _D6 * k6v + _D7 * k7v)
        ts[n + 1] = t + h

        # events within this step
        theta_term = 2.0
        term_kind = -1
        if yn <= 0.0 < y:
            th = _bisect_root(cont, n, 1, 0.0, 0.0, 1.0, True, h)
            if th < theta_term:
                theta_term = th
                term_kind = EV_PENETRATION
        if x_limit > 0.0 and abs(xn) >= x_limit > abs(x):
            th = _bisect_abs(cont, n, 0, x_limit, 0.0, 1.0, h)
            if th < theta_term:
                theta_term = th
                term_kind = EV_LATERAL
        if (vy * vn < 0.0) or (vn == 0.0 and vy != 0.0):
            th = _bisect_root(cont, n, 3, 0.0, 0.0, 1.0, vy > 0.0, h)
            if th <= theta_term:
                if nev >= ev_cap:
                    ev_cap *= 2
                    net = np.empty(ev_cap)
                    net[:nev] = ev_t
                    ev_t = net
                    nek = np.empty(ev_cap, dtype=np.int64)
                    nek[:nev] = ev_kind
                    ev_kind = nek
                ev_t[nev] = t + th * h
                ev_kind[nev] = EV_BOUNCE if vy < 0.0 else EV_APEX
                nev += 1

        n += 1
        t = ts[n]
        x, y, vx, vy = xn, yn, un, vn
        k1x, k1y, k1u, k1v = k7x, k7y, k7u, k7v

        if term_kind >= 0:
            if nev >= ev_cap:
                ev_cap *= 2
                net = np.empty(ev_cap)
                net[:nev] = ev_t
                ev_t = net
                nek = np.empty(ev_cap, dtype=np.int64)
                nek[:nev] = ev_kind
                ev_kind = nek
            t_final = ts[n - 1] + theta_term * h
            ev_t[nev] = t_final
            ev_kind[nev] = term_kind
            nev += 1
            status = STATUS_PENETRATED if term_kind == EV_PENETRATION else STATUS_LATERAL_EXIT
            break

        if err < 1e-10:
            fac = 5.0
        else:
            fac = 0.9 * err ** (-0.2)
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.2:
                fac = 0.2
        h *= fac

    if status == STATUS_COMPLETED:
        # dense output covers [t0, t]; t is within rounding of t_end here
        t_final = t_end
    return status, n, ts, cont, ev_t, ev_kind, nev, t_final, x, y, vx, vy
