"""Numba twins of the hot kernels in :mod:`ainftylab.accel`.

Same node construction and the same analytic slivers as the numpy reference,
written as scalar loops for @njit.  Keep the two modules in sync; the parity
tests in tests/test_accel.py assert agreement to ~1e-12 relative.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ainftylab.accel import (
    GLX, GLW, GRADE_RATIO, INV_SQRT_PI, MAX_GRID_KNOTS, SING_DELTA, W_GAUSS,
    EDGE_MERGE_TOL,
)

_GLX = np.ascontiguousarray(GLX)
_GLW = np.ascontiguousarray(GLW)
_GLN = _GLX.size


@njit(cache=True)
def _bump(u):
    if u <= -1.0 or u >= 1.0:
        return 0.0
    return np.exp(1.0 - 1.0 / (1.0 - u * u))


@njit(cache=True)
def _w(fam, p0, p1, p2, gx, gv, y):
    if fam == 0:
        return p0
    if fam == 1:
        return abs(y) ** p0
    if fam == 2:
        return abs(y) ** p0 * (1.0 + y * y) ** p1
    if fam == 3:
        return 1.0 + p0 * _bump((y - p1) / p2)
    # fam == 4: linear interpolation, NaN outside the hull
    n = gx.size
    if y < gx[0] or y > gx[n - 1]:
        return np.nan
    i = np.searchsorted(gx, y) - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    t = (y - gx[i]) / (gx[i + 1] - gx[i])
    return gv[i] + t * (gv[i + 1] - gv[i])


@njit(cache=True)
def _kern(kern, kp, tx_step, tv, td, t):
    """Scalar (K_u, K_g) for kernel code 0/1/2."""
    if kern == 0:
        ku = INV_SQRT_PI * np.exp(-t * t)
        return ku, -2.0 * t * ku
    if kern == 1:
        at = abs(t)
        n = tv.size
        if at >= (n - 1) * tx_step:
            return 0.0, 0.0
        fi = at / tx_step
        i = int(fi)
        if i > n - 2:
            i = n - 2
        u = fi - i
        u2 = u * u
        u3 = u2 * u
        h00 = 2 * u3 - 3 * u2 + 1
        h10 = u3 - 2 * u2 + u
        h01 = -2 * u3 + 3 * u2
        h11 = u3 - u2
        val = h00 * tv[i] + h01 * tv[i + 1] + tx_step * (h10 * td[i] + h11 * td[i + 1])
        dval = ((6 * u2 - 6 * u) * (tv[i] - tv[i + 1]) / tx_step
                + (3 * u2 - 4 * u + 1) * td[i] + (3 * u2 - 2 * u) * td[i + 1])
        sg = 1.0 if t >= 0.0 else -1.0
        return val, sg * dval
    ku = INV_SQRT_PI * np.exp(-t * t)
    if ku > kp:
        ku = kp
    return ku, 0.0


@njit(cache=True)
def _side_into(buf, m, start, length, ratio, wmax):
    buf[m] = start
    m += 1
    d = start
    while d < length:
        d2 = d * ratio
        if d2 > d + wmax:
            d2 = d + wmax
        if d2 > length:
            d2 = length
        buf[m] = d2
        m += 1
        d = d2
    return m


@njit(cache=True)
def _build_edges(lo, hi, tstar, singular, seg_edges, knots, nk, buf):
    """Fill ``buf`` with sorted panel edges; return (count, s1, s2)."""
    m = 0
    buf[m] = lo
    m += 1
    buf[m] = hi
    m += 1
    ns = seg_edges.size
    if ns > 2:
        for j in range(1, ns - 1):
            e = seg_edges[j]
            if lo < -e < hi:
                buf[m] = -e
                m += 1
            if lo < e < hi:
                buf[m] = e
                m += 1
    if nk > 0:
        stride = 1
        if nk > MAX_GRID_KNOTS:
            stride = int(np.ceil(nk / MAX_GRID_KNOTS))
        j = 0
        while j < nk:
            buf[m] = knots[j]
            m += 1
            j += stride

    s1 = 0.0
    s2 = 0.0
    if singular:
        s1 = lo - tstar
        if s1 < -SING_DELTA:
            s1 = -SING_DELTA
        s2 = hi - tstar
        if s2 > SING_DELTA:
            s2 = SING_DELTA
        if s1 >= s2:
            s1 = 0.0
            s2 = 0.0
        if tstar + SING_DELTA < hi:
            start = SING_DELTA
            if lo - tstar > start:
                start = lo - tstar
            k0 = m
            m = _side_into(buf, m, start, hi - tstar, GRADE_RATIO, W_GAUSS)
            for j in range(k0, m):
                buf[j] = tstar + buf[j]
        if tstar - SING_DELTA > lo:
            start = SING_DELTA
            if tstar - hi > start:
                start = tstar - hi
            k0 = m
            m = _side_into(buf, m, start, tstar - lo, GRADE_RATIO, W_GAUSS)
            for j in range(k0, m):
                buf[j] = tstar - buf[j]

    sub = np.sort(buf[:m])
    span = hi - lo
    tol = EDGE_MERGE_TOL * span
    out = 0
    buf[out] = sub[0]
    out += 1
    for j in range(1, m):
        if sub[j] - buf[out - 1] > tol:
            skip = False
            if s2 > s1:
                if tstar + s1 + tol < sub[j] < tstar + s2 - tol:
                    skip = True
            if not skip:
                buf[out] = sub[j]
                out += 1
    return out, s1, s2


@njit(cache=True)
def _seg_wmax_at(seg_edges, seg_wmax, mid):
    amid = abs(mid)
    ns = seg_edges.size - 1
    for j in range(ns):
        if seg_edges[j] <= amid <= seg_edges[j + 1]:
            return seg_wmax[j]
    return seg_wmax[ns - 1]


@njit(cache=True)
def _sliver_m0(a, z):
    s = 1.0 if z >= 0.0 else -1.0
    return s * abs(z) ** (a + 1.0) / (a + 1.0)


@njit(cache=True)
def conv_batch_nb(fam, p0, p1, p2, gx, gv, xs, rs, kern, kp,
                  seg_edges, seg_wmax, tx_step, tv, td):
    m = xs.size
    U = np.empty(m)
    G = np.empty(m)
    sup = seg_edges[seg_edges.size - 1]
    lo = -sup
    hi = sup
    singular_fam = fam == 1 or fam == 2
    nbuf = 4096 + MAX_GRID_KNOTS
    buf = np.empty(nbuf)
    knots = np.empty(1)
    for i in range(m):
        x = xs[i]
        r = rs[i]
        tstar = x / r
        singular = singular_fam and (lo - 1.0) < tstar < (hi + 1.0)
        nk = 0
        if fam == 4:
            total = gx.size
            knots = np.empty(total)
            for j in range(total):
                t = (x - gx[total - 1 - j]) / r
                if lo < t < hi:
                    knots[nk] = t
                    nk += 1
        ts = tstar if singular else 0.0
        ne, s1, s2 = _build_edges(lo, hi, ts, singular, seg_edges, knots, nk, buf)
        span = hi - lo
        tol = EDGE_MERGE_TOL * span
        su = 0.0
        sg = 0.0
        for e in range(ne - 1):
            a = buf[e]
            b = buf[e + 1]
            if s2 > s1 and a >= tstar + s1 - tol and b <= tstar + s2 + tol:
                continue
            wmax = _seg_wmax_at(seg_edges, seg_wmax, 0.5 * (a + b))
            npan = int(np.ceil((b - a) / wmax - 1e-12))
            if npan < 1:
                npan = 1
            hstep = (b - a) / npan
            for q in range(npan):
                pa = a + q * hstep
                c = pa + 0.5 * hstep
                h = 0.5 * hstep
                for g in range(_GLN):
                    t = c + h * _GLX[g]
                    wt = h * _GLW[g]
                    wv = _w(fam, p0, p1, p2, gx, gv, x - r * t)
                    ku, kg = _kern(kern, kp, tx_step, tv, td, t)
                    su += wv * ku * wt
                    sg += wv * kg * wt
        if singular and s2 > s1:
            a = p0
            i0 = _sliver_m0(a, s2) - _sliver_m0(a, s1)
            i1 = (abs(s2) ** (a + 2.0) - abs(s1) ** (a + 2.0)) / (a + 2.0)
            ku0, kg0 = _kern(kern, kp, tx_step, tv, td, tstar)
            kul, kgl = _kern(kern, kp, tx_step, tv, td, tstar + s1)
            kur, kgr = _kern(kern, kp, tx_step, tv, td, tstar + s2)
            h0 = 1.0
            hl = 1.0
            hr = 1.0
            if fam == 2:
                y0 = x - r * tstar
                yl = x - r * (tstar + s1)
                yr = x - r * (tstar + s2)
                h0 = (1.0 + y0 * y0) ** p1
                hl = (1.0 + yl * yl) ** p1
                hr = (1.0 + yr * yr) ** p1
            spn = s2 - s1
            cu1 = (hr * kur - hl * kul) / spn
            cg1 = (hr * kgr - hl * kgl) / spn
            scale = r ** a
            su += scale * (h0 * ku0 * i0 + cu1 * i1)
            sg += scale * (h0 * kg0 * i0 + cg1 * i1)
        U[i] = su
        G[i] = sg
    return U, G


@njit(cache=True)
def ball_mass_nb(fam, p0, p1, p2, gx, gv, centers, radii):
    m = centers.size
    out = np.empty(m)
    if fam == 0:
        for i in range(m):
            out[i] = p0 * 2.0 * radii[i]
        return out
    if fam == 1:
        ap1 = p0 + 1.0
        for i in range(m):
            hi = centers[i] + radii[i]
            lo = centers[i] - radii[i]
            shi = 1.0 if hi >= 0 else -1.0
            slo = 1.0 if lo >= 0 else -1.0
            out[i] = (shi * abs(hi) ** ap1 - slo * abs(lo) ** ap1) / ap1
        return out
    if fam == 3:
        eps = p0
        c = p1
        wd = p2
        for i in range(m):
            lo = centers[i] - radii[i]
            hi = centers[i] + radii[i]
            u1 = (lo - c) / wd
            u2 = (hi - c) / wd
            if u1 < -1.0:
                u1 = -1.0
            if u1 > 1.0:
                u1 = 1.0
            if u2 < -1.0:
                u2 = -1.0
            if u2 > 1.0:
                u2 = 1.0
            acc = 0.0
            npan = 12
            hstep = (u2 - u1) / npan
            for q in range(npan):
                cmid = u1 + (q + 0.5) * hstep
                h = 0.5 * hstep
                for g in range(_GLN):
                    acc += _bump(cmid + h * _GLX[g]) * h * _GLW[g]
            out[i] = (hi - lo) + eps * wd * acc
        return out
    if fam == 2:
        for i in range(m):
            lo = centers[i] - radii[i]
            hi = centers[i] + radii[i]
            out[i] = _polypower_mass(p0, p1, lo, hi)
        return out
    # fam == 4
    n = gx.size
    cum = np.empty(n)
    cum[0] = 0.0
    for j in range(n - 1):
        cum[j + 1] = cum[j] + 0.5 * (gv[j] + gv[j + 1]) * (gx[j + 1] - gx[j])
    for i in range(m):
        lo = centers[i] - radii[i]
        hi = centers[i] + radii[i]
        if lo < gx[0] - 1e-12 or hi > gx[n - 1] + 1e-12:
            out[i] = np.nan
        else:
            out[i] = _grid_cum_at(gx, gv, cum, hi) - _grid_cum_at(gx, gv, cum, lo)
    return out


@njit(cache=True)
def _grid_cum_at(gx, gv, cum, z):
    n = gx.size
    if z < gx[0]:
        z = gx[0]
    if z > gx[n - 1]:
        z = gx[n - 1]
    i = np.searchsorted(gx, z) - 1
    if i < 0:
        i = 0
    if i > n - 2:
        i = n - 2
    t = z - gx[i]
    slope = (gv[i + 1] - gv[i]) / (gx[i + 1] - gx[i])
    return cum[i] + gv[i] * t + 0.5 * slope * t * t


@njit(cache=True)
def _polypower_mass(a, b, lo, hi):
    singular = lo < SING_DELTA and hi > -SING_DELTA
    big = abs(lo)
    if abs(hi) > big:
        big = abs(hi)
    wmax = (hi - lo) / 32.0
    if wmax < 0.25:
        wmax = 0.25
    buf = np.empty(512)
    seg = np.empty(2)
    seg[0] = 0.0
    seg[1] = big
    knots = np.empty(1)
    ne, s1, s2 = _build_edges(lo, hi, 0.0, singular, seg, knots, 0, buf)
    tol = EDGE_MERGE_TOL * (hi - lo)
    acc = 0.0
    for e in range(ne - 1):
        ea = buf[e]
        eb = buf[e + 1]
        if s2 > s1 and ea >= s1 - tol and eb <= s2 + tol:
            continue
        npan = int(np.ceil((eb - ea) / wmax - 1e-12))
        if npan < 1:
            npan = 1
        hstep = (eb - ea) / npan
        for q in range(npan):
            cmid = ea + (q + 0.5) * hstep
            h = 0.5 * hstep
            for g in range(_GLN):
                y = cmid + h * _GLX[g]
                acc += abs(y) ** a * (1.0 + y * y) ** b * h * _GLW[g]
    if s2 > s1:
        i0 = _sliver_m0(a, s2) - _sliver_m0(a, s1)
        i1 = (abs(s2) ** (a + 2.0) - abs(s1) ** (a + 2.0)) / (a + 2.0)
        h1v = (1.0 + s1 * s1) ** b
        h2v = (1.0 + s2 * s2) ** b
        c1 = (h2v - h1v) / (s2 - s1)
        acc += i0 + c1 * i1
    return acc


@njit(cache=True)
def log_ball_mean_nb(fam, p0, p1, p2, gx, gv, centers, radii, floor):
    m = centers.size
    out = np.empty(m)
    if fam == 0:
        v = np.log(p0 if p0 > floor else floor)
        for i in range(m):
            out[i] = v
        return out
    if fam == 1 or fam == 2:
        for i in range(m):
            lo = centers[i] - radii[i]
            hi = centers[i] + radii[i]
            total = p0 * (_log_abs_prim(hi) - _log_abs_prim(lo))
            if fam == 2:
                npan = 16
                hstep = (hi - lo) / npan
                for q in range(npan):
                    cmid = lo + (q + 0.5) * hstep
                    h = 0.5 * hstep
                    for g in range(_GLN):
                        y = cmid + h * _GLX[g]
                        total += p1 * np.log1p(y * y) * h * _GLW[g]
            out[i] = total / (hi - lo)
        return out
    if fam == 3:
        eps = p0
        c = p1
        wd = p2
        for i in range(m):
            lo = centers[i] - radii[i]
            hi = centers[i] + radii[i]
            u1 = (lo - c) / wd
            u2 = (hi - c) / wd
            if u1 < -1.0:
                u1 = -1.0
            if u1 > 1.0:
                u1 = 1.0
            if u2 < -1.0:
                u2 = -1.0
            if u2 > 1.0:
                u2 = 1.0
            acc = 0.0
            npan = 16
            hstep = (u2 - u1) / npan
            for q in range(npan):
                cmid = u1 + (q + 0.5) * hstep
                h = 0.5 * hstep
                for g in range(_GLN):
                    acc += np.log1p(eps * _bump(cmid + h * _GLX[g])) * h * _GLW[g]
            out[i] = wd * acc / (hi - lo)
        return out
    # fam == 4
    for i in range(m):
        lo = centers[i] - radii[i]
        hi = centers[i] + radii[i]
        out[i] = _grid_log_int(gx, gv, lo, hi, floor) / (hi - lo)
    return out


@njit(cache=True)
def _log_abs_prim(z):
    az = abs(z)
    if az == 0.0:
        return 0.0
    return z * (np.log(az) - 1.0)


@njit(cache=True)
def _grid_log_int(gx, gv, lo, hi, floor):
    n = gx.size
    if lo < gx[0] - 1e-12 or hi > gx[n - 1] + 1e-12:
        return np.nan
    total = 0.0
    i = np.searchsorted(gx, lo) - 1
    if i < 0:
        i = 0
    z = lo
    while z < hi - 1e-300 and i < n - 1:
        z2 = gx[i + 1]
        if z2 > hi:
            z2 = hi
        x0 = gx[i]
        v0 = gv[i] if gv[i] > floor else floor
        v1 = gv[i + 1] if gv[i + 1] > floor else floor
        slope = (v1 - v0) / (gx[i + 1] - x0)
        va = v0 + slope * (z - x0)
        vb = v0 + slope * (z2 - x0)
        if abs(slope) * (z2 - z) < 1e-14 * va:
            total += (z2 - z) * np.log(va)
        else:
            total += (vb * (np.log(vb) - 1.0) - va * (np.log(va) - 1.0)) / slope
        z = z2
        i += 1
    return total
