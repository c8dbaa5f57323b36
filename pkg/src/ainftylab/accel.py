"""Batched 1-D quadrature kernels: pure-numpy reference path plus numba dispatch.

This module owns the hot inner loops of the package: convolutions of a weight
against the Gaussian kernel / its derivative / tabulated radial bumps, ball
masses, and ball means of log w.  Every entry point has two implementations
with identical node construction:

* a pure-numpy path (always available), and
* an ``@njit`` twin in ``_accel_numba`` (used when numba imports cleanly).

Selection is controlled by the ``AINFTYLAB_NUMBA`` environment variable:
``0``/``off`` forces the numpy path, ``1``/``on`` requires numba, anything
else (or unset) auto-detects.  ``set_backend`` overrides at runtime; the
benchmark and the parity tests flip it explicitly.

Weight families are encoded as integer codes so both paths share one calling
convention:

====  =============  ============================================
code  family         params (p0, p1, p2)
====  =============  ============================================
0     constant       c, -, -
1     power          a, -, -          w(y) = |y|^a
2     polypower      a, b, -          w(y) = |y|^a (1+y^2)^b
3     plateau        eps, center, width   w = 1 + eps*g((y-c)/width)
4     grid           (uses gx, gv arrays, linear interpolation)
====  =============  ============================================

Kernel codes: 0 = Gaussian pair (value and derivative), 1 = tabulated radial
kernel pair, 2 = capped Gaussian (value only).

Quadrature layout: panel edges are the union of the kernel's feature radii
(mirrored), the grid knots mapped into convolution coordinates, and a
geometric ladder growing away from the weight's singular point; a sliver of
half-width ``SING_DELTA`` around the singularity is integrated analytically
from the exact moments of |s|^a.  Panels wider than the kernel's local
resolution cap are subdivided uniformly and each panel carries a fixed
Gauss-Legendre rule.
"""

from __future__ import annotations

import os

import numpy as np

INV_SQRT_PI = 1.0 / np.sqrt(np.pi)

GL_POINTS = 10
GLX, GLW = np.polynomial.legendre.leggauss(GL_POINTS)
KAPPA_DEFAULT = 8.0
SING_DELTA = 1e-6
GRADE_RATIO = 3.0
W_GAUSS = 1.0          # max panel width against the Gaussian
MAX_GRID_KNOTS = 2000  # knot-aligned panels are capped at this count
EDGE_MERGE_TOL = 1e-13

FAM_CONSTANT, FAM_POWER, FAM_POLYPOWER, FAM_PLATEAU, FAM_GRID = 0, 1, 2, 3, 4
KERN_GAUSS, KERN_TABLE, KERN_CAPPED = 0, 1, 2

_EMPTY = np.empty(0, dtype=np.float64)


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

def _autodetect() -> str:
    flag = os.environ.get("AINFTYLAB_NUMBA", "auto").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return "numpy"
    if flag in ("1", "on", "true", "yes"):
        import ainftylab._accel_numba  # noqa: F401  (raises if numba is absent)

        return "numba"
    try:
        import ainftylab._accel_numba  # noqa: F401

        return "numba"
    except Exception:
        return "numpy"


_BACKEND: str | None = None


def backend() -> str:
    """The active backend, ``"numba"`` or ``"numpy"``."""
    global _BACKEND
    if _BACKEND is None:
        _BACKEND = _autodetect()
    return _BACKEND


def set_backend(name: str) -> None:
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba":
        import ainftylab._accel_numba  # noqa: F401

    _BACKEND = name


# ---------------------------------------------------------------------------
# plateau bump profile (the fixed smooth compactly supported g)
# ---------------------------------------------------------------------------

def bump(u):
    """Smooth bump with g(0)=1 supported on [-1,1]: exp(1 - 1/(1-u^2))."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


def weight_values(fam, p0, p1, p2, gx, gv, y):
    """Vectorized weight evaluation; NaN marks out-of-hull grid queries."""
    y = np.asarray(y, dtype=np.float64)
    if fam == FAM_CONSTANT:
        return np.full_like(y, p0)
    if fam == FAM_POWER:
        return np.abs(y) ** p0
    if fam == FAM_POLYPOWER:
        return np.abs(y) ** p0 * (1.0 + y * y) ** p1
    if fam == FAM_PLATEAU:
        return 1.0 + p0 * bump((y - p1) / p2)
    if fam == FAM_GRID:
        out = np.interp(y, gx, gv)
        out = np.where((y < gx[0]) | (y > gx[-1]), np.nan, out)
        return out
    raise ValueError(f"unknown family code {fam}")


# ---------------------------------------------------------------------------
# node construction (shared logic; the numba twin mirrors it step for step)
# ---------------------------------------------------------------------------

def side_distances(start, length, ratio, wmax):
    """Geometric ladder of distances from a singularity covering [start, length].

    Edge k+1 = min(edge_k * ratio, edge_k + wmax); the last edge is clamped to
    ``length`` exactly.  Returns an ascending list beginning at ``start``.
    """
    out = [start]
    d = start
    while d < length:
        d = min(d * ratio, d + wmax)
        d = min(d, length)
        out.append(d)
    return out


def build_nodes(lo, hi, tstar, singular, seg_edges, seg_wmax, knots):
    """Quadrature nodes on [lo, hi] honoring kernel segments and a singularity.

    ``seg_edges`` are the ascending feature radii of the (even) kernel with
    seg_edges[0] == 0 and seg_edges[-1] == the support radius; ``seg_wmax``
    gives the resolution cap for each radial band.  Returns
    (nodes, weights, s1, s2) where (s1, s2) bound the analytic sliver around
    ``tstar`` in the shifted coordinate s = t - tstar; s1 == s2 == 0 means no
    sliver.
    """
    edges = [lo, hi]
    if len(seg_edges) > 2:
        for e in seg_edges[1:-1]:
            for signed in (-e, e):
                if lo < signed < hi:
                    edges.append(signed)
    if knots is not None and len(knots):
        ks = np.asarray(knots)
        ks = ks[(ks > lo) & (ks < hi)]
        if ks.size > MAX_GRID_KNOTS:
            ks = ks[:: int(np.ceil(ks.size / MAX_GRID_KNOTS))]
        edges.extend(ks.tolist())

    s1 = s2 = 0.0
    if singular:
        s1 = max(lo - tstar, -SING_DELTA)
        s2 = min(hi - tstar, SING_DELTA)
        if s1 >= s2:
            s1 = s2 = 0.0
        if tstar + SING_DELTA < hi:
            start = max(SING_DELTA, lo - tstar)
            for d in side_distances(start, hi - tstar, GRADE_RATIO, W_GAUSS):
                edges.append(tstar + d)
        if tstar - SING_DELTA > lo:
            start = max(SING_DELTA, tstar - hi)
            for d in side_distances(start, tstar - lo, GRADE_RATIO, W_GAUSS):
                edges.append(tstar - d)

    edges = np.array(sorted(edges))
    span = hi - lo
    keep = np.ones(edges.size, dtype=bool)
    keep[1:] = np.diff(edges) > EDGE_MERGE_TOL * span
    edges = edges[keep]
    if singular and s2 > s1:
        inside = (edges > tstar + s1 + EDGE_MERGE_TOL * span) & \
                 (edges < tstar + s2 - EDGE_MERGE_TOL * span)
        edges = edges[~inside]

    nodes_list = []
    wts_list = []
    nseg = len(seg_edges) - 1
    for a, b in zip(edges[:-1], edges[1:]):
        if singular and s2 > s1 and a >= tstar + s1 - EDGE_MERGE_TOL * span \
                and b <= tstar + s2 + EDGE_MERGE_TOL * span:
            continue  # the sliver panel is handled analytically
        mid = abs(0.5 * (a + b))
        wmax = seg_wmax[-1]
        for j in range(nseg):
            if seg_edges[j] <= mid <= seg_edges[j + 1]:
                wmax = seg_wmax[j]
                break
        npan = max(1, int(np.ceil((b - a) / wmax - 1e-12)))
        sub = np.linspace(a, b, npan + 1)
        c = 0.5 * (sub[:-1] + sub[1:])
        h = 0.5 * (sub[1:] - sub[:-1])
        nodes_list.append((c[:, None] + h[:, None] * GLX[None, :]).ravel())
        wts_list.append((h[:, None] * GLW[None, :]).ravel())

    if not nodes_list:
        return _EMPTY, _EMPTY, s1, s2
    return np.concatenate(nodes_list), np.concatenate(wts_list), s1, s2


def sliver_moments(a, s1, s2):
    """(I0, I1) with I0 = int_{s1}^{s2} |s|^a ds and I1 = int |s|^a s ds."""
    def m0(z):
        return np.sign(z) * abs(z) ** (a + 1.0) / (a + 1.0)

    def m1(z):
        return abs(z) ** (a + 2.0) / (a + 2.0)

    return m0(s2) - m0(s1), m1(s2) - m1(s1)


# ---------------------------------------------------------------------------
# kernel evaluation
# ---------------------------------------------------------------------------

def hermite_eval(tx_step, tv, td, t):
    """Cubic-Hermite value/derivative of a radial table at |t| (vectorized)."""
    at = np.abs(np.asarray(t, dtype=np.float64))
    n = tv.size
    i = np.minimum((at / tx_step).astype(np.int64), n - 2)
    u = at / tx_step - i
    u2 = u * u
    u3 = u2 * u
    h00 = 2 * u3 - 3 * u2 + 1
    h10 = u3 - 2 * u2 + u
    h01 = -2 * u3 + 3 * u2
    h11 = u3 - u2
    val = h00 * tv[i] + h01 * tv[i + 1] + tx_step * (h10 * td[i] + h11 * td[i + 1])
    dval = ((6 * u2 - 6 * u) * (tv[i] - tv[i + 1]) / tx_step
            + (3 * u2 - 4 * u + 1) * td[i] + (3 * u2 - 2 * u) * td[i + 1])
    off = at >= (n - 1) * tx_step
    val = np.where(off, 0.0, val)
    dval = np.where(off, 0.0, dval)
    return val, dval


def kernel_values(kern, kp, tx_step, tv, td, t):
    """(K_u(t), K_g(t)) for the requested kernel code."""
    t = np.asarray(t, dtype=np.float64)
    if kern == KERN_GAUSS:
        ku = INV_SQRT_PI * np.exp(-t * t)
        return ku, -2.0 * t * ku
    if kern == KERN_TABLE:
        val, dval = hermite_eval(tx_step, tv, td, t)
        return val, np.sign(t) * dval
    if kern == KERN_CAPPED:
        ku = np.minimum(INV_SQRT_PI * np.exp(-t * t), kp)
        return ku, np.zeros_like(t)
    raise ValueError(f"unknown kernel code {kern}")


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def _grid_knots(x, r, gx, lo, hi):
    t = (x - gx) / r
    t = t[(t > lo) & (t < hi)]
    t.sort()
    return t


def _smooth_cofactor(fam, b, kern, kp, tx_step, tv, td, x, r, tstar, s):
    """H(s) = smooth-part(x - r(tstar+s)) * K(tstar+s) for the sliver fit."""
    t = tstar + s
    y = x - r * t
    h = (1.0 + y * y) ** b if fam == FAM_POLYPOWER else 1.0
    ku, kg = kernel_values(kern, kp, tx_step, tv, td, np.array([t]))
    return h * float(ku[0]), h * float(kg[0])


def conv_batch_np(fam, p0, p1, p2, gx, gv, xs, rs, kern, kp,
                  seg_edges, seg_wmax, tx_step, tv, td):
    """Batched (w * K_r)(x) and (w * K'_r)(x); the reference implementation.

    Computes sum over quadrature nodes of w(x - r t) K(t) wt, one (x, r) pair
    at a time with vectorized node evaluation plus the analytic sliver for
    power-type families.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    rs = np.atleast_1d(np.asarray(rs, dtype=np.float64))
    m = xs.size
    U = np.empty(m)
    G = np.empty(m)
    lo, hi = -seg_edges[-1], seg_edges[-1]
    singular_fam = fam in (FAM_POWER, FAM_POLYPOWER)
    a = p0
    for i in range(m):
        x, r = xs[i], rs[i]
        tstar = x / r
        singular = singular_fam and (lo - 1.0) < tstar < (hi + 1.0)
        knots = _grid_knots(x, r, gx, lo, hi) if fam == FAM_GRID else None
        nodes, wts, s1, s2 = build_nodes(lo, hi, tstar if singular else 0.0,
                                         singular, seg_edges, seg_wmax, knots)
        y = x - r * nodes
        w = weight_values(fam, p0, p1, p2, gx, gv, y)
        ku, kg = kernel_values(kern, kp, tx_step, tv, td, nodes)
        u = float(np.dot(w * ku, wts))
        g = float(np.dot(w * kg, wts))
        if singular and s2 > s1:
            i0, i1 = sliver_moments(a, s1, s2)
            hu0, hg0 = _smooth_cofactor(fam, p1, kern, kp, tx_step, tv, td, x, r, tstar, 0.0)
            hul, hgl = _smooth_cofactor(fam, p1, kern, kp, tx_step, tv, td, x, r, tstar, s1)
            hur, hgr = _smooth_cofactor(fam, p1, kern, kp, tx_step, tv, td, x, r, tstar, s2)
            span = s2 - s1
            cu1 = (hur - hul) / span
            cg1 = (hgr - hgl) / span
            # note: the convolution variable gives w(x - r t) = r^a |t-tstar|^a * smooth
            scale = r ** a
            u += scale * (hu0 * i0 + cu1 * i1)
            g += scale * (hg0 * i0 + cg1 * i1)
        U[i] = u
        G[i] = g
    return U, G


def ball_mass_np(fam, p0, p1, p2, gx, gv, centers, radii):
    """Exact/adaptive masses w(ball(x, r)) for 1-D weights (vectorized)."""
    x = np.atleast_1d(np.asarray(centers, dtype=np.float64))
    r = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    lo, hi = x - r, x + r
    if fam == FAM_CONSTANT:
        return p0 * (hi - lo)
    if fam == FAM_POWER:
        a = p0

        def prim(z):
            return np.sign(z) * np.abs(z) ** (a + 1.0) / (a + 1.0)

        return prim(hi) - prim(lo)
    if fam == FAM_PLATEAU:
        eps, c, wd = p0, p1, p2
        u1 = np.clip((lo - c) / wd, -1.0, 1.0)
        u2 = np.clip((hi - c) / wd, -1.0, 1.0)
        edges = np.linspace(0.0, 1.0, 13)[None, :]
        uu = u1[:, None] + (u2 - u1)[:, None] * edges
        cm = 0.5 * (uu[:, :-1] + uu[:, 1:])
        hm = 0.5 * (uu[:, 1:] - uu[:, :-1])
        nodes = cm[:, :, None] + hm[:, :, None] * GLX[None, None, :]
        wts = hm[:, :, None] * GLW[None, None, :]
        bump_int = (bump(nodes) * wts).sum(axis=(1, 2))
        return (hi - lo) + eps * wd * bump_int
    if fam == FAM_POLYPOWER:
        out = np.empty(x.size)
        for i in range(x.size):
            out[i] = _polypower_segment_mass(p0, p1, lo[i], hi[i])
        return out
    if fam == FAM_GRID:
        return _grid_segment_mass(gx, gv, lo, hi)
    raise ValueError(f"unknown family code {fam}")


def _polypower_segment_mass(a, b, lo, hi):
    """int_lo^hi |y|^a (1+y^2)^b dy with the singularity handled by grading."""
    singular = (lo < SING_DELTA) and (hi > -SING_DELTA)
    big = max(abs(lo), abs(hi))
    wmax = max(0.25, (hi - lo) / 32.0)
    nodes, wts, s1, s2 = build_nodes(lo, hi, 0.0, singular,
                                     np.array([0.0, big]), np.array([wmax]), None)
    w = weight_values(FAM_POLYPOWER, a, b, 0.0, _EMPTY, _EMPTY, nodes)
    total = float(np.dot(w, wts))
    if s2 > s1:
        i0, i1 = sliver_moments(a, s1, s2)
        h1v = (1.0 + s1 * s1) ** b
        h2v = (1.0 + s2 * s2) ** b
        c1 = (h2v - h1v) / (s2 - s1)
        total += 1.0 * i0 + c1 * i1
    return total


def _grid_segment_mass(gx, gv, lo, hi):
    """Exact integral of the piecewise-linear interpolant over [lo, hi]."""
    lo = np.atleast_1d(lo)
    hi = np.atleast_1d(hi)
    bad = (lo < gx[0] - 1e-12) | (hi > gx[-1] + 1e-12)
    cell = np.diff(gx)
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (gv[:-1] + gv[1:]) * cell)))

    def cum_at(z):
        z = np.clip(z, gx[0], gx[-1])
        i = np.clip(np.searchsorted(gx, z, side="right") - 1, 0, gx.size - 2)
        t = z - gx[i]
        slope = (gv[i + 1] - gv[i]) / cell[i]
        return cum[i] + gv[i] * t + 0.5 * slope * t * t

    out = cum_at(hi) - cum_at(lo)
    return np.where(bad, np.nan, out)


def log_ball_mean_np(fam, p0, p1, p2, gx, gv, centers, radii, floor=1e-300):
    """Mean over the ball of log w, with exact handling of log|y| parts."""
    x = np.atleast_1d(np.asarray(centers, dtype=np.float64))
    r = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    lo, hi = x - r, x + r
    if fam == FAM_CONSTANT:
        return np.full(x.shape, np.log(max(p0, floor)))
    if fam == FAM_POWER:
        return p0 * _log_abs_integral(lo, hi) / (hi - lo)
    if fam == FAM_POLYPOWER:
        part1 = p0 * _log_abs_integral(lo, hi)
        part2 = p1 * _smooth_panel_integral(lambda y: np.log1p(y * y), lo, hi)
        return (part1 + part2) / (hi - lo)
    if fam == FAM_PLATEAU:
        eps, c, wd = p0, p1, p2
        u1 = np.clip((lo - c) / wd, -1.0, 1.0)
        u2 = np.clip((hi - c) / wd, -1.0, 1.0)
        edges = np.linspace(0.0, 1.0, 17)[None, :]
        uu = u1[:, None] + (u2 - u1)[:, None] * edges
        cm = 0.5 * (uu[:, :-1] + uu[:, 1:])
        hm = 0.5 * (uu[:, 1:] - uu[:, :-1])
        nodes = cm[:, :, None] + hm[:, :, None] * GLX[None, None, :]
        wts = hm[:, :, None] * GLW[None, None, :]
        vals = np.log1p(eps * bump(nodes))
        return wd * (vals * wts).sum(axis=(1, 2)) / (hi - lo)
    if fam == FAM_GRID:
        out = np.empty(x.size)
        for i in range(x.size):
            out[i] = _grid_log_integral(gx, gv, lo[i], hi[i], floor) / (hi[i] - lo[i])
        return out
    raise ValueError(f"unknown family code {fam}")


def _log_abs_integral(lo, hi):
    """int_lo^hi log|y| dy, exact (y log|y| - y, continuous across 0)."""
    def prim(z):
        z = np.asarray(z, dtype=np.float64)
        az = np.abs(z)
        return np.where(az > 0, z * (np.log(np.where(az > 0, az, 1.0)) - 1.0), 0.0)

    return prim(hi) - prim(lo)


def _smooth_panel_integral(f, lo, hi):
    lo = np.atleast_1d(lo)
    hi = np.atleast_1d(hi)
    edges = np.linspace(0.0, 1.0, 17)[None, :]
    yy = lo[:, None] + (hi - lo)[:, None] * edges
    cm = 0.5 * (yy[:, :-1] + yy[:, 1:])
    hm = 0.5 * (yy[:, 1:] - yy[:, :-1])
    nodes = cm[:, :, None] + hm[:, :, None] * GLX[None, None, :]
    wts = hm[:, :, None] * GLW[None, None, :]
    return (f(nodes) * wts).sum(axis=(1, 2))


def _grid_log_integral(gx, gv, lo, hi, floor):
    """Exact integral of log(linear interpolant) over [lo, hi]."""
    if lo < gx[0] - 1e-12 or hi > gx[-1] + 1e-12:
        return np.nan
    total = 0.0
    i = max(int(np.searchsorted(gx, lo, side="right")) - 1, 0)
    z = lo
    while z < hi - 1e-300 and i < gx.size - 1:
        z2 = min(gx[i + 1], hi)
        x0, x1 = gx[i], gx[i + 1]
        v0, v1 = max(gv[i], floor), max(gv[i + 1], floor)
        slope = (v1 - v0) / (x1 - x0)
        va = v0 + slope * (z - x0)
        vb = v0 + slope * (z2 - x0)
        if abs(slope) * (z2 - z) < 1e-14 * va:
            total += (z2 - z) * np.log(va)
        else:
            total += (vb * (np.log(vb) - 1.0) - va * (np.log(va) - 1.0)) / slope
        z = z2
        i += 1
    return total


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def conv_batch(fam, p0, p1, p2, gx, gv, xs, rs, kern, kp,
               seg_edges, seg_wmax, tx_step=1.0, tv=_EMPTY, td=_EMPTY):
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    rs = np.atleast_1d(np.asarray(rs, dtype=np.float64))
    seg_edges = np.asarray(seg_edges, dtype=np.float64)
    seg_wmax = np.asarray(seg_wmax, dtype=np.float64)
    if backend() == "numba":
        from ainftylab import _accel_numba as nb

        return nb.conv_batch_nb(fam, p0, p1, p2, gx, gv, xs, rs, kern, kp,
                                seg_edges, seg_wmax, tx_step, tv, td)
    return conv_batch_np(fam, p0, p1, p2, gx, gv, xs, rs, kern, kp,
                         seg_edges, seg_wmax, tx_step, tv, td)


def ball_mass_batch(fam, p0, p1, p2, gx, gv, centers, radii):
    centers = np.atleast_1d(np.asarray(centers, dtype=np.float64))
    radii = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    if backend() == "numba":
        from ainftylab import _accel_numba as nb

        return nb.ball_mass_nb(fam, p0, p1, p2, gx, gv, centers, radii)
    return ball_mass_np(fam, p0, p1, p2, gx, gv, centers, radii)


def log_ball_mean_batch(fam, p0, p1, p2, gx, gv, centers, radii, floor=1e-300):
    centers = np.atleast_1d(np.asarray(centers, dtype=np.float64))
    radii = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    if backend() == "numba":
        from ainftylab import _accel_numba as nb

        return nb.log_ball_mean_nb(fam, p0, p1, p2, gx, gv, centers, radii, floor)
    return log_ball_mean_np(fam, p0, p1, p2, gx, gv, centers, radii, floor)
