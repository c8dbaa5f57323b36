"""Heat extensions u(x, r^2) = (w * phi_r)(x), their gradients, and kernel averages.

The convolution kernel is the Gaussian phi(t) = pi^{-n/2} exp(-|t|^2) with the
scaling f_r(x) = r^{-n} f(x/r), so u solves the heat equation in the time
variable s = r^2 (up to the fixed diffusion constant of this normalization)
and u(x, r^2) is comparable to the ball average of w at scale r for doubling
weights.  The identity grad_x u(x, r^2) = r^{-1} (w * psi_r)(x) with
psi = grad phi converts between the gradient convolution returned here and
the spatial gradient of the extension.

Convolutions are truncated at |t| <= kappa; the discarded tail is bounded by
the doubling geometric series and reported in HeatSample.tail_error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ainftylab import accel, kernels
from ainftylab.errors import ToleranceError
from ainftylab.weights import (GAMMA_N, WeightSpec, ball_measure_many,
                               doubling_upper_bound)

KAPPA = accel.KAPPA_DEFAULT

_EMPTY = np.empty(0)


@dataclass(frozen=True)
class KernelDescriptor:
    """One of the fixed special kernels, with its parameters.

    kind: 'gauss', 'gauss_grad', 'indicator', 'norm_indicator', 'bump'
    (the reference bump varphi), 'plateau_bump' (the eta-bump), or
    'capped_gauss'.
    """

    kind: str
    eta: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        if self.kind not in ("gauss", "gauss_grad", "indicator", "norm_indicator",
                             "bump", "plateau_bump", "capped_gauss"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "plateau_bump" and not (self.eta and 0 < self.eta < 1):
            raise ValueError("plateau_bump requires eta in (0, 1)")
        if self.kind == "capped_gauss" and not (self.kappa and self.kappa > 2):
            raise ValueError("capped_gauss requires kappa > 2")


@dataclass
class HeatSample:
    x: object
    r: float
    u: float
    grad: object
    tail_error: float


# ---------------------------------------------------------------------------
# core convolutions
# ---------------------------------------------------------------------------

def heat_pair(spec: WeightSpec, xs, rs, closed=None):
    """((w * phi_r)(x), (w * psi_r)(x)) batched; closed forms where available.

    For n=2 the second return is an (m, 2) array of gradient-kernel values.
    ``closed=False`` forces quadrature (used by the cross-check tests).
    """
    xs_arr = np.atleast_1d(np.asarray(xs, dtype=np.float64)) if spec.n == 1 \
        else np.atleast_2d(np.asarray(xs, dtype=np.float64))
    rs_arr = np.atleast_1d(np.asarray(rs, dtype=np.float64))
    if rs_arr.size == 1 and (xs_arr.shape[0] > 1):
        rs_arr = np.full(xs_arr.shape[0], rs_arr[0])
    if np.any(rs_arr <= 0):
        raise ValueError("heat scale r must be positive")
    use_closed = closed if closed is not None else True
    if use_closed and spec.family == "constant":
        c = spec.params["c"]
        U = np.full(rs_arr.shape, c)
        G = np.zeros(rs_arr.shape) if spec.n == 1 else np.zeros((rs_arr.size, 2))
        return U, G
    if use_closed and spec.family == "power" and spec.params["a"] == 2.0:
        if spec.n == 1:
            U = xs_arr ** 2 + 0.5 * rs_arr ** 2
            G = 2.0 * xs_arr * rs_arr
        else:
            U = (xs_arr ** 2).sum(axis=1) + rs_arr ** 2
            G = 2.0 * xs_arr * rs_arr[:, None]
        return U, G
    if spec.n == 1:
        fam, p0, p1, p2, gx, gv = spec.accel_args()
        return accel.conv_batch(fam, p0, p1, p2, gx, gv, xs_arr, rs_arr,
                                accel.KERN_GAUSS, 0.0,
                                kernels.GAUSS_SEG, kernels.GAUSS_WMAX)
    return _conv_2d_gauss(spec, xs_arr, rs_arr)


def heat_value(spec: WeightSpec, x, r, closed=None):
    """u(x, r^2) = (w * phi_r)(x)."""
    U, _ = heat_pair(spec, x, r, closed=closed)
    return float(U[0]) if U.size == 1 else U


def heat_gradient(spec: WeightSpec, x, r, closed=None):
    """(w * psi_r)(x); the caller obtains grad_x u(x, r^2) as this over r."""
    _, G = heat_pair(spec, x, r, closed=closed)
    if spec.n == 1:
        return float(G[0]) if G.size == 1 else G
    return G[0] if G.shape[0] == 1 else G


def heat_sample(spec: WeightSpec, x, r, tol=None):
    U, G = heat_pair(spec, x, r)
    tail = heat_tail_bound(spec, x, r)
    if tol is not None and tail > tol * abs(float(U[0])):
        raise ToleranceError("heat truncation tail exceeds the requested tolerance",
                             estimate=float(U[0]), error_bound=tail)
    grad = float(G[0]) if spec.n == 1 else G[0]
    return HeatSample(x, float(r), float(U[0]), grad, tail)


def heat_tail_bound(spec: WeightSpec, x, r, kappa=KAPPA):
    """|truncation tail| of (w * phi_r)(x) via the doubling geometric series."""
    cd = doubling_upper_bound(spec)
    k_head = int(np.ceil(np.log2(max(kappa, 2.0)))) + 1
    mass = float(ball_measure_many(spec, [x] if spec.n == 1 else [x], [r])[0])
    total = 0.0
    for k in range(0, 40):
        block = np.pi ** (-spec.n / 2.0) * np.exp(-(2.0 ** k * kappa) ** 2)
        if block == 0.0:
            break
        total += block * cd ** (k + 1 + k_head)
    return total * mass / r ** spec.n


def _conv_2d_gauss(spec, xs, rs):
    prof = lambda rho: np.pi ** -1.0 * np.exp(-rho * rho)
    dprof = lambda rho: -2.0 * rho * np.pi ** -1.0 * np.exp(-rho * rho)
    return _conv_2d(spec, xs, rs, prof, dprof, KAPPA)


def _conv_2d(spec, xs, rs, prof, dprof, sup, theta_n=128, want_grad=True):
    """Polar-quadrature convolution for n=2: returns (U, G) with G (m, 2).

    The polar frame is centered at the weight's singular point t* = x/r for
    power-type families (making the radial factor |t - t*|^a exactly the
    polar radius) and at the origin otherwise.
    """
    from ainftylab.weights import _eval_weight_2d

    m = xs.shape[0]
    U = np.empty(m)
    G = np.zeros((m, 2))
    singular = spec.family in ("power", "polypower")
    a = spec.params.get("a", 0.0)
    th = (np.arange(theta_n) + 0.5) * (2 * np.pi / theta_n)
    ct, st = np.cos(th), np.sin(th)
    for i in range(m):
        x = xs[i]
        r = rs[i]
        tsx, tsy = (x[0] / r, x[1] / r) if singular else (0.0, 0.0)
        tnorm = np.hypot(tsx, tsy)
        L = sup + tnorm
        edges = np.array(accel.side_distances(1e-10 if singular else L / 64.0,
                                              L, accel.GRADE_RATIO, 0.5))
        if not singular:
            edges = np.linspace(0.0, L, 160)
        cmid = 0.5 * (edges[:-1] + edges[1:])
        h = 0.5 * (edges[1:] - edges[:-1])
        rho = (cmid[:, None] + h[:, None] * accel.GLX[None, :]).ravel()
        wr = (h[:, None] * accel.GLW[None, :]).ravel()
        tx = tsx + rho[:, None] * ct[None, :]
        ty = tsy + rho[:, None] * st[None, :]
        tn = np.hypot(tx, ty)
        ku = prof(tn)
        py = np.stack([x[0] - r * tx.ravel(), x[1] - r * ty.ravel()], axis=1)
        if singular:
            rad = rho[:, None] * np.ones_like(tx)
            wv = (r * rad.ravel()) ** a
            if spec.family == "polypower":
                q = py[:, 0] ** 2 + py[:, 1] ** 2
                wv = wv * (1.0 + q) ** spec.params["b"]
            wv = wv.reshape(tx.shape)
        else:
            wv = _eval_weight_2d(spec, py).reshape(tx.shape)
        dth = 2 * np.pi / theta_n
        base = wv * (rho * wr)[:, None] * dth
        U[i] = float((base * ku).sum())
        if want_grad:
            scale = np.where(tn > 0, 1.0 / np.where(tn > 0, tn, 1.0), 0.0)
            kd = dprof(tn) * scale
            G[i, 0] = float((base * kd * tx).sum())
            G[i, 1] = float((base * kd * ty).sum())
    return U, G


# ---------------------------------------------------------------------------
# kernel averages
# ---------------------------------------------------------------------------

def kernel_average(spec: WeightSpec, kern: KernelDescriptor, x, r):
    """(kernel_r * w)(x) for the special kernels; exact for the indicators."""
    n = spec.n
    if kern.kind == "indicator":
        return float(ball_measure_many(spec, [x], [r])[0]) / r ** n
    if kern.kind == "norm_indicator":
        return float(ball_measure_many(spec, [x], [r])[0]) / (GAMMA_N[n] * r ** n)
    if kern.kind == "gauss":
        U, _ = heat_pair(spec, x, r)
        return float(U[0])
    if kern.kind == "gauss_grad":
        _, G = heat_pair(spec, x, r)
        return float(G[0]) if n == 1 else G[0]
    if kern.kind == "capped_gauss":
        if n != 1:
            raise NotImplementedError("capped Gaussian averages are n=1 only")
        cap = kernels.capped_gauss_cap(kern.kappa, 1)
        seg, segw = kernels.capped_gauss_segments(kern.kappa, 1)
        fam, p0, p1, p2, gx, gv = spec.accel_args()
        U, _ = accel.conv_batch(fam, p0, p1, p2, gx, gv, [x], [r],
                                accel.KERN_CAPPED, cap, seg, segw)
        return float(U[0])
    table = kernels.varphi_table(n) if kern.kind == "bump" \
        else kernels.eta_bump_table(kern.eta, n)
    U, _ = table_conv(spec, x, r, table)
    return float(U[0])


def table_conv(spec: WeightSpec, xs, rs, table):
    """((K_r * w)(x), (K'_r * w)(x)) for a tabulated radial kernel."""
    if spec.n == 1:
        fam, p0, p1, p2, gx, gv = spec.accel_args()
        xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
        rs = np.atleast_1d(np.asarray(rs, dtype=np.float64))
        if rs.size == 1 and xs.size > 1:
            rs = np.full(xs.size, rs[0])
        return accel.conv_batch(fam, p0, p1, p2, gx, gv, xs, rs,
                                accel.KERN_TABLE, 0.0, table.seg_edges,
                                table.seg_wmax, table.step, table.values,
                                table.derivs)
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    rs = np.atleast_1d(np.asarray(rs, dtype=np.float64))
    if rs.size == 1 and xs.shape[0] > 1:
        rs = np.full(xs.shape[0], rs[0])
    rad = np.arange(table.values.size) * table.step
    prof = lambda rho: np.interp(rho, rad, table.values, right=0.0)
    dprof = lambda rho: np.interp(rho, rad, table.derivs, right=0.0)
    return _conv_2d(spec, xs, rs, prof, dprof, table.support)


# ---------------------------------------------------------------------------
# diagnostic sweeps
# ---------------------------------------------------------------------------

def relative_gradient_sup(spec: WeightSpec, region=(-2.0, 2.0),
                          scale_range=(0.5, 2.0), centers=64, radii=32):
    """sup |(w * psi_R)(x)| / (w * phi_R)(x) over a lattice-by-log-radii family."""
    if spec.n != 1:
        raise NotImplementedError("gradient sup sweep is n=1 only")
    xs = np.linspace(region[0], region[1], centers)
    rr = np.geomspace(scale_range[0], scale_range[1], radii)
    X, R = np.meshgrid(xs, rr, indexing="ij")
    U, G = heat_pair(spec, X.ravel(), R.ravel())
    ratio = np.abs(G) / U
    k = int(np.argmax(ratio))
    return float(ratio[k]), (float(X.ravel()[k]), float(R.ravel()[k]))


def heat_ball_gap(spec: WeightSpec, region=(-2.0, 2.0), scale_range=(1 / 4, 2.0),
                  centers=16, scales=8, offsets=(-0.9, -0.45, 0.0, 0.45, 0.9)):
    """Worst |log((phi_s * w)(y) / (chitilde_s * w)(x))| over |x - y| < s.

    This is the two-sided heat-vs-ball-average comparison that M-good
    doubling forces close to 0.
    """
    if spec.n != 1:
        raise NotImplementedError("heat/ball gap sweep is n=1 only")
    xs = np.linspace(region[0], region[1], centers)
    ss = np.geomspace(scale_range[0], scale_range[1], scales)
    X, S = np.meshgrid(xs, ss, indexing="ij")
    Xf, Sf = X.ravel(), S.ravel()
    chi = ball_measure_many(spec, Xf, Sf) / (GAMMA_N[1] * Sf)
    worst = 0.0
    witness = None
    for off in offsets:
        ys = Xf + off * Sf
        U, _ = heat_pair(spec, ys, Sf)
        gaps = np.abs(np.log(U / chi))
        k = int(np.argmax(gaps))
        if gaps[k] > worst:
            worst = float(gaps[k])
            witness = (float(Xf[k]), float(ys[k]), float(Sf[k]))
    return worst, witness


def heat_vs_ball_bracket(spec: WeightSpec, region=(-2.0, 2.0),
                         scale_range=(1 / 4, 2.0), centers=24, scales=12):
    """Range of u(x, s^2) * gamma_n s^n / w(B(x, s)); equals 1 for constants."""
    if spec.n != 1:
        raise NotImplementedError("bracket sweep is n=1 only")
    xs = np.linspace(region[0], region[1], centers)
    ss = np.geomspace(scale_range[0], scale_range[1], scales)
    X, S = np.meshgrid(xs, ss, indexing="ij")
    Xf, Sf = X.ravel(), S.ravel()
    U, _ = heat_pair(spec, Xf, Sf)
    ratio = U * GAMMA_N[1] * Sf / ball_measure_many(spec, Xf, Sf)
    return float(ratio.min()), float(ratio.max())


def bump_sandwich(spec: WeightSpec, eta, region=(-2.0, 2.0),
                  scale_range=(1 / 4, 2.0), centers=24, scales=12):
    """Range of (eta-bump_r * w)(x) / (chi_r * w)(x) over the sampled family.

    The thin-annulus bound pins this ratio in [1, F(1 + eta)].
    """
    if spec.n != 1:
        raise NotImplementedError("bump sandwich sweep is n=1 only")
    table = kernels.eta_bump_table(eta, 1)
    xs = np.linspace(region[0], region[1], centers)
    ss = np.geomspace(scale_range[0], scale_range[1], scales)
    X, S = np.meshgrid(xs, ss, indexing="ij")
    Xf, Sf = X.ravel(), S.ravel()
    U, _ = table_conv(spec, Xf, Sf, table)
    chi = ball_measure_many(spec, Xf, Sf) / Sf
    ratio = U / chi
    return float(ratio.min()), float(ratio.max())


def gradient_continuity(spec: WeightSpec, x, r, halvings=6, beta0=0.25):
    """|(psi_r * w)(x) - (psi_s * w)(y)| / w(B(x, r)) along (y, s) -> (x, r).

    Returns the sequence for beta = beta0 * 2^{-k}, y = x + beta*r,
    s = (1 - beta)*r; continuity of the gradient convolution drives it to 0.
    """
    mass = float(ball_measure_many(spec, [x], [r])[0])
    _, g0 = heat_pair(spec, [x], [r])
    out = []
    for k in range(halvings):
        beta = beta0 * 2.0 ** -k
        _, g = heat_pair(spec, [x + beta * r], [(1.0 - beta) * r])
        out.append(float(abs(g[0] - g0[0])) / mass)
    return out
