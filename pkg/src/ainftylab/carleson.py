"""The log-gradient Carleson measure of a weight: density, box masses, norms.

The measure on the upper half-space is

    d mu_w(x, r) = |grad_x log(w * phi_r)(x)|^2 r dx dr
                 = |w * psi_r(x)|^2 / |w * phi_r(x)|^2 * dx dr / r,

and its Carleson norm is sup over balls of mu_w(T_Delta)/|Delta| with
T_Delta the box Delta x (0, r(Delta)).  The norm vanishes exactly for
constant weights and quantifies how far w is from constant at all scales.

``kernel='bump'`` switches the Gaussian for the compactly supported
reference bump (the change-of-kernel variant); the two norms are comparable
for doubling weights and both are computed through the same box machinery.

Box masses integrate the density over log-spaced levels in r (Simpson in
log r) down to a floor r(Delta) * 2^-10 and extrapolate the remaining mass
from the fitted local power of the level integrand; levels that refuse to
decay (a singular weight inside the box at a scale where self-similarity
fails) flag the estimate instead of extrapolating silently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ainftylab import kernels
from ainftylab.errors import PositivityError
from ainftylab.heat import heat_pair, table_conv
from ainftylab.weights import GAMMA_N, WeightSpec

DEFAULT_S_LEVELS = 64
DEFAULT_X_NODES = 64
R_FLOOR_FACTOR = 2.0 ** -10


@dataclass(frozen=True)
class CarlesonBox:
    """T_Delta = Delta(center, radius) x (0, radius)."""

    center: object
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("box radius must be positive")


@dataclass
class BoxMass:
    value: float
    tail: float        # extrapolated r < r_floor contribution
    slope: float       # fitted local power p of the level integrand ~ s^p
    flagged: bool      # extrapolation unreliable (non-decaying integrand)
    r_floor: float


@dataclass
class CarlesonEstimate:
    value: float
    witness: CarlesonBox | None
    family_size: int
    r_floor: float
    quad_error: float
    flagged: bool
    kernel: str = "gauss"

    def to_json_dict(self):
        w = None
        if self.witness is not None:
            c = self.witness.center
            w = {"center": c if np.isscalar(c) else list(c), "radius": self.witness.radius}
        return {"value": self.value, "witness": w, "family_size": self.family_size,
                "r_floor": self.r_floor, "quad_error": self.quad_error,
                "flagged": self.flagged, "kernel": self.kernel}


def density(spec: WeightSpec, x, r, kernel="gauss"):
    """d mu_w/(dx dr) at (x, r): |w*psi_r|^2/|w*phi_r|^2 / r (vectorized)."""
    scalar = np.ndim(r) == 0 and (np.ndim(x) == 0 if spec.n == 1 else np.ndim(x) == 1)
    if spec.n == 1:
        xf = np.atleast_1d(np.asarray(x, dtype=np.float64))
    else:
        xf = np.atleast_2d(np.asarray(x, dtype=np.float64))
    rf = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if rf.size == 1 and xf.shape[0] > 1:
        rf = np.full(xf.shape[0], rf[0])
    if xf.shape[0] == 1 and rf.size > 1:
        xf = np.repeat(xf, rf.size, axis=0) if spec.n == 2 else np.full(rf.size, xf[0])
    U, G = _pair(spec, xf, rf, kernel)
    if np.any(U <= 0):
        raise PositivityError("heat average vanished while forming the density")
    g2 = G * G if spec.n == 1 else (G * G).sum(axis=1)
    out = g2 / (U * U) / rf
    return float(out[0]) if scalar else out


def _pair(spec, xs, rs, kernel):
    if kernel == "gauss":
        return heat_pair(spec, xs, rs)
    if kernel == "bump":
        return table_conv(spec, xs, rs, kernels.varphi_table(spec.n))
    raise ValueError("kernel must be 'gauss' or 'bump'")


def box_mass(spec: WeightSpec, box: CarlesonBox, r_floor=None, kernel="gauss",
             s_levels=DEFAULT_S_LEVELS, x_nodes=DEFAULT_X_NODES) -> BoxMass:
    """mu_w(T_Delta) restricted to s >= r_floor, plus the extrapolated tail."""
    if spec.n != 1:
        raise NotImplementedError("box masses are n=1 only")
    R = box.radius
    if r_floor is None:
        r_floor = R * R_FLOOR_FACTOR
    if not 0 < r_floor < R:
        raise ValueError("r_floor must lie in (0, r(Delta))")
    if s_levels % 2:
        s_levels += 1
    ss = np.geomspace(r_floor, R, s_levels + 1)
    npan = max(4, x_nodes // 8)
    glx, glw = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(box.center - R, box.center + R, npan + 1)
    cm = 0.5 * (edges[:-1] + edges[1:])
    hm = 0.5 * (edges[1:] - edges[:-1])
    xq = (cm[:, None] + hm[:, None] * glx[None, :]).ravel()
    wq = (hm[:, None] * glw[None, :]).ravel()

    X = np.tile(xq, ss.size)
    S = np.repeat(ss, xq.size)
    U, G = _pair(spec, X, S, kernel)
    if np.any(U <= 0):
        raise PositivityError("heat average vanished inside the box")
    q = (G * G) / (U * U)
    # level integrand g(s) = int_Delta density dx = (1/s) int q dx
    level = (q.reshape(ss.size, xq.size) @ wq) / ss
    # Simpson in log s of s * g(s)
    L = np.log(ss)
    f = ss * level
    h = (L[-1] - L[0]) / s_levels
    simp = f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-1:2].sum()
    main = simp * h / 3.0

    # fit g ~ c s^p on the three lowest levels; tail = int_0^{r_floor} g ds
    g0, g1, g2v = level[0], level[1], level[2]
    flagged = False
    if g0 <= 0 or g1 <= 0 or g2v <= 0:
        p = 1.0
        tail = 0.0
    else:
        p = float(np.log(g1 / g0) / np.log(ss[1] / ss[0]))
        p2 = float(np.log(g2v / g1) / np.log(ss[2] / ss[1]))
        if p < -0.25 or abs(p - p2) > 0.75:
            flagged = True
            tail = float("inf") if p <= -1.0 else g0 * r_floor / (p + 1.0)
        else:
            tail = g0 * r_floor / (p + 1.0)
    return BoxMass(float(main + (0.0 if flagged else tail)), float(tail),
                   float(p), flagged, float(r_floor))


def normalized_box_mass(spec: WeightSpec, x, r, kernel="gauss", **kw):
    """gamma_n^{-1} r^{-n} mu_w(T_{Delta(x,r)}), the box term of the identity."""
    bm = box_mass(spec, CarlesonBox(x, r), kernel=kernel, **kw)
    return bm.value / (GAMMA_N[spec.n] * r ** spec.n), bm


def carleson_norm(spec: WeightSpec, family, r_floor_factor=R_FLOOR_FACTOR,
                  kernel="gauss", s_levels=DEFAULT_S_LEVELS,
                  x_nodes=DEFAULT_X_NODES, threads=1) -> CarlesonEstimate:
    """Sup over the family of |Delta|^{-1} mu_w(T_Delta), a certified lower bound."""
    boxes = [b if isinstance(b, CarlesonBox) else CarlesonBox(b[0], b[1])
             for b in family]
    if not boxes:
        raise ValueError("carleson_norm needs a non-empty family")
    if spec.is_constant():
        return CarlesonEstimate(0.0, boxes[0], len(boxes), 0.0, 0.0, False, kernel)

    def one(box):
        bm = box_mass(spec, box, r_floor=box.radius * r_floor_factor,
                      kernel=kernel, s_levels=s_levels, x_nodes=x_nodes)
        return bm.value / (GAMMA_N[spec.n] * box.radius ** spec.n), bm

    results = _pmap(one, boxes, threads)
    vals = np.array([v for v, _ in results])
    k = int(np.argmax(vals))
    flagged = any(bm.flagged for _, bm in results)
    tails = max(abs(bm.tail) if np.isfinite(bm.tail) else 0.0 for _, bm in results)
    return CarlesonEstimate(float(vals[k]), boxes[k], len(boxes),
                            boxes[k].radius * r_floor_factor,
                            float(tails), flagged, kernel)


def _pmap(fn, items, threads):
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def dyadic_box_family(center=0.0, k_lo=-6, k_hi=7, offsets=(0.0, 0.5, 1.0, 2.0, 4.0)):
    """Dyadic radii 2^k with centers offset by multiples of r on both sides."""
    fam = []
    for k in range(k_lo, k_hi + 1):
        r = 2.0 ** k
        for off in offsets:
            fam.append(CarlesonBox(center + off * r, r))
            if off > 0:
                fam.append(CarlesonBox(center - off * r, r))
    return fam
