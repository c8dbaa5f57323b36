"""Weight models on R^n (n = 1 or 2): densities, ball masses, doubling.

A weight is a non-negative locally integrable density, identified with the
measure w dx.  The supported families are closed-form (constant, power,
power times a polynomial factor, plateau perturbations of 1) plus sampled
grids with multilinear interpolation.  Ball masses use exact antiderivatives
where the family admits them and graded quadrature otherwise; every
sup-type estimate (doubling constant, thin-annulus modulus, good-doubling
deficit) is a deterministic sweep over an explicit sampling family and is a
certified lower bound for the true supremum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ainftylab import accel
from ainftylab.errors import OutOfDomainError

GAMMA_N = {1: 2.0, 2: np.pi}  # Lebesgue volume of the unit ball

_FAMILY_CODES = {
    "constant": accel.FAM_CONSTANT,
    "power": accel.FAM_POWER,
    "polypower": accel.FAM_POLYPOWER,
    "plateau": accel.FAM_PLATEAU,
    "grid": accel.FAM_GRID,
}

_EMPTY = np.empty(0)

DENSITY_FLOOR = 1e-300


def unit_ball_volume(n: int) -> float:
    return GAMMA_N[n]


@dataclass(frozen=True)
class BallQuery:
    """Euclidean ball: center x (scalar for n=1, pair for n=2), radius r > 0."""

    center: object
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class WeightSpec:
    """A weight on R^n.

    families and params:
      constant:  {"c": c > 0}
      power:     {"a": a > -n}                     w(x) = |x|^a
      polypower: {"a": a > -n, "b": b}             w(x) = |x|^a (1+|x|^2)^b
      plateau:   {"eps": e in (-1,1), "center": c, "width": s > 0}
                                                   w(x) = 1 + e*g((x-c)/s)
      grid:      {"points": ..., "densities": ...} multilinear interpolation
    """

    n: int
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("only n in {1, 2} is supported")
        if self.family not in _FAMILY_CODES:
            raise ValueError(f"unknown family {self.family!r}")
        p = self.params
        if self.family == "constant":
            if not p.get("c", 1.0) > 0:
                raise ValueError("constant density must be positive")
        elif self.family in ("power", "polypower"):
            if not p["a"] > -self.n:
                raise ValueError("power exponent must exceed -n for local integrability")
        elif self.family == "plateau":
            if not abs(p.get("eps", 0.0)) < 1.0:
                raise ValueError("plateau amplitude must lie in (-1, 1)")
            if not p.get("width", 1.0) > 0:
                raise ValueError("plateau width must be positive")
        elif self.family == "grid":
            pts = np.asarray(p["points"], dtype=np.float64)
            dens = np.asarray(p["densities"], dtype=np.float64)
            if self.n == 1:
                if pts.ndim != 1 or pts.size != dens.size or pts.size < 2:
                    raise ValueError("grid weight needs matching 1-D points/densities")
                if not np.all(np.diff(pts) > 0):
                    raise ValueError("grid points must be strictly increasing")
            else:
                raise ValueError("grid weights are supported for n=1 only")
            if not np.all(dens > 0):
                raise ValueError("grid densities must be strictly positive")
            object.__setattr__(self, "params",
                               {"points": pts, "densities": np.maximum(dens, DENSITY_FLOOR)})

    # -- constructors -----------------------------------------------------
    @staticmethod
    def constant(c=1.0, n=1):
        return WeightSpec(n, "constant", {"c": float(c)})

    @staticmethod
    def power(a, n=1):
        return WeightSpec(n, "power", {"a": float(a)})

    @staticmethod
    def polypower(a, b, n=1):
        return WeightSpec(n, "polypower", {"a": float(a), "b": float(b)})

    @staticmethod
    def plateau(eps, center=0.0, width=1.0, n=1):
        return WeightSpec(n, "plateau", {"eps": float(eps), "center": center,
                                         "width": float(width)})

    @staticmethod
    def from_grid(points, densities, n=1):
        return WeightSpec(n, "grid", {"points": points, "densities": densities})

    # -- accel plumbing ----------------------------------------------------
    @property
    def fam_code(self):
        return _FAMILY_CODES[self.family]

    def accel_args(self):
        """(fam, p0, p1, p2, gx, gv) in the accel calling convention."""
        p = self.params
        if self.family == "constant":
            return self.fam_code, p["c"], 0.0, 0.0, _EMPTY, _EMPTY
        if self.family == "power":
            return self.fam_code, p["a"], 0.0, 0.0, _EMPTY, _EMPTY
        if self.family == "polypower":
            return self.fam_code, p["a"], p["b"], 0.0, _EMPTY, _EMPTY
        if self.family == "plateau":
            c = p["center"]
            c0 = float(c if np.isscalar(c) else c[0])
            return self.fam_code, p["eps"], c0, p["width"], _EMPTY, _EMPTY
        return self.fam_code, 0.0, 0.0, 0.0, p["points"], p["densities"]

    # -- serialization -----------------------------------------------------
    def to_json(self):
        p = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
             for k, v in self.params.items()}
        return json.dumps({"n": self.n, "family": self.family, "params": p})

    @staticmethod
    def from_json(text):
        d = json.loads(text) if isinstance(text, str) else text
        params = dict(d.get("params", {}))
        if d.get("family") == "grid" and "csv" in params:
            rows = np.loadtxt(params.pop("csv"), delimiter=",", ndmin=2)
            params["points"] = rows[:, 0]
            params["densities"] = rows[:, 1]
        return WeightSpec(int(d["n"]), d["family"], params)

    def grid_to_csv(self, path):
        if self.family != "grid":
            raise ValueError("only grid weights have a CSV sidecar form")
        rows = np.stack([self.params["points"], self.params["densities"]], axis=1)
        np.savetxt(path, rows, delimiter=",", fmt="%.17g")

    def is_constant(self):
        return self.family == "constant"


@dataclass
class DoublingProfile:
    doubling_constant: float
    modulus_samples: list        # (ratio a in (1,2], F(a) estimate)
    witness: BallQuery | None
    family_size: int

    def __post_init__(self):
        if self.doubling_constant < 1.0 - 1e-12:
            raise ValueError("doubling constant estimate below 1")


@dataclass
class GoodDoublingReport:
    M: float
    deficit: float
    witness: tuple | None        # (x, R, y, s, r)
    family_size: int

    @property
    def certified(self):
        """M-good doubling holds on the sampled family."""
        return bool(self.deficit <= np.log(1.0 + 1.0 / self.M) + 1e-12)


# ---------------------------------------------------------------------------
# density and masses
# ---------------------------------------------------------------------------

def eval_weight(spec: WeightSpec, x):
    """Density w(x); raises OutOfDomainError outside a sampled grid's hull."""
    if spec.n == 1:
        fam, p0, p1, p2, gx, gv = spec.accel_args()
        vals = accel.weight_values(fam, p0, p1, p2, gx, gv, np.asarray(x, dtype=np.float64))
        if np.any(np.isnan(vals)):
            raise OutOfDomainError("point outside the sampled grid hull")
        return vals if np.ndim(x) else float(vals)
    return _eval_weight_2d(spec, x)


def _eval_weight_2d(spec, x):
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    rho = np.hypot(pts[:, 0], pts[:, 1])
    p = spec.params
    if spec.family == "constant":
        out = np.full(rho.shape, p["c"])
    elif spec.family == "power":
        out = rho ** p["a"]
    elif spec.family == "polypower":
        out = rho ** p["a"] * (1.0 + rho * rho) ** p["b"]
    elif spec.family == "plateau":
        c = np.asarray(p["center"], dtype=np.float64)
        if c.ndim == 0:
            c = np.array([float(c), 0.0])
        d = np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1])
        out = 1.0 + p["eps"] * accel.bump(d / p["width"])
    else:
        raise OutOfDomainError("grid weights are n=1 only")
    return float(out[0]) if single else out


def ball_measure(spec: WeightSpec, q: BallQuery):
    """Mass w(ball) = integral of the density over the ball."""
    return float(ball_measure_many(spec, [q.center], [q.radius])[0])


def ball_measure_with_error(spec: WeightSpec, q: BallQuery, tol=None):
    """(mass, error bound); raises ToleranceError when the bound exceeds tol.

    Constant/power/grid masses come from exact antiderivatives (bound at the
    rounding level); plateau and polypower masses are panel quadratures whose
    bound is estimated by comparing against a refined-panel evaluation.
    """
    from ainftylab.errors import ToleranceError

    val = ball_measure(spec, q)
    if spec.family in ("constant", "power", "grid"):
        bound = 4.0 * np.finfo(float).eps * abs(val)
    elif spec.family == "plateau":
        bound = 1e-13 * abs(val)
    else:
        lo, hi = q.center - q.radius, q.center + q.radius
        mid = 0.5 * (lo + hi)
        split = (_polypower_segment_mass_refined(spec, lo, mid)
                 + _polypower_segment_mass_refined(spec, mid, hi))
        bound = 2.0 * abs(val - split) + 1e-15 * abs(val)
    if tol is not None and bound > tol * max(abs(val), 1e-300):
        raise ToleranceError("ball mass error bound exceeds the requested tolerance",
                             estimate=val, error_bound=bound)
    return val, bound


def _polypower_segment_mass_refined(spec, lo, hi):
    if spec.n != 1:
        raise NotImplementedError
    p = spec.params
    from ainftylab.accel import _polypower_segment_mass

    return _polypower_segment_mass(p["a"], p["b"], lo, hi)


def ball_measure_many(spec: WeightSpec, centers, radii):
    radii = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    if np.any(radii <= 0):
        raise ValueError("ball radius must be positive")
    if spec.n == 1:
        centers = np.atleast_1d(np.asarray(centers, dtype=np.float64))
        fam, p0, p1, p2, gx, gv = spec.accel_args()
        out = accel.ball_mass_batch(fam, p0, p1, p2, gx, gv, centers, radii)
        if np.any(np.isnan(out)):
            raise OutOfDomainError("ball leaves the sampled grid hull")
        return out
    return _ball_measure_2d(spec, centers, radii)


def _disk_chord(dist, r, theta):
    """Radial extents [rho-, rho+] of the disk B(center, r) along rays from the
    origin, for origin-center distance ``dist`` and ray angles ``theta`` relative
    to the center direction."""
    c = dist * np.cos(theta)
    disc = r * r - (dist * np.sin(theta)) ** 2
    disc = np.maximum(disc, 0.0)
    root = np.sqrt(disc)
    lo = np.maximum(c - root, 0.0)
    hi = np.maximum(c + root, 0.0)
    return lo, hi


_THETA_N = 256
_GL16 = np.polynomial.legendre.leggauss(16)


def _theta_nodes(dist, r):
    """Angular Gauss-Legendre nodes/weights for rays from the origin into the
    disk, graded toward the angles where the chord-length sqrt degenerates
    (grazing rays outside, +-pi/2 inside)."""
    if dist < 1e-14 * r:
        th = (np.arange(_THETA_N) + 0.5) * (2 * np.pi / _THETA_N)
        return th, np.full(_THETA_N, 2 * np.pi / _THETA_N)
    if dist < r:
        lo, hi = -np.pi, np.pi
        crit = (-np.pi / 2.0, np.pi / 2.0)
    else:
        tt = np.arcsin(min(r / dist, 1.0))
        lo, hi = -tt, tt
        crit = (-tt, tt)
    edges = {lo, hi}
    for c in crit:
        if lo < c < hi:
            edges.add(c)
        for d in accel.side_distances(1e-10, hi - c, 3.0, np.pi / 16.0):
            if lo < c + d < hi:
                edges.add(c + d)
        for d in accel.side_distances(1e-10, c - lo, 3.0, np.pi / 16.0):
            if lo < c - d < hi:
                edges.add(c - d)
    edges = np.array(sorted(edges))
    gx, gw = _GL16
    cm = 0.5 * (edges[:-1] + edges[1:])
    hm = 0.5 * (edges[1:] - edges[:-1])
    th = (cm[:, None] + hm[:, None] * gx[None, :]).ravel()
    wt = (hm[:, None] * gw[None, :]).ravel()
    return th, wt


def _radial_power_indef(a, b, z):
    """int_0^z rho^{a+1} (1 + rho^2)^b drho, vectorized over z via graded panels."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    frac = np.geomspace(1e-12, 1.0, 28)
    edges = z[:, None] * frac[None, :]
    gx, gw = _GL16
    cm = 0.5 * (edges[:, :-1] + edges[:, 1:])
    hm = 0.5 * (edges[:, 1:] - edges[:, :-1])
    nodes = cm[:, :, None] + hm[:, :, None] * gx[None, None, :]
    wts = hm[:, :, None] * gw[None, None, :]
    vals = nodes ** (a + 1.0) * (1.0 + nodes * nodes) ** b
    main = (vals * wts).sum(axis=(1, 2))
    # the [0, z*1e-12] sliver, to leading order rho^{a+1}
    sliver = (z * 1e-12) ** (a + 2.0) / (a + 2.0)
    return main + sliver


def _ball_measure_2d(spec, centers, radii):
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    out = np.empty(len(radii))
    p = spec.params
    for i, r in enumerate(radii):
        cx, cy = centers[i] if centers.shape[0] > 1 else centers[0]
        dist = np.hypot(cx, cy)
        if spec.family == "constant":
            out[i] = p["c"] * np.pi * r * r
        elif spec.family == "power" and dist == 0.0:
            a = p["a"]
            out[i] = 2 * np.pi * r ** (a + 2.0) / (a + 2.0)
        elif spec.family == "power":
            a = p["a"]
            th, wt = _theta_nodes(dist, r)
            lo, hi = _disk_chord(dist, r, th)
            vals = (hi ** (a + 2.0) - lo ** (a + 2.0)) / (a + 2.0)
            out[i] = float(np.dot(vals, wt))
        elif spec.family == "polypower" and dist < 2.0 * r:
            a, b = p["a"], p["b"]
            th, wt = _theta_nodes(dist, r)
            lo, hi = _disk_chord(dist, r, th)
            vals = _radial_power_indef(a, b, hi) - _radial_power_indef(a, b, lo)
            out[i] = float(np.dot(vals, wt))
        else:
            out[i] = _polar_quad_2d(spec, (cx, cy), r)
    return out


def _polar_quad_2d(spec, center, r, fn=None, nodes=48):
    """Polar quadrature of fn(x)*w(x) over the disk around ``center``."""
    glx, glw = np.polynomial.legendre.leggauss(nodes)
    rho = 0.5 * r * (glx + 1.0)
    wr = 0.5 * r * glw
    th = (np.arange(_THETA_N) + 0.5) * (2 * np.pi / _THETA_N)
    ct, st = np.cos(th), np.sin(th)
    px = center[0] + rho[:, None] * ct[None, :]
    py = center[1] + rho[:, None] * st[None, :]
    pts = np.stack([px.ravel(), py.ravel()], axis=1)
    w = _eval_weight_2d(spec, pts).reshape(px.shape)
    if fn is not None:
        w = w * fn(pts).reshape(px.shape)
    return float((w.sum(axis=1) * (2 * np.pi / _THETA_N) * rho * wr).sum())


def log_ball_mean(spec: WeightSpec, q: BallQuery, floor=DENSITY_FLOOR):
    """Mean over the ball of log w (exact log|x| antiderivatives for powers)."""
    return float(log_ball_mean_many(spec, [q.center], [q.radius], floor)[0])


def log_ball_mean_many(spec, centers, radii, floor=DENSITY_FLOOR):
    radii = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    if spec.n == 1:
        centers = np.atleast_1d(np.asarray(centers, dtype=np.float64))
        fam, p0, p1, p2, gx, gv = spec.accel_args()
        out = accel.log_ball_mean_batch(fam, p0, p1, p2, gx, gv, centers, radii, floor)
        if np.any(np.isnan(out)):
            raise OutOfDomainError("ball leaves the sampled grid hull")
        return out
    return _log_ball_mean_2d(spec, centers, radii)


def _log_ball_mean_2d(spec, centers, radii):
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    out = np.empty(len(radii))
    p = spec.params
    for i, r in enumerate(radii):
        cx, cy = centers[i] if centers.shape[0] > 1 else centers[0]
        dist = np.hypot(cx, cy)
        area = np.pi * r * r
        if spec.family == "constant":
            out[i] = np.log(p["c"])
            continue
        if spec.family in ("power", "polypower"):
            a = p["a"]
            th, wt = _theta_nodes(dist, r)
            lo, hi = _disk_chord(dist, r, th)
            # exact along rays: int rho log rho drho = rho^2/2 (log rho - 1/2)
            def prim(z):
                zz = np.where(z > 0, z, 1.0)
                return 0.5 * z * z * (np.log(zz) - 0.5)

            log_part = a * float(np.dot(prim(hi) - prim(lo), wt))
            rest = 0.0
            if spec.family == "polypower":
                rest = p["b"] * _polar_quad_2d(
                    WeightSpec.constant(1.0, n=2), (cx, cy), r,
                    fn=lambda pts: np.log1p(pts[:, 0] ** 2 + pts[:, 1] ** 2))
            out[i] = (log_part + rest) / area
        elif spec.family == "plateau":
            val = _polar_quad_2d(
                WeightSpec.constant(1.0, n=2), (cx, cy), r,
                fn=lambda pts: np.log(_eval_weight_2d(spec, pts)))
            out[i] = val / area
        else:
            raise OutOfDomainError("grid weights are n=1 only")
    return out


def segment_measure(spec: WeightSpec, lo, hi):
    """w([lo, hi]) for n=1 weights (used by interval unions in level-set checks)."""
    if spec.n != 1:
        raise ValueError("segment_measure is n=1 only")
    c = 0.5 * (np.asarray(lo, dtype=np.float64) + np.asarray(hi, dtype=np.float64))
    r = 0.5 * (np.asarray(hi, dtype=np.float64) - np.asarray(lo, dtype=np.float64))
    return ball_measure_many(spec, c, r)


# ---------------------------------------------------------------------------
# doubling sweeps
# ---------------------------------------------------------------------------

def _center_lattice(spec, region, count):
    lo, hi = region
    if spec.n == 1:
        return np.linspace(lo, hi, count)
    side = max(2, int(np.sqrt(count)))
    g = np.linspace(lo, hi, side)
    gx, gy = np.meshgrid(g, g)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def _log_radii(scale_range, count):
    r0, r1 = scale_range
    if not (r0 > 0 and r1 >= r0):
        raise ValueError("scale range must be positive and ordered")
    return np.geomspace(r0, r1, count)


def doubling_constant(spec: WeightSpec, region=(-2.0, 2.0), scale_range=(1 / 16, 4.0),
                      centers=64, radii=32, modulus_points=8):
    """Lower estimate of sup w(B(x,2r))/w(B(x,r)) over a lattice-by-log-radii family."""
    xs = _center_lattice(spec, region, centers)
    rs = _log_radii(scale_range, radii)
    if spec.n == 1:
        X, R = np.meshgrid(xs, rs, indexing="ij")
        Xf, Rf = X.ravel(), R.ravel()
    else:
        Xf = np.repeat(xs, rs.size, axis=0)
        Rf = np.tile(rs, len(xs))
    num = ball_measure_many(spec, Xf, 2.0 * Rf)
    den = ball_measure_many(spec, Xf, Rf)
    ratio = num / den
    k = int(np.argmax(ratio))
    best = float(ratio[k])
    witness = BallQuery(Xf[k] if spec.n == 1 else tuple(Xf[k]), float(Rf[k]))
    ratios_a = np.geomspace(1.0 + 1e-3, 2.0, modulus_points)
    samples = [(float(a), float(np.max(ball_measure_many(spec, Xf, a * Rf) / den)))
               for a in ratios_a]
    return DoublingProfile(best, samples, witness, Xf.size if spec.n == 1 else len(Xf))


def annulus_modulus(spec: WeightSpec, a, region=(-2.0, 2.0), scale_range=(1 / 16, 4.0),
                    centers=64, radii=32):
    """Empirical thin-annulus modulus F(a) = sup w(B(x, a s))/w(B(x, s))."""
    if not 1.0 < a <= 2.0:
        raise ValueError("annulus ratio must lie in (1, 2]")
    xs = _center_lattice(spec, region, centers)
    rs = _log_radii(scale_range, radii)
    if spec.n == 1:
        X, R = np.meshgrid(xs, rs, indexing="ij")
        Xf, Rf = X.ravel(), R.ravel()
    else:
        Xf = np.repeat(xs, rs.size, axis=0)
        Rf = np.tile(rs, len(xs))
    return float(np.max(ball_measure_many(spec, Xf, a * Rf)
                        / ball_measure_many(spec, Xf, Rf)))


def good_doubling_deficit(spec: WeightSpec, M, region=(-2.0, 2.0),
                          scale_range=(1 / 4, 2.0), centers=5, base_radii=3,
                          inner=5, scales=7):
    """Worst |log( w(B(x,r)) s^n / (w(B(y,s)) r^n) )| over the sampled family.

    The family is: centers x on a lattice, base radii R log-spaced, y on a
    lattice in B(x, R), and s, r log-spaced in [R/M, M R].  The report
    certifies M-good doubling on the sample iff deficit <= log(1 + 1/M).
    """
    if not M > 1:
        raise ValueError("M must exceed 1")
    xs = _center_lattice(spec, region, centers)
    Rs = _log_radii(scale_range, base_radii)
    fr = np.geomspace(1.0 / M, M, scales)
    worst = 0.0
    witness = None
    n = spec.n

    def _tiled(pt, count):
        if n == 1:
            return np.full(count, pt)
        return np.tile(np.asarray(pt, dtype=np.float64)[None, :], (count, 1))

    for x in (np.atleast_1d(xs) if n == 1 else xs):
        for R in Rs:
            if n == 1:
                ys = np.linspace(x - R, x + R, inner + 2)[1:-1]
            else:
                t = np.linspace(-R, R, inner + 2)[1:-1] / np.sqrt(2.0)
                ys = np.stack([x[0] + t, x[1] + t], axis=1)
            rr = R * fr
            log_mass_x = np.log(ball_measure_many(spec, _tiled(x, scales), rr))
            for y in ys:
                log_mass_y = np.log(ball_measure_many(spec, _tiled(y, scales), rr))
                # entry [i, j]: r = rr[i], s = rr[j]
                lr = log_mass_x[:, None] + n * np.log(rr)[None, :] \
                    - log_mass_y[None, :] - n * np.log(rr)[:, None]
                k = int(np.argmax(np.abs(lr)))
                ki, kj = divmod(k, scales)
                if abs(lr[ki, kj]) > worst:
                    worst = float(abs(lr[ki, kj]))
                    witness = (x, float(R), y, float(rr[kj]), float(rr[ki]))
    n_centers = len(np.atleast_1d(xs)) if n == 1 else len(xs)
    return GoodDoublingReport(float(M), worst, witness,
                              n_centers * len(Rs) * inner * scales * scales)


def doubling_upper_bound(spec: WeightSpec):
    """Crude analytic upper bound on the doubling constant, for tail estimates."""
    n = spec.n
    p = spec.params
    if spec.family == "constant":
        return 2.0 ** n
    if spec.family == "power":
        return 2.0 ** (n + max(p["a"], 0.0))
    if spec.family == "polypower":
        return 2.0 ** (n + max(p["a"], 0.0) + 2.0 * abs(p["b"]))
    if spec.family == "plateau":
        e = abs(p["eps"])
        return 2.0 ** n * (1.0 + e) / (1.0 - e)
    gv = spec.params["densities"]
    return 2.0 ** n * float(np.max(gv) / np.min(gv))
