"""Divergence-form elliptic solver on a half-plane box and the measure at infinity.

The domain is [y_lo, y_hi] x (0, H] with a 2x2 coefficient field A(y, s),
elliptic with constant Lambda and equal to the identity outside a compact
set.  The discretization is cell-centered conservative finite volumes:
harmonic face averages for the diagonal coefficients, arithmetic averages
with 4-point tangential differences for the off-diagonal ones, and
Dirichlet data imposed through boundary-face fluxes (tangential stencils use
ghost values 2*data - cell).  Off-diagonal entries must vanish on cells
adjacent to the box walls (automatic for identity-outside-compact fields
whose support avoids the walls; validated).  Solves use a sparse LU factored
once per operator and reused across right-hand sides.

The positive solution of the transpose equation vanishing on the boundary
row, normalized at (0, 1), is the Green function with pole at infinity up to
the artificial-box truncation; because A is the identity far out, the exact
far-field profile is the linear function s, which we impose on the side and
top walls.  A ladder of normalized pole solutions G((0, 2^k), .) supplies
the convergence diagnostic.  The boundary density of the measure at
infinity is the discrete conormal A^T grad U . e_s on the bottom row,
cross-validated against the volume pairing (Riesz formula) for a battery of
boundary bumps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ainftylab import accel
from ainftylab.errors import ConvergenceError, SolverError
from ainftylab.weights import WeightSpec, ball_measure_many

DEFAULT_ELLIPTICITY_TOL = 1e-9


@dataclass
class CoefficientField:
    """Grid-sampled 2x2 elliptic matrix on [y_lo, y_hi] x (0, height]."""

    y_lo: float
    y_hi: float
    height: float
    a11: np.ndarray      # (ny, ns) at cell centers
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray
    ellipticity: float
    analytic: object = None       # optional callable (y, s) -> (a11, a12, a21, a22)
    identity_margin: float = 0.0  # A == I within this distance of the side/top walls
    _lu: dict = field(default_factory=dict, repr=False)

    @property
    def ny(self):
        return self.a11.shape[0]

    @property
    def ns(self):
        return self.a11.shape[1]

    @property
    def hy(self):
        return (self.y_hi - self.y_lo) / self.ny

    @property
    def hs(self):
        return self.height / self.ns

    @property
    def ycenters(self):
        return self.y_lo + (np.arange(self.ny) + 0.5) * self.hy

    @property
    def scenters(self):
        return (np.arange(self.ns) + 0.5) * self.hs

    def validate(self, tol=DEFAULT_ELLIPTICITY_TOL):
        """Lambda-ellipticity sample-wise, plus the wall contracts."""
        lam = self.ellipticity
        sym12 = 0.5 * (self.a12 + self.a21)
        tr = self.a11 + self.a22
        det = self.a11 * self.a22 - sym12 * sym12
        disc = np.sqrt(np.maximum(0.25 * tr * tr - det, 0.0))
        lam_min = 0.5 * tr - disc
        if np.min(lam_min) < 1.0 / lam - tol:
            raise ValueError("field is not Lambda-elliptic: lower bound fails")
        norm = np.sqrt(self.a11 ** 2 + self.a12 ** 2 + self.a21 ** 2 + self.a22 ** 2)
        if np.max(norm) > lam * np.sqrt(2.0) + tol:
            raise ValueError("field is not Lambda-elliptic: upper bound fails")
        ring = np.zeros((self.ny, self.ns), dtype=bool)
        ring[0, :] = ring[-1, :] = True
        ring[:, 0] = ring[:, -1] = True
        if np.max(np.abs(self.a12[ring])) > 1e-12 or np.max(np.abs(self.a21[ring])) > 1e-12:
            raise ValueError("off-diagonal entries must vanish on wall-adjacent cells")
        return True

    def to_npz(self, path):
        np.savez(path, y_lo=self.y_lo, y_hi=self.y_hi, height=self.height,
                 a11=self.a11, a12=self.a12, a21=self.a21, a22=self.a22,
                 ellipticity=self.ellipticity)

    @staticmethod
    def from_npz(path):
        d = np.load(path)
        return CoefficientField(float(d["y_lo"]), float(d["y_hi"]), float(d["height"]),
                                d["a11"], d["a12"], d["a21"], d["a22"],
                                float(d["ellipticity"]))

    @staticmethod
    def from_json(text):
        d = json.loads(text) if isinstance(text, str) else text
        kind = d.get("kind", "identity")
        grid = d.get("grid", {})
        kw = dict(ny=int(grid.get("ny", 256)), ns=int(grid.get("ns", 256)),
                  y_extent=float(grid.get("y_extent", 8.0)),
                  height=float(grid.get("height", 16.0)))
        if kind == "identity":
            return identity_field(**kw)
        if kind == "bump":
            p = d.get("params", {})
            return bump_field(float(p.get("eps", 0.1)),
                              center=tuple(p.get("center", (0.0, 1.0))),
                              radius=float(p.get("radius", 0.75)), **kw)
        if kind == "npz":
            return CoefficientField.from_npz(d["path"])
        raise ValueError(f"unknown coefficient field kind {kind!r}")


def identity_field(ny=256, ns=256, y_extent=8.0, height=16.0):
    shape = (ny, ns)
    one = np.ones(shape)
    zero = np.zeros(shape)

    def analytic(y, s):
        y = np.asarray(y, dtype=np.float64)
        return np.ones_like(y), np.zeros_like(y), np.zeros_like(y), np.ones_like(y)

    return CoefficientField(-y_extent, y_extent, height, one, zero, zero, one.copy(),
                            1.0, analytic=analytic, identity_margin=0.5)


def bump_field(eps, center=(0.0, 1.0), radius=0.75, ny=256, ns=256,
               y_extent=8.0, height=16.0):
    """A = (1 + eps*b) I with b a smooth bump of the given center and radius."""
    if not -0.5 < eps < 1.0:
        raise ValueError("bump amplitude out of the supported range")
    cy, cs = center

    def gamma(y, s):
        d = np.hypot(np.asarray(y, dtype=np.float64) - cy,
                     np.asarray(s, dtype=np.float64) - cs) / radius
        return 1.0 + eps * accel.bump(d)

    def analytic(y, s):
        g = gamma(y, s)
        z = np.zeros_like(g)
        return g, z, z, g.copy()

    f = identity_field(ny, ns, y_extent, height)
    Y, S = np.meshgrid(f.ycenters, f.scenters, indexing="ij")
    g = gamma(Y, S)
    lam = max(1.0 + max(eps, 0.0), 1.0 / (1.0 + min(eps, 0.0)))
    margin = min(y_extent - (abs(cy) + radius), height - (cs + radius))
    return CoefficientField(f.y_lo, f.y_hi, f.height, g, np.zeros_like(g),
                            np.zeros_like(g), g.copy(), lam, analytic=analytic,
                            identity_margin=max(margin, 0.0))


# ---------------------------------------------------------------------------
# assembly and solve
# ---------------------------------------------------------------------------

class _Assembly:
    """Sparse operator plus boundary-data-to-rhs maps for one coefficient field."""

    def __init__(self, fld: CoefficientField, transpose=False):
        self.field = fld
        self.transpose = transpose
        ny, ns = fld.ny, fld.ns
        hy, hs = fld.hy, fld.hs
        N = ny * ns
        a11, a12, a21, a22 = fld.a11, fld.a12, fld.a21, fld.a22
        if transpose:
            a12, a21 = a21, a12

        def harm(a, b):
            return 2.0 * a * b / (a + b)

        def idx(i, j):
            return i * ns + j

        rows, cols, vals = [], [], []
        bnd = {name: ([], [], []) for name in ("bottom", "top", "left", "right")}

        def add(r, c, v):
            rows.append(np.asarray(r).ravel())
            cols.append(np.asarray(c).ravel())
            vals.append(np.asarray(v).ravel())

        def add_bnd(name, r, c, v):
            br, bc, bv = bnd[name]
            br.append(np.asarray(r).ravel())
            bc.append(np.asarray(c).ravel())
            bv.append(np.asarray(v).ravel())

        # --- diagonal two-point fluxes ------------------------------------
        iL, jF = np.meshgrid(np.arange(ny - 1), np.arange(ns), indexing="ij")
        v11 = harm(a11[:-1, :], a11[1:, :])
        t = v11 * hs / hy
        L, R = idx(iL, jF), idx(iL + 1, jF)
        add(L, L, t)
        add(L, R, -t)
        add(R, R, t)
        add(R, L, -t)

        iC, jB = np.meshgrid(np.arange(ny), np.arange(ns - 1), indexing="ij")
        h22 = harm(a22[:, :-1], a22[:, 1:])
        t = h22 * hy / hs
        B, T = idx(iC, jB), idx(iC, jB + 1)
        add(B, B, t)
        add(B, T, -t)
        add(T, T, t)
        add(T, B, -t)

        jj_all = np.arange(ns)
        ii_all = np.arange(ny)
        tl = a11[0, :] * hs / (hy / 2.0)
        c0 = idx(np.zeros(ns, dtype=int), jj_all)
        add(c0, c0, tl)
        add_bnd("left", c0, jj_all, -tl)
        tr = a11[-1, :] * hs / (hy / 2.0)
        c1 = idx(np.full(ns, ny - 1), jj_all)
        add(c1, c1, tr)
        add_bnd("right", c1, jj_all, -tr)
        tb = a22[:, 0] * hy / (hs / 2.0)
        c2 = idx(ii_all, np.zeros(ny, dtype=int))
        add(c2, c2, tb)
        add_bnd("bottom", c2, ii_all, -tb)
        tt = a22[:, -1] * hy / (hs / 2.0)
        c3 = idx(ii_all, np.full(ny, ns - 1))
        add(c3, c3, tt)
        add_bnd("top", c3, ii_all, -tt)

        # --- cross terms on interior faces --------------------------------
        # vertical face (iL+1/2, jF): flux term -v12 * d_s u * hs with
        # d_s u = (u_{.,j+1} - u_{.,j-1}) averaged over the two columns / (4 hs)
        v12 = 0.5 * (a12[:-1, :] + a12[1:, :])
        rowL, rowR = idx(iL, jF), idx(iL + 1, jF)
        for di in (0, 1):
            colI = iL + di
            for jshift in (1, -1):
                jj = jF + jshift
                inside = (jj >= 0) & (jj < ns)
                cf = -jshift * v12 / 4.0  # flux coefficient on u_{colI, jj}
                for row, rs in ((rowL, 1.0), (rowR, -1.0)):
                    v = rs * cf
                    add(row[inside], idx(colI, np.clip(jj, 0, ns - 1))[inside],
                        v[inside])
                    out = ~inside
                    if np.any(out):
                        # ghost value: 2*data - u at the boundary-row cell
                        add(row[out], idx(colI, jF)[out], -v[out])
                        name = "top" if jshift == 1 else "bottom"
                        add_bnd(name, row[out], colI[out], 2.0 * v[out])
        # horizontal face (iC, jB+1/2): flux term -h21 * d_y u * hy
        h21 = 0.5 * (a21[:, :-1] + a21[:, 1:])
        rowB, rowT = idx(iC, jB), idx(iC, jB + 1)
        for dj in (0, 1):
            colJ = jB + dj
            for ishift in (1, -1):
                ii2 = iC + ishift
                inside = (ii2 >= 0) & (ii2 < ny)
                cf = -ishift * h21 / 4.0
                for row, rs in ((rowB, 1.0), (rowT, -1.0)):
                    v = rs * cf
                    add(row[inside], idx(np.clip(ii2, 0, ny - 1), colJ)[inside],
                        v[inside])
                    out = ~inside
                    if np.any(out):
                        add(row[out], idx(iC, colJ)[out], -v[out])
                        name = "right" if ishift == 1 else "left"
                        add_bnd(name, row[out], colJ[out], 2.0 * v[out])

        A = sp.coo_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(N, N)).tocsc()
        self.matrix = A
        try:
            self.lu = splu(A)
        except Exception as exc:  # pragma: no cover
            raise SolverError(f"sparse factorization failed: {exc}")
        self.bmaps = {}
        for name, width in (("bottom", ny), ("top", ny), ("left", ns), ("right", ns)):
            br, bc, bv = bnd[name]
            self.bmaps[name] = sp.coo_matrix(
                (np.concatenate(bv), (np.concatenate(br), np.concatenate(bc))),
                shape=(N, width)).tocsr()

    def solve(self, rhs=None, bottom=None, top=None, left=None, right=None):
        f = self.field
        ny, ns = f.ny, f.ns
        b = np.zeros(ny * ns)
        if rhs is not None:
            vals = rhs(f.ycenters[:, None], f.scenters[None, :]) if callable(rhs) else rhs
            b += np.asarray(vals, dtype=np.float64).reshape(ny * ns) * f.hy * f.hs

        def data(fun, coords, size):
            if fun is None:
                return np.zeros(size)
            if callable(fun):
                return np.asarray(fun(coords), dtype=np.float64)
            if np.isscalar(fun):
                return np.full(size, float(fun))
            return np.asarray(fun, dtype=np.float64)

        for name, fun, coords, size in (
                ("bottom", bottom, f.ycenters, ny), ("top", top, f.ycenters, ny),
                ("left", left, f.scenters, ns), ("right", right, f.scenters, ns)):
            d = data(fun, coords, size)
            if np.any(d):
                b -= self.bmaps[name] @ d
        x = self.lu.solve(b)
        res = float(np.linalg.norm(self.matrix @ x - b)
                    / max(np.linalg.norm(b), 1e-300))
        if not np.isfinite(res) or res > 1e-8:
            raise SolverError("large residual after sparse solve", residual=res)
        return x.reshape(ny, ns)


def _assembly(fld: CoefficientField, transpose=False) -> _Assembly:
    key = bool(transpose)
    if key not in fld._lu:
        fld._lu[key] = _Assembly(fld, transpose)
    return fld._lu[key]


def solve_dirichlet(fld: CoefficientField, rhs=None, bottom=None, top=None,
                    left=None, right=None, transpose=False):
    """Solve -div(A grad u) = rhs with Dirichlet data on the box boundary."""
    fld.validate()
    return _assembly(fld, transpose).solve(rhs, bottom, top, left, right)


# ---------------------------------------------------------------------------
# Green function at infinity and the boundary measure
# ---------------------------------------------------------------------------

@dataclass
class GreenAtInfinity:
    U: np.ndarray            # (ny, ns) normalized so U(0, 1) = 1
    ys: np.ndarray
    ss: np.ndarray
    ratio_gaps: list         # max |u_{k+1} - u_k| on the window, per ladder step
    pole_heights: list
    window: tuple

    def value_at(self, y, s):
        return _bilinear(self.ys, self.ss, self.U, y, s)


def _bilinear(ys, ss, F, y, s):
    i = int(np.clip(np.searchsorted(ys, y) - 1, 0, ys.size - 2))
    j = int(np.clip(np.searchsorted(ss, s) - 1, 0, ss.size - 2))
    ty = (y - ys[i]) / (ys[i + 1] - ys[i])
    tj = (s - ss[j]) / (ss[j + 1] - ss[j])
    return float(F[i, j] * (1 - ty) * (1 - tj) + F[i + 1, j] * ty * (1 - tj)
                 + F[i, j + 1] * (1 - ty) * tj + F[i + 1, j + 1] * ty * tj)


def green_at_infinity(fld: CoefficientField, pole_ks=(2, 3, 4),
                      window=((-2.0, 2.0), (0.0, 2.0)),
                      gap_tol=None) -> GreenAtInfinity:
    """Far-field-profile solve of the transpose equation plus the pole ladder.

    The returned U solves L^T U = 0 with U = 0 on the bottom row and the
    exact identity profile s on the artificial side/top walls, normalized to
    U(0, 1) = 1.  The ladder of normalized pole solutions
    u_k = G((0, 2^k), .) / G((0, 2^k), (0, 1)) supplies the convergence
    diagnostic; with ``gap_tol`` set, a final gap above it raises
    ConvergenceError.
    """
    fld.validate()
    asm = _assembly(fld, transpose=True)
    U = asm.solve(bottom=0.0, top=fld.height, left=lambda s: s, right=lambda s: s)
    ys, ss = fld.ycenters, fld.scenters
    norm = _bilinear(ys, ss, U, 0.0, 1.0)
    if norm <= 0:
        raise ConvergenceError("far-field solve is not positive at (0, 1)")
    U = U / norm
    if np.min(U) < -1e-12:
        raise ConvergenceError("far-field solve lost positivity")

    heights = [2.0 ** k for k in pole_ks if 2.0 ** k < fld.height / 1.5]
    wy, ws = window
    wmask = ((ys >= wy[0]) & (ys <= wy[1]))[:, None] & \
            ((ss >= ws[0]) & (ss <= ws[1]))[None, :]
    uks = []
    for h in heights:
        rhs = np.zeros((fld.ny, fld.ns))
        i = int(np.clip(np.searchsorted(ys, 0.0) - 1, 0, fld.ny - 1))
        j = int(np.clip(np.searchsorted(ss, h) - 1, 0, fld.ns - 1))
        rhs[i, j] = 1.0 / (fld.hy * fld.hs)
        G = asm.solve(rhs=rhs)
        nrm = _bilinear(ys, ss, G, 0.0, 1.0)
        uks.append(G / nrm)
    gaps = [float(np.max(np.abs((b - a)[wmask]))) for a, b in zip(uks[:-1], uks[1:])]
    if gap_tol is not None and gaps and gaps[-1] > gap_tol:
        raise ConvergenceError(f"pole ladder gap {gaps[-1]:.3g} above {gap_tol:.3g}")
    return GreenAtInfinity(U, ys, ss, gaps, heights, window)


@dataclass
class BoundaryDensity:
    ys: np.ndarray
    vals: np.ndarray
    riesz_mismatch: list
    flagged: bool

    def as_weight(self) -> WeightSpec:
        return WeightSpec.from_grid(self.ys, np.maximum(self.vals, 1e-300))

    def interval_mass(self, a, b):
        """Total mass over [a, b] (the ball-measure consistency surface)."""
        w = self.as_weight()
        return float(ball_measure_many(w, [(a + b) / 2.0], [(b - a) / 2.0])[0])


def _smoothstep5(t):
    t = np.clip(t, 0.0, 1.0)
    return 6 * t ** 5 - 15 * t ** 4 + 10 * t ** 3


def _smoothstep5_d(t):
    tc = np.clip(t, 0.0, 1.0)
    return 30 * tc ** 4 - 60 * tc ** 3 + 30 * tc ** 2


def _bump_d(u):
    """Derivative of the standard bump, computed only strictly inside (-1, 1)."""
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0 - 1e-12
    ui = u[inside]
    q = 1.0 - ui * ui
    out[inside] = np.exp(1.0 - 1.0 / q) * (-2.0 * ui / (q * q))
    return out


def elliptic_measure_infinity(fld: CoefficientField, green: GreenAtInfinity = None,
                              riesz_tol=0.02, battery=None) -> BoundaryDensity:
    """Boundary density of the measure at infinity, with Riesz cross-validation.

    Density = (A^T grad U . e_s) on the bottom row = a22(y, 0) dU/ds (the
    tangential derivative vanishes since U = 0 along the boundary),
    discretized by the same one-sided flux the solver uses.  The pairing
    route integrates -A^T grad U . grad F over the volume for
    F(y, s) = f(y) zeta(s) and must match int f d(omega) within
    ``riesz_tol`` relative for every f in the battery.
    """
    if green is None:
        green = green_at_infinity(fld)
    U = green.U
    ys, ss = green.ys, green.ss
    hy = ys[1] - ys[0]
    hs = ss[1] - ss[0]
    if fld.analytic is not None:
        a22b = np.asarray(fld.analytic(ys, np.zeros_like(ys))[3], dtype=np.float64)
    else:
        a22b = fld.a22[:, 0]
    dens = a22b * U[:, 0] / (hs / 2.0)

    if battery is None:
        battery = [(0.0, 2.0, 2.0), (1.5, 1.0, 1.5)]  # (center, half-width, zeta cut)
    Y, S = np.meshgrid(ys, ss, indexing="ij")
    dUy = np.zeros_like(U)
    dUy[1:-1, :] = (U[2:, :] - U[:-2, :]) / (2 * hy)
    dUy[0, :] = (U[1, :] - U[0, :]) / hy
    dUy[-1, :] = (U[-1, :] - U[-2, :]) / hy
    dUs = np.zeros_like(U)
    dUs[:, 1:-1] = (U[:, 2:] - U[:, :-2]) / (2 * hs)
    # quadratic through (0, 0) and the two lowest cell centers
    dUs[:, 0] = (3.0 * U[:, 0] + U[:, 1]) / (3.0 * hs)
    dUs[:, -1] = (U[:, -1] - U[:, -2]) / hs
    if fld.analytic is not None:
        A11, A12, A21, A22 = (np.asarray(a, dtype=np.float64)
                              for a in fld.analytic(Y, S))
    else:
        A11, A12, A21, A22 = fld.a11, fld.a12, fld.a21, fld.a22
    # A^T grad U
    Vy = A11 * dUy + A21 * dUs
    Vs = A12 * dUy + A22 * dUs
    mism = []
    for (c, half, cut) in battery:
        f = accel.bump((ys - c) / half)
        zeta = 1.0 - _smoothstep5(S / cut)
        dzeta = -_smoothstep5_d(S / cut) / cut
        fb = accel.bump((Y - c) / half)
        dfb = _bump_d((Y - c) / half) / half
        Fy = dfb * zeta
        Fs = fb * dzeta
        pairing = -float(((Vy * Fy + Vs * Fs) * hy * hs).sum())
        boundary = float((f * dens * hy).sum())
        mism.append(abs(pairing - boundary) / max(abs(boundary), 1e-12))
    flagged = any(m > riesz_tol for m in mism)
    return BoundaryDensity(ys.copy(), dens, mism, flagged)


# ---------------------------------------------------------------------------
# oscillation coefficients and the weak-DKP norm
# ---------------------------------------------------------------------------

def oscillation_coefficient(fld: CoefficientField, x, r, nodes=(8, 6)):
    """RMS deviation of A from its mean over the Whitney region W(x, r).

    W(x, r) = [x-r, x+r] x [r/2, r].  The mean matrix of a pointwise
    Lambda-elliptic field is itself Lambda-elliptic (the constraint set is
    convex), so the best constant elliptic matrix in L^2 is the mean; a
    defensive eigenvalue clamp covers degenerate sampled inputs.
    """
    return float(alpha2_batch(fld, np.array([x]), np.array([r]), nodes)[0])


def alpha2_batch(fld: CoefficientField, xs, rs, nodes=(8, 6)):
    """Vectorized oscillation coefficients for many Whitney regions."""
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    rs = np.atleast_1d(np.asarray(rs, dtype=np.float64))
    ny_n, ns_n = nodes
    gx, gw = np.polynomial.legendre.leggauss(ny_n)
    gy, gv = np.polynomial.legendre.leggauss(ns_n)
    # (m, ny_n, ns_n) node tensors for W(x, r) = [x-r, x+r] x [r/2, r]
    Y = xs[:, None, None] + rs[:, None, None] * gx[None, :, None] * np.ones((1, 1, ns_n))
    S = (0.75 * rs[:, None, None] + 0.25 * rs[:, None, None] * gy[None, None, :]) \
        * np.ones((1, ny_n, 1))
    W = np.outer(gw / 2.0, gv / 2.0)[None, :, :]
    comps = _sample_matrix(fld, Y, S)
    out = np.zeros(xs.size)
    means = [(c * W).sum(axis=(1, 2)) for c in comps]
    lam = fld.ellipticity
    for i in range(xs.size):
        mi = _project_elliptic([float(m[i]) for m in means], lam)
        dev = sum((c[i] - v) ** 2 for c, v in zip(comps, mi))
        out[i] = np.sqrt(max((dev * W[0]).sum(), 0.0))
    return out


def _sample_matrix(fld, Y, S):
    if fld.analytic is not None:
        return [np.asarray(a, dtype=np.float64) for a in fld.analytic(Y, S)]
    ys, ss = fld.ycenters, fld.scenters
    hy, hs = fld.hy, fld.hs
    i = np.clip(((Y - ys[0]) / hy).astype(np.int64), 0, ys.size - 2)
    j = np.clip(((S - ss[0]) / hs).astype(np.int64), 0, ss.size - 2)
    ty = np.clip((Y - ys[i]) / hy, 0.0, 1.0)
    ts = np.clip((S - ss[j]) / hs, 0.0, 1.0)
    out = []
    for arr in (fld.a11, fld.a12, fld.a21, fld.a22):
        v = (arr[i, j] * (1 - ty) * (1 - ts) + arr[i + 1, j] * ty * (1 - ts)
             + arr[i, j + 1] * (1 - ty) * ts + arr[i + 1, j + 1] * ty * ts)
        out.append(v)
    return out


def _project_elliptic(means, lam):
    """Clamp the symmetric part's eigenvalues into [1/lam, lam] if needed."""
    m11, m12, m21, m22 = means
    s12 = 0.5 * (m12 + m21)
    tr = m11 + m22
    det = m11 * m22 - s12 * s12
    disc = np.sqrt(max(0.25 * tr * tr - det, 0.0))
    lo, hi = 0.5 * tr - disc, 0.5 * tr + disc
    if lo >= 1.0 / lam - 1e-12 and hi <= lam + 1e-12:
        return means
    lo_c = min(max(lo, 1.0 / lam), lam)
    hi_c = min(max(hi, 1.0 / lam), lam)
    # rebuild the symmetric part from clamped eigenvalues, keep the skew part
    if disc > 0:
        c = (m11 - 0.5 * tr) / disc
        s = s12 / disc
    else:
        c, s = 1.0, 0.0
    mid = 0.5 * (hi_c + lo_c)
    rad = 0.5 * (hi_c - lo_c)
    n11 = mid + rad * c
    n22 = mid - rad * c
    n12 = rad * s
    skew = 0.5 * (m12 - m21)
    return [n11, n12 + skew, n12 - skew, n22]


def weak_dkp_norm(fld: CoefficientField, family=None, s_levels=48, x_nodes=24,
                  r_floor_factor=2.0 ** -10):
    """Sup over boxes of |Delta|^{-1} iint_{T_Delta} alpha_2(x, s)^2 dx ds / s."""
    if family is None:
        family = default_dkp_boxes(fld)
    best = 0.0
    witness = None
    for (c, R) in family:
        val = _dkp_box_mass(fld, c, R, s_levels, x_nodes, r_floor_factor) / (2.0 * R)
        if val > best:
            best = val
            witness = (c, R)
    return best, witness


def default_dkp_boxes(fld: CoefficientField):
    rs = [2.0 ** k for k in range(-3, 2)]
    cs = [-2.0, -1.0, 0.0, 1.0, 2.0]
    out = []
    for R in rs:
        for c in cs:
            if abs(c) + R <= fld.y_hi - 0.5 and R <= fld.height / 4.0:
                out.append((c, R))
    return out


def _dkp_box_mass(fld, c, R, s_levels, x_nodes, r_floor_factor):
    if s_levels % 2:
        s_levels += 1
    ss = np.geomspace(R * r_floor_factor, R, s_levels + 1)
    xs = c + (np.arange(x_nodes) + 0.5) / x_nodes * 2.0 * R - R
    wx = 2.0 * R / x_nodes
    X = np.tile(xs, ss.size)
    S = np.repeat(ss, xs.size)
    al2 = alpha2_batch(fld, X, S) ** 2
    # integrand against d(log s): (1/s) int alpha2^2 dx, times s
    f = al2.reshape(ss.size, xs.size).sum(axis=1) * wx
    h = np.log(ss[-1] / ss[0]) / s_levels
    simp = f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-1:2].sum()
    main = simp * h / 3.0
    return float(main + _dkp_tail(f, ss))


def _dkp_tail(f, ss):
    if f[0] <= 0 or f[1] <= 0:
        return 0.0
    p = np.log(f[1] / f[0]) / np.log(ss[1] / ss[0])
    if p < 0.25:
        return 0.0
    # f(s)/s ~ c s^{p-1}; int_0^{s0} f/s ds = f(s0)/p
    return float(f[0] / p)


# ---------------------------------------------------------------------------
# the pipeline experiment
# ---------------------------------------------------------------------------

@dataclass
class DkpRow:
    eps: float
    dkp_norm: float
    carleson_bump: float
    ainfty_minus_1: float
    ratio: float          # carleson_bump / dkp_norm

    def as_tuple(self):
        return (self.eps, self.dkp_norm, self.carleson_bump,
                self.ainfty_minus_1, self.ratio)


DKP_HEADER = ("eps", "weak_dkp_norm", "carleson_bump_norm", "ainfty_minus_1", "ratio")


def dkp_experiment(eps_list, ny=256, ns=256, y_extent=8.0, height=16.0,
                   center=(0.0, 1.0), radius=0.75, ball_family=None,
                   s_levels=48, x_nodes=48, threads=1):
    """Feed bump perturbations of the identity through the full pipeline.

    For each eps: build A = (1 + eps*b) I, compute the weak-DKP norm, solve
    for the measure at infinity, then treat its density as a weight and
    compute the bump-kernel Carleson norm and the A-infinity characteristic
    on a shared ball family.  Rows are independent and may run on a thread
    pool; results come back in the input order either way.
    """
    from ainftylab.ainfty import ainfty_constant
    from ainftylab.carleson import CarlesonBox, carleson_norm
    from ainftylab.weights import BallQuery

    if ball_family is None:
        centers = np.linspace(-2.0, 2.0, 9)
        radii = np.geomspace(0.25, 1.0, 4)
        ball_family = [BallQuery(float(x), float(r)) for r in radii for x in centers]

    def one(eps):
        if eps == 0.0:
            fld = identity_field(ny, ns, y_extent, height)
        else:
            fld = bump_field(eps, center, radius, ny, ns, y_extent, height)
        nu, _ = weak_dkp_norm(fld)
        green = green_at_infinity(fld)
        dens = elliptic_measure_infinity(fld, green)
        wspec = dens.as_weight()
        boxes = [CarlesonBox(b.center, b.radius) for b in ball_family]
        mu = carleson_norm(wspec, boxes, kernel="bump", s_levels=s_levels,
                           x_nodes=x_nodes)
        ainf = ainfty_constant(wspec, ball_family)
        ratio = mu.value / nu if nu > 0 else float("nan")
        return DkpRow(float(eps), float(nu), float(mu.value),
                      float(ainf.value - 1.0), float(ratio))

    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(one, eps_list))
    return [one(eps) for eps in eps_list]
