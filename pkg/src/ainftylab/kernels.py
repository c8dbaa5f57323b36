"""The fixed special kernels: Gaussian, indicators, and smooth bumps.

All kernels are radial.  The reference bump ``varphi`` is realized as the
normalized convolution of the indicator of B(0, 3/2) with a standard
mollifier at scale 1/4: it is C^inf, supported in B(0, 7/4) (inside B(0,2)),
constant on B(0, 5/4) (so flat on the unit ball), radially non-increasing,
and has unit L^1 mass by construction.  The eta-bump is the convolution of
the indicator of B(0, 1+eta/2) with varphi at scale eta/4: identically 1 on
the unit ball and supported in B(0, 1+eta).

For n=1 both bumps reduce to differences of the mollifier CDF, which we
tabulate once on a dense grid; values and exact derivatives are stored as
radial tables consumed by the quadrature backends.  For n=2 the radial
profiles are built by polar quadrature of the same convolutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ainftylab import accel

INV_SQRT_PI = accel.INV_SQRT_PI

_MOLL_N = 32769
_TABLE_N = 4097

VARPHI_FLAT = 1.25   # varphi is constant inside this radius
VARPHI_SUP = 1.75    # and vanishes outside this one


def gauss(t, n=1):
    """Heat kernel pi^{-n/2} exp(-|t|^2); t is |t| or a signed 1-D point."""
    t = np.asarray(t, dtype=np.float64)
    return np.pi ** (-n / 2.0) * np.exp(-t * t)


def gauss_grad_1d(t):
    """psi = phi' in 1-D: -2 t phi(t); odd, mean zero."""
    t = np.asarray(t, dtype=np.float64)
    return -2.0 * t * gauss(t, 1)


def mollifier(u):
    """Standard bump exp(-1/(1-u^2)) on (-1,1), normalized to unit 1-D mass."""
    return _moll_norm() * _moll_raw(u)


def _moll_raw(u):
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


@lru_cache(maxsize=1)
def _moll_norm():
    xs = np.linspace(-1.0, 1.0, _MOLL_N)
    vals = _moll_raw(xs)
    from scipy.integrate import simpson

    return 1.0 / simpson(vals, x=xs)


@lru_cache(maxsize=1)
def _moll_cdf_table():
    """(grid, CDF) of the normalized mollifier on [-1, 1]."""
    xs = np.linspace(-1.0, 1.0, _MOLL_N)
    vals = mollifier(xs)
    h = xs[1] - xs[0]
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (vals[:-1] + vals[1:]) * h)))
    cdf /= cdf[-1]
    return xs, cdf


def mollifier_cdf(u):
    xs, cdf = _moll_cdf_table()
    return np.interp(np.asarray(u, dtype=np.float64), xs, cdf, left=0.0, right=1.0)


def varphi_1d(t):
    """Reference bump in 1-D: (1_{[-3/2,3/2]} * m_{1/4})(t) / 3."""
    t = np.asarray(t, dtype=np.float64)
    return (mollifier_cdf(4.0 * (t + 1.5)) - mollifier_cdf(4.0 * (t - 1.5))) / 3.0


def varphi_grad_1d(t):
    """Exact derivative of varphi in 1-D."""
    t = np.asarray(t, dtype=np.float64)
    return (4.0 / 3.0) * (mollifier(4.0 * (t + 1.5)) - mollifier(4.0 * (t - 1.5)))


@lru_cache(maxsize=1)
def _varphi_cdf_table():
    """Antiderivative of varphi on a dense grid of [-2, 2]."""
    xs = np.linspace(-2.0, 2.0, _MOLL_N)
    vals = varphi_1d(xs)
    h = xs[1] - xs[0]
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (vals[:-1] + vals[1:]) * h)))
    cdf /= cdf[-1]  # unit total mass by construction; renormalize the table error away
    return xs, cdf


def varphi_cdf(u):
    xs, cdf = _varphi_cdf_table()
    return np.interp(np.asarray(u, dtype=np.float64), xs, cdf, left=0.0, right=1.0)


def eta_bump_1d(t, eta):
    """(1_{[-b, b]} * varphi_{eta/4})(t), b = 1 + eta/2; equals 1 on [-1, 1]."""
    t = np.asarray(t, dtype=np.float64)
    b = 1.0 + 0.5 * eta
    d = 0.25 * eta
    return varphi_cdf((t + b) / d) - varphi_cdf((t - b) / d)


def eta_bump_grad_1d(t, eta):
    t = np.asarray(t, dtype=np.float64)
    b = 1.0 + 0.5 * eta
    d = 0.25 * eta
    return (varphi_1d((t + b) / d) - varphi_1d((t - b) / d)) / d


def capped_gauss_cap(kappa, n=1):
    """Height cap of the truncated heat kernel; requires kappa > pi^{n/2}."""
    cap = np.pi ** (-n / 2.0) - 1.0 / kappa
    if cap <= 0:
        raise ValueError("kappa too small for a positive cap")
    return cap


def capped_gauss_kink(kappa, n=1):
    """|t| where the Gaussian crosses the cap."""
    cap = capped_gauss_cap(kappa, n)
    return float(np.sqrt(-np.log(cap * np.pi ** (n / 2.0))))


# ---------------------------------------------------------------------------
# radial tables consumed by accel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialTable:
    """Uniform radial table (value + exact derivative) with quadrature hints."""

    support: float
    step: float
    values: np.ndarray
    derivs: np.ndarray
    seg_edges: np.ndarray   # feature radii: 0, ..., support
    seg_wmax: np.ndarray    # panel-width cap per radial band
    mass_1d: float          # L^1 mass of the even 1-D profile


@lru_cache(maxsize=None)
def varphi_table(n=1) -> RadialTable:
    if n == 1:
        rho = np.linspace(0.0, VARPHI_SUP, _TABLE_N)
        vals = varphi_1d(rho)
        ders = varphi_grad_1d(rho)
        mass = 1.0
    else:
        rho, vals, ders = _radial_profile_2d(1.5, 0.25, VARPHI_SUP, normalize=True)
        mass = 1.0
    return RadialTable(
        support=VARPHI_SUP,
        step=rho[1] - rho[0],
        values=np.ascontiguousarray(vals),
        derivs=np.ascontiguousarray(ders),
        seg_edges=np.array([0.0, VARPHI_FLAT, VARPHI_SUP]),
        seg_wmax=np.array([0.25, 1.0 / 16.0]),
        mass_1d=mass,
    )


@lru_cache(maxsize=None)
def eta_bump_table(eta, n=1) -> RadialTable:
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    sup = 1.0 + eta
    if n == 1:
        rho = np.linspace(0.0, sup, _TABLE_N)
        vals = eta_bump_1d(rho, eta)
        ders = eta_bump_grad_1d(rho, eta)
        h = rho[1] - rho[0]
        mass = 2.0 * float(np.trapezoid(vals, dx=h))
    else:
        vt = varphi_table(2)
        rho, vals, ders = _radial_profile_2d(
            1.0 + 0.5 * eta, 0.25 * eta, sup, normalize=False,
            moll_table=(vt.step, vt.values, vt.support))
        mass = 2.0 * np.pi * float(np.trapezoid(vals * rho, dx=rho[1] - rho[0]))
    return RadialTable(
        support=sup,
        step=rho[1] - rho[0],
        values=np.ascontiguousarray(vals),
        derivs=np.ascontiguousarray(ders),
        seg_edges=np.array([0.0, 1.0, sup]),
        seg_wmax=np.array([0.25, max(eta / 8.0, 1e-3)]),
        mass_1d=mass,
    )


def _radial_profile_2d(ind_radius, moll_scale, sup, normalize, moll_table=None):
    """Radial profile of (1_{B(0,R)} * m_scale) in 2-D.

    ``moll_table`` switches the mollifier from the standard bump to a radial
    table (used to build the eta-bump from varphi itself).  With
    ``normalize`` the profile is scaled to unit 2-D mass; otherwise the raw
    convolution against a unit-mass mollifier is returned (equals 1 at 0).
    """
    nr = 513
    rho = np.linspace(0.0, sup, nr)
    glx, glw = np.polynomial.legendre.leggauss(32)
    moll_sup = 1.0 if moll_table is None else moll_table[2]
    reach = moll_scale * moll_sup
    sig = 0.5 * reach * (glx + 1.0)
    wsig = 0.5 * reach * glw
    if moll_table is None:
        mvals = _moll2_norm() * _moll_raw(sig / moll_scale) / moll_scale ** 2
    else:
        step, tab, tsup = moll_table
        u = sig / moll_scale
        mvals = np.interp(u, np.arange(tab.size) * step, tab) / moll_scale ** 2
        mvals[u > tsup] = 0.0
    prof = np.empty(nr)
    for i, p in enumerate(rho):
        if p == 0.0:
            theta = np.where(sig <= ind_radius, 2.0 * np.pi, 0.0)
        else:
            c = (p * p + sig * sig - ind_radius * ind_radius) / (2.0 * p * sig)
            theta = 2.0 * np.arccos(np.clip(c, -1.0, 1.0))
        prof[i] = float(np.sum(mvals * theta * sig * wsig))
    if normalize:
        mass = 2.0 * np.pi * np.trapezoid(prof * rho, dx=rho[1] - rho[0])
        prof = prof / mass
    else:
        # the raw convolution equals 1 at the origin exactly; pin the flat core
        prof = prof / prof[0]
    ders = np.gradient(prof, rho)
    ders[0] = 0.0
    return rho, prof, ders


@lru_cache(maxsize=1)
def _moll2_norm():
    """Normalization of the 2-D radial mollifier exp(-1/(1-|x|^2))."""
    glx, glw = np.polynomial.legendre.leggauss(64)
    r = 0.5 * (glx + 1.0)
    w = 0.5 * glw
    val = 2.0 * np.pi * float(np.sum(_moll_raw(r) * r * w))
    return 1.0 / val


GAUSS_SEG = np.array([0.0, accel.KAPPA_DEFAULT])
GAUSS_WMAX = np.array([accel.W_GAUSS])


def capped_gauss_segments(kappa, n=1):
    kink = capped_gauss_kink(kappa, n)
    return np.array([0.0, kink, kappa]), np.array([0.25, accel.W_GAUSS])
