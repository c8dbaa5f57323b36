"""Properties of the fixed special kernels and their radial tables."""

import numpy as np
import pytest

from ainftylab import kernels


def test_gauss_unit_mass():
    xs = np.linspace(-10, 10, 200001)
    assert np.trapezoid(kernels.gauss(xs, 1), xs) == pytest.approx(1.0, abs=1e-12)


def test_gauss_grad_odd_mean_zero():
    xs = np.linspace(-10, 10, 200001)
    psi = kernels.gauss_grad_1d(xs)
    assert np.allclose(psi, -psi[::-1])
    assert np.trapezoid(psi, xs) == pytest.approx(0.0, abs=1e-14)


def test_varphi_flat_support_mass():
    # constant on the unit ball (flat out to 5/4), supported inside B(0, 2)
    t = np.linspace(0.0, 1.24, 200)
    v = kernels.varphi_1d(t)
    assert np.max(np.abs(v - v[0])) < 1e-14
    assert v[0] == pytest.approx(1.0 / 3.0, rel=1e-10)
    assert kernels.varphi_1d(np.array([1.76, 1.9, 2.0])).max() == 0.0
    xs = np.linspace(-2, 2, 100001)
    assert np.trapezoid(kernels.varphi_1d(xs), xs) == pytest.approx(1.0, abs=1e-9)


def test_varphi_radially_nonincreasing():
    t = np.linspace(0.0, 1.75, 2000)
    v = kernels.varphi_1d(t)
    assert np.all(np.diff(v) <= 1e-15)


def test_varphi_gradient_matches_finite_difference():
    # the CDF table is piecewise linear at ~6e-5 resolution, so the finite
    # difference needs a step well above that
    t = np.linspace(0.1, 1.7, 37)
    h = 1e-3
    fd = (kernels.varphi_1d(t + h) - kernels.varphi_1d(t - h)) / (2 * h)
    assert np.allclose(kernels.varphi_grad_1d(t), fd, atol=2e-4)


@pytest.mark.parametrize("eta", [0.1, 0.25, 0.5])
def test_eta_bump_properties(eta):
    t = np.linspace(0.0, 1.0, 101)
    v = kernels.eta_bump_1d(t, eta)
    assert np.max(np.abs(v - 1.0)) < 1e-12          # identically 1 on the unit ball
    assert kernels.eta_bump_1d(np.array([1.0 + eta + 1e-9]), eta)[0] == 0.0
    tt = np.linspace(0.0, 1.0 + eta, 4000)
    vv = kernels.eta_bump_1d(tt, eta)
    assert np.all(np.diff(vv) <= 1e-12)             # radially non-increasing
    xs = np.linspace(-(1 + eta), 1 + eta, 100001)
    mass = np.trapezoid(kernels.eta_bump_1d(xs, eta), xs)
    assert mass == pytest.approx(2.0 + eta, rel=1e-8)


def test_eta_bump_table_consistency():
    tab = kernels.eta_bump_table(0.25, 1)
    assert tab.support == pytest.approx(1.25)
    assert tab.mass_1d == pytest.approx(2.25, rel=1e-7)
    rho = np.arange(tab.values.size) * tab.step
    assert np.allclose(tab.values, kernels.eta_bump_1d(rho, 0.25), atol=1e-12)


def test_capped_gauss_kink():
    kappa = 8.0
    cap = kernels.capped_gauss_cap(kappa, 1)
    tk = kernels.capped_gauss_kink(kappa, 1)
    assert kernels.gauss(tk, 1) == pytest.approx(cap, rel=1e-12)
    with pytest.raises(ValueError):
        kernels.capped_gauss_cap(1.5, 1)  # cap would be non-positive


def test_varphi_2d_table():
    tab = kernels.varphi_table(2)
    rho = np.arange(tab.values.size) * tab.step
    # unit 2-D mass and flat core
    mass = 2 * np.pi * np.trapezoid(tab.values * rho, rho)
    assert mass == pytest.approx(1.0, rel=1e-6)
    core = tab.values[rho < 1.2]
    assert np.max(np.abs(core - core[0])) < 1e-8
    assert np.all(np.diff(tab.values) <= 1e-10)


def test_eta_bump_2d_table():
    tab = kernels.eta_bump_table(0.25, 2)
    rho = np.arange(tab.values.size) * tab.step
    core = tab.values[rho < 0.99]
    assert np.max(np.abs(core - 1.0)) < 1e-6
    assert tab.values[-1] == pytest.approx(0.0, abs=1e-10)
