"""The exact box-mass decomposition: interior, flux, centered terms, residual."""

import numpy as np
import pytest

from ainftylab.fkp import (centered_log_term, error_term, flux_term,
                           identity_residual, interior_log_term)
from ainftylab.ainfty import shared_ball_family
from ainftylab.heat import heat_ball_gap
from ainftylab.weights import BallQuery, WeightSpec


def _x2_interior_exact(x, r):
    """Closed form of the interior term for w = x^2: the mean over the ball of
    log((y^2 + r^2/2)/y^2), via int log(y^2+c^2) = y log(y^2+c^2) - 2y
    + 2c arctan(y/c)."""
    c = r / np.sqrt(2.0)

    def prim_smooth(y):
        return y * np.log(y * y + c * c) - 2 * y + 2 * c * np.arctan(y / c)

    def prim_log(y):
        return 2.0 * (y * np.log(abs(y)) - y) if y != 0 else 0.0

    lo, hi = x - r, x + r
    return (prim_smooth(hi) - prim_smooth(lo) - (prim_log(hi) - prim_log(lo))) / (2 * r)


def _x2_flux_exact(x, r):
    """Closed form of the flux term for w = x^2: the time integral of
    2y/(y^2 + t/2) is 4y log((y^2 + r^2/2)/y^2)."""
    def block(y):
        return 4.0 * y * np.log((y * y + r * r / 2.0) / (y * y))

    return -(block(x + r) - block(x - r)) / (2.0 * r)


def test_interior_constant_zero():
    assert interior_log_term(WeightSpec.constant(1.0), 0.5, 1.0) == \
        pytest.approx(0.0, abs=1e-13)


def test_interior_x_squared_exact():
    got = interior_log_term(WeightSpec.power(2.0), 1.0, 0.5)
    assert got == pytest.approx(_x2_interior_exact(1.0, 0.5), rel=1e-10)
    # independent scipy oracle
    from scipy.integrate import quad

    orc = quad(lambda y: np.log((y * y + 0.125) / (y * y)), 0.5, 1.5,
               epsabs=1e-13)[0]
    assert got == pytest.approx(orc, rel=1e-10)


def test_interior_log_singularity_integrable():
    # regenerate with: quad of log(u(y,1)) (u by quadrature) - 0.1*mean log|y|
    got = interior_log_term(WeightSpec.power(0.1), 0.0, 1.0)
    assert got == pytest.approx(0.03503430557664661, rel=1e-8)


def test_flux_constant_zero():
    assert flux_term(WeightSpec.constant(1.0), 0.5, 1.0) == pytest.approx(0.0, abs=1e-13)


def test_flux_even_weight_at_origin():
    # for an even weight the two endpoint contributions coincide (the gradient
    # and the outward normal both flip sign), so the flux is twice the
    # one-endpoint value, not zero; the box identity at (0, 1) pins it.
    # scipy oracle for |x|^{1/2}: -0.51375533 (quad of the g-difference).
    got = flux_term(WeightSpec.power(0.5), 0.0, 1.0)
    assert got == pytest.approx(-0.5137553301219554, rel=1e-4)
    rep = identity_residual(WeightSpec.power(0.5), 0.0, 1.0)
    assert rep.passed
    assert abs(rep.box_term - 2.0 * rep.interior_term) > 100 * rep.residual


def test_flux_x_squared_exact():
    got = flux_term(WeightSpec.power(2.0), 1.0, 0.5)
    assert got == pytest.approx(_x2_flux_exact(1.0, 0.5), rel=1e-5)


def test_centered_constant_zero():
    assert centered_log_term(WeightSpec.constant(2.0), 0.5, 1.0) == \
        pytest.approx(0.0, abs=1e-13)


def test_centered_x_squared_quadrature():
    from scipy.integrate import quad

    x, r = 1.0, 0.5
    mass = quad(lambda y: y * y, x - r, x + r)[0]
    avg = mass / (2 * r)
    orc = np.log(avg) - quad(lambda y: np.log(y * y + r * r / 2.0),
                             x - r, x + r, epsabs=1e-13)[0] / (2 * r)
    got = centered_log_term(WeightSpec.power(2.0), x, r)
    assert got == pytest.approx(orc, rel=1e-9)


def test_centered_bounded_by_heat_gap():
    # |centered| <= sup over the ball of |log(u/(ball average))|, which the
    # two-sided heat/ball comparison controls on near-constant weights
    spec = WeightSpec.plateau(0.05)
    gap, _ = heat_ball_gap(spec, region=(-2, 2), scale_range=(0.25, 2.0),
                           centers=17, scales=8)
    for (x, r) in [(0.0, 0.5), (0.7, 1.0), (-1.0, 0.25)]:
        assert abs(centered_log_term(spec, x, r)) <= gap + 1e-9


def test_identity_constant_zero():
    rep = identity_residual(WeightSpec.constant(1.0), 0.7, 0.9)
    assert rep.box_term == pytest.approx(0.0, abs=1e-15)
    assert rep.residual <= 1e-13
    assert rep.passed


def test_identity_x_squared_full_closed_form():
    # all three pipelines vs the exact closed forms
    rep = identity_residual(WeightSpec.power(2.0), 1.0, 0.5)
    h1 = _x2_interior_exact(1.0, 0.5)
    h2 = _x2_flux_exact(1.0, 0.5)
    assert rep.interior_term == pytest.approx(h1, rel=1e-9)
    assert rep.flux_term == pytest.approx(h2, rel=1e-5)
    assert rep.box_term == pytest.approx(2.0 * h1 + 0.5 * h2, rel=3e-5)
    assert rep.residual <= max(1e-2 * rep.box_term, 1e-4)
    assert rep.passed


def test_identity_power_02():
    rep = identity_residual(WeightSpec.power(0.2), 0.5, 0.25)
    assert rep.passed
    assert rep.residual <= max(1e-2 * rep.box_term, 1e-4)


def test_identity_displayed_unit_coefficients_fail():
    # the unit-coefficient combination is inconsistent with this kernel
    # normalization; the residual against it is O(box_term)
    rep = identity_residual(WeightSpec.power(2.0), 1.0, 0.5)
    wrong = abs(rep.box_term - (rep.interior_term + rep.flux_term))
    assert wrong > 10.0 * rep.residual
    assert wrong > 0.05 * rep.box_term


def test_error_term_constant_zero():
    assert error_term(WeightSpec.constant(1.0), shared_ball_family()) == 0.0


def test_error_term_decreases_with_plateau_amplitude():
    fam = shared_ball_family(scale_range=(0.25, 1.0), centers=5, radii=3)
    vals = [error_term(WeightSpec.plateau(t), fam) for t in (0.2, 0.1, 0.05)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_error_term_power_finite():
    fam = shared_ball_family(scale_range=(0.25, 1.0), centers=5, radii=3)
    val = error_term(WeightSpec.power(0.1), fam)
    assert 0 < val < 1.0


def test_report_serialization():
    rep = identity_residual(WeightSpec.power(2.0), 1.0, 0.5)
    d = rep.to_json_dict()
    assert d["passed"] is True
    assert set(d) >= {"x", "r", "box_term", "interior_term", "flux_term",
                      "centered_term", "residual", "tolerance"}
