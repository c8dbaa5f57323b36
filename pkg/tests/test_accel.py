"""Backend parity and env-flag behavior for the quadrature kernels."""

import os
import subprocess
import sys

import numpy as np
import pytest

from ainftylab import accel, kernels

E = np.empty(0)

try:
    import ainftylab._accel_numba  # noqa: F401
    HAVE_NUMBA = True
except Exception:
    HAVE_NUMBA = False

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba unavailable")


@pytest.fixture(autouse=True)
def _restore_backend():
    old = accel.backend()
    yield
    accel.set_backend(old)


def _both(fn):
    accel.set_backend("numpy")
    a = fn()
    accel.set_backend("numba")
    b = fn()
    return a, b


def _assert_close(a, b, rtol=5e-12):
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    scale = 1.0 + np.max(np.abs(a))
    assert np.max(np.abs(a - b)) <= rtol * scale


CASES = [
    (0, (2.5, 0.0, 0.0), E, E),
    (1, (0.3, 0.0, 0.0), E, E),
    (1, (-0.4, 0.0, 0.0), E, E),
    (1, (2.0, 0.0, 0.0), E, E),
    (2, (0.3, -0.2, 0.0), E, E),
    (3, (0.2, 0.3, 1.2), E, E),
    (4, (0.0, 0.0, 0.0), np.linspace(-40, 40, 801),
     1.0 + 0.5 * np.sin(np.linspace(-40, 40, 801)) ** 2),
]


@needs_numba
@pytest.mark.parametrize("fam,p,gx,gv", CASES)
def test_gauss_conv_parity(fam, p, gx, gv):
    xs = np.linspace(-2.5, 2.5, 41)
    rs = np.geomspace(0.1, 2.0, 41)

    def run():
        return accel.conv_batch(fam, *p, gx, gv, xs, rs, accel.KERN_GAUSS, 0.0,
                                kernels.GAUSS_SEG, kernels.GAUSS_WMAX)

    (u1, g1), (u2, g2) = _both(run)
    _assert_close(u1, u2)
    _assert_close(g1, g2)


@needs_numba
@pytest.mark.parametrize("fam,p,gx,gv", CASES)
def test_table_conv_parity(fam, p, gx, gv):
    vt = kernels.varphi_table(1)
    xs = np.linspace(-2.0, 2.0, 31)
    rs = np.geomspace(0.2, 1.5, 31)

    def run():
        return accel.conv_batch(fam, *p, gx, gv, xs, rs, accel.KERN_TABLE, 0.0,
                                vt.seg_edges, vt.seg_wmax, vt.step, vt.values,
                                vt.derivs)

    (u1, g1), (u2, g2) = _both(run)
    _assert_close(u1, u2)
    _assert_close(g1, g2)


@needs_numba
@pytest.mark.parametrize("fam,p,gx,gv", CASES)
def test_ball_and_logmean_parity(fam, p, gx, gv):
    cs = np.linspace(-3.0, 3.0, 25)
    rs = np.geomspace(0.05, 4.0, 25)
    if fam == 4:
        rs = np.minimum(rs, 2.0)

    m1, m2 = _both(lambda: accel.ball_mass_batch(fam, *p, gx, gv, cs, rs))
    _assert_close(m1, m2)
    l1, l2 = _both(lambda: accel.log_ball_mean_batch(fam, *p, gx, gv, cs, rs))
    _assert_close(l1, l2)


@needs_numba
def test_capped_gauss_parity():
    cap = kernels.capped_gauss_cap(8.0, 1)
    seg, segw = kernels.capped_gauss_segments(8.0, 1)
    xs = np.linspace(-2.0, 2.0, 21)
    rs = np.full(21, 0.7)

    def run():
        return accel.conv_batch(1, 0.3, 0.0, 0.0, E, E, xs, rs,
                                accel.KERN_CAPPED, cap, seg, segw)

    (u1, _), (u2, _) = _both(run)
    _assert_close(u1, u2)


def test_env_flag_selects_numpy():
    env = dict(os.environ, AINFTYLAB_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c",
         "from ainftylab import accel; print(accel.backend())"],
        capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "numpy"


@needs_numba
def test_env_flag_selects_numba():
    env = dict(os.environ, AINFTYLAB_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from ainftylab import accel; print(accel.backend())"],
        capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "numba"


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        accel.set_backend("cuda")
