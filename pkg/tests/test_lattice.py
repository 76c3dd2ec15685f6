import numpy as np
import pytest
from hypothesis import given, strategies as st

from stokeslp.lattice import Rational, reduce_offset


def _scalar(num, poles):
    return Rational(np.array(num, dtype=complex).reshape(-1, 1, 1), tuple(poles))


@pytest.mark.parametrize("tau", [0.0, 0.3, 1.7, np.pi, 5.0, 2 * np.pi])
def test_cosh_series(tau):
    # sum_{k != 0} e^{ik tau} / (k^2 + 1) = pi cosh(pi - tau) / sinh(pi) - 1 on [0, 2 pi]
    r = _scalar([1.0], [(1j, 1), (-1j, 1)])
    val = r.lattice_sum(np.array([tau]))[0, 0, 0]
    assert val == pytest.approx(np.pi * np.cosh(np.pi - tau) / np.sinh(np.pi) - 1, abs=1e-13)


@pytest.mark.parametrize("tau", [0.0, 0.5, 3.0, 2 * np.pi])
def test_origin_double_pole(tau):
    # sum_{k != 0} e^{ik tau} / k^2 = pi^2 / 3 - pi tau + tau^2 / 2
    r = _scalar([1.0], [(0.0, 2)])
    val = r.lattice_sum(np.array([tau]))[0, 0, 0]
    assert val == pytest.approx(np.pi ** 2 / 3 - np.pi * tau + tau ** 2 / 2, abs=1e-12)


def test_one_sided_limits_at_origin():
    # sum e^{ik tau} k / (k^2 + 1) jumps at tau = 0
    r = _scalar([0.0, 1.0], [(1j, 1), (-1j, 1)])
    lo, hi = r.lattice_sum(np.array([0.0, 2 * np.pi]))[:, 0, 0]
    assert hi - lo == pytest.approx(-2j * np.pi, abs=1e-12)


@given(st.floats(0.2, 3.0), st.floats(-2.0, 2.0), st.integers(1, 2), st.floats(0.0, 2 * np.pi))
def test_closed_form_matches_residue_series(b, a, mult, tau):
    r = Rational(np.array([[[1.0]], [[0.5]]], dtype=complex), ((a + 1j * b, mult), (-a - 1j * b, 1)))
    t = np.array([tau])
    assert np.allclose(r.lattice_sum(t), r.lattice_sum_series(t), atol=1e-11)


def test_reduce_offset_sides():
    assert reduce_offset(0.0, 1)[0] == 0.0
    assert reduce_offset(2 * np.pi, -1)[0] == 2 * np.pi
    assert reduce_offset(-2 * np.pi, 1)[0] == 0.0
