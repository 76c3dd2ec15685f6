import numpy as np
import pytest
from hypothesis import given, strategies as st

from stokeslp.lateral import (JumpUndefinedError, box_modes, bracket_model, even_model, jump_coefficients,
                              odd_model, potential_slice, random_box_density, restriction_apply,
                              restriction_symbol, slice_symbol, stokes_double_layer_model, stokes_traction_model,
                              verify_lateral_limits)
from stokeslp.layers import neville_zero

LADDER = tuple(2.0 ** -k for k in range(5, 11))


def test_bracket_slice_values():
    a = bracket_model()
    assert slice_symbol(a, 0.0, 1.0, [0.0])[0, 0] == pytest.approx(np.exp(-1) / 2, abs=1e-10)
    assert slice_symbol(a, 0.0, 0.0, [0.0])[0, 0] == pytest.approx(0.5, abs=1e-10)
    b = np.sqrt(1 + 2.5 ** 2)
    assert slice_symbol(a, 0.0, -0.7, [2.5])[0, 0] == pytest.approx(np.exp(-0.7 * b) / (2 * b), abs=1e-10)


def test_bracket_slice_continuity():
    a = bracket_model()
    for xp in np.linspace(-4, 4, 10):
        base = slice_symbol(a, 0.0, 0.0, [xp])
        diffs = [np.abs(slice_symbol(a, 0.0, t, [xp]) - base).max() for t in (1e-2, 1e-3, 1e-4)]
        assert diffs[2] < diffs[1] < diffs[0] < 1e-1


def test_order_minus_one_slices_bounded():
    a = stokes_double_layer_model(1.0, 1.0)
    vals = [np.abs(slice_symbol(a, 0.0, t, [xp])).max() for t in (0.5, 0.05, -0.05, 0.005) for xp in (0.0, 3.0, 12.0)]
    assert max(vals) <= 1.0


def test_jump_coefficients():
    jc = jump_coefficients(odd_model())
    assert jc.plus[0, 0] == pytest.approx(1.0) and jc.minus[0, 0] == pytest.approx(1.0) and jc.odd
    jd = jump_coefficients(stokes_double_layer_model(1.0, 1.0))
    assert np.allclose(jd.plus, -1j * np.eye(2)) and np.allclose(jd.minus, -1j * np.eye(2))
    je = jump_coefficients(even_model())
    assert not je.odd
    assert je.plus[0, 0] == pytest.approx(-je.minus[0, 0])


def test_even_symbol_has_no_one_sided_restriction():
    with pytest.raises(JumpUndefinedError):
        restriction_symbol(even_model(), [1.0], "plus")


def test_restriction_examples():
    assert restriction_symbol(bracket_model(), [0.0])[0, 0] == pytest.approx(0.5, abs=1e-10)
    a = odd_model()
    assert abs(restriction_symbol(a, [0.7])[0, 0]) < 1e-12
    assert restriction_symbol(a, [0.7], "plus")[0, 0] == pytest.approx(0.5j, abs=1e-12)
    assert restriction_symbol(a, [0.7], "minus")[0, 0] == pytest.approx(-0.5j, abs=1e-12)


def test_restriction_principal_symbol_large_xi():
    # (1/2 pi) int 1 / (|xi'|^2 + tau^2) dtau = 1 / (2 |xi'|)
    for k in (50.0, 200.0):
        val = restriction_symbol(bracket_model(), [k])[0, 0]
        assert val == pytest.approx(1 / (2 * k), rel=1e-3)


def test_single_mode_slice():
    a = bracket_model()
    N = 8
    x = 2 * np.pi * np.arange(N) / N
    h = np.exp(2j * x)[None]
    out = potential_slice(a, h, 0.3)
    assert np.allclose(out, slice_symbol(a, 0.3, 0.3, [2.0])[0, 0] * h, atol=1e-12)


def _limit(a, h, sign):
    eps = np.array(LADDER)
    return neville_zero(eps, np.array([potential_slice(a, h, sign * e) for e in eps]))


def test_two_sided_limits_agree():
    a = bracket_model()
    h = random_box_density(np.random.default_rng(0), 1, 8, 1, 2)
    target = restriction_apply(a, h)
    assert np.abs(_limit(a, h, 1) - target).max() <= 1e-6
    assert np.abs(_limit(a, h, -1) - target).max() <= 1e-6


@pytest.mark.parametrize("model", [odd_model, lambda: stokes_double_layer_model(1.0, 1.0)])
def test_one_sided_limits(model):
    a = model()
    h = random_box_density(np.random.default_rng(1), a.shape[1], 8, 1, 2)
    tp, tm = restriction_apply(a, h, "plus"), restriction_apply(a, h, "minus")
    assert np.abs(_limit(a, h, 1) - tp).max() <= 1e-6
    assert np.abs(_limit(a, h, -1) - tm).max() <= 1e-6
    jump = np.einsum("ij,j...->i...", 1j * jump_coefficients(a).plus, h)
    assert np.abs(tp - tm - jump).max() <= 1e-12


@pytest.mark.parametrize("model", [bracket_model, odd_model, lambda: stokes_double_layer_model(1.0, 1.0)])
def test_residual_halving(model):
    rep = verify_lateral_limits(model(), trials=1)
    assert np.all(rep.ratios <= 0.75)


def test_double_layer_sides_differ_by_identity():
    a = stokes_double_layer_model(1.0, 0.0)
    h = random_box_density(np.random.default_rng(2), 2, 8, 1, 2)
    # i J_+ = i (-i) = 1
    assert np.abs(restriction_apply(a, h, "plus") - restriction_apply(a, h, "minus") - h).max() <= 1e-12


@given(st.floats(0.2, 3.0), st.floats(0.0, 3.0), st.floats(-8, 8))
def test_adjoint_restriction(V, V0, k):
    a, b = stokes_double_layer_model(V, V0), stokes_traction_model(V, V0)
    xp = np.array([k])
    assert np.abs(restriction_symbol(b, xp) - restriction_symbol(a, xp).conj().T).max() <= 1e-8
    assert np.abs(jump_coefficients(b).plus - jump_coefficients(a).plus.conj().T).max() <= 1e-8


def test_box_modes_shape():
    assert box_modes(8, 2).shape == (64, 2)


@pytest.mark.parametrize("t", [1.0, -0.4])
def test_contour_and_qawf_slices_agree(t):
    a = stokes_double_layer_model(1.0, 1.0)
    c = slice_symbol(a, 0.0, t, [1.5], method="contour")
    q = slice_symbol(a, 0.0, t, [1.5], method="qawf")
    assert np.abs(c - q).max() <= 1e-8
