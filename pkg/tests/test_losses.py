"""Loss values and analytic gradients against finite differences.

The L1 and TV losses are piecewise linear, so the finite-difference
fixtures keep every pairwise difference well away from zero; otherwise
the probe step crosses a kink and the comparison is meaningless.
"""

import numpy as np
import pytest

from uvtc import losses
from oracles import central_diff, grad_rel_error

TOL = 1e-3


def separated_pair(rng, h=16, w=16):
    # value ranges stay disjoint: no sign changes within the FD step
    a = rng.uniform(0.6, 0.9, (h, w, 3))
    b = rng.uniform(0.1, 0.4, (h, w, 3))
    return a, b


def test_l1_value_simple():
    a = np.array([[[0.5, 0.5, 0.5]]])
    b = np.array([[[0.25, 0.5, 1.0]]])
    assert losses.l1_loss(a, b).value == pytest.approx(0.75 / 3)


def test_l1_masked_normalizer():
    a = np.ones((2, 2, 3))
    b = np.zeros((2, 2, 3))
    mask = np.array([[1.0, 0.0], [0.5, 0.0]])
    got = losses.l1_loss(a, b, mask=mask)
    assert got.value == pytest.approx(1.0)  # weighted mean of |1|
    assert got.grad[0, 1].sum() == 0.0
    assert got.grad[0, 0, 0] == pytest.approx(1.0 / 4.5)


def test_l1_all_zero_mask_is_inert():
    a = np.ones((2, 2, 3))
    got = losses.l1_loss(a, np.zeros_like(a), mask=np.zeros((2, 2)))
    assert got.value == 0.0
    assert np.all(got.grad == 0.0)


def test_l1_gradient_matches_finite_differences(rng):
    a, b = separated_pair(rng, 6, 6)
    mask = rng.uniform(0.2, 1.0, (6, 6))
    got = losses.l1_loss(a, b, mask=mask)
    num = central_diff(lambda x: losses.l1_loss(x, b, mask=mask).value, a.copy())
    assert grad_rel_error(got.grad, num) < TOL


def test_ssim_identical_images_scores_one(rng):
    a = rng.random((16, 16, 3))
    assert np.allclose(losses.ssim_map(a, a), 1.0)
    got = losses.ssim_loss(a, a)
    assert got.value == 0.0
    assert np.all(got.grad == 0.0)


def test_ssim_constant_images_closed_form():
    c1, c2 = 0.3, 0.7
    a = np.full((16, 16, 3), c1)
    b = np.full((16, 16, 3), c2)
    expect = (2 * c1 * c2 + losses.SSIM_C1) / (c1 ** 2 + c2 ** 2 + losses.SSIM_C1)
    assert np.allclose(losses.ssim_map(a, b), expect, atol=1e-12)


def test_ssim_rejects_frames_smaller_than_window(rng):
    small = rng.random((8, 8, 3))
    with pytest.raises(ValueError):
        losses.ssim_map(small, small)
    with pytest.raises(ValueError):
        losses.ssim_loss(small, small)


def test_ssim_gradient_matches_finite_differences(rng):
    a, b = separated_pair(rng)
    got = losses.ssim_loss(a, b)
    num = central_diff(lambda x: losses.ssim_loss(x, b).value, a.copy())
    assert grad_rel_error(got.grad, num) < TOL


def test_photometric_gradient_matches_finite_differences(rng):
    a, b = separated_pair(rng)
    got = losses.photometric_loss(a, b, lambda_dssim=0.2)
    num = central_diff(lambda x: losses.photometric_loss(x, b, 0.2).value, a.copy())
    assert grad_rel_error(got.grad, num) < TOL


def test_photometric_blend_weights():
    a = np.full((16, 16, 3), 0.8)
    b = np.full((16, 16, 3), 0.2)
    l1 = losses.l1_loss(a, b).value
    ds = losses.ssim_loss(a, b).value
    got = losses.photometric_loss(a, b, lambda_dssim=0.25)
    assert got.value == pytest.approx(0.75 * l1 + 0.25 * 0.5 * ds)


def test_tv_zero_on_constant_image():
    got = losses.tv_loss(np.full((9, 9, 3), 0.42))
    assert got.value == 0.0
    assert np.all(got.grad == 0.0)


def test_tv_value_on_step_edge():
    a = np.zeros((4, 4, 1))
    a[:, 2:] = 1.0  # one vertical edge: 4 nonzero column differences
    got = losses.tv_loss(a)
    assert got.value == pytest.approx(4.0 / (12 + 12))


def test_tv_gradient_matches_finite_differences(rng):
    # strictly increasing ramps keep all forward differences nonzero
    base = np.cumsum(rng.uniform(0.01, 0.05, (8, 8, 3)), axis=0)
    base += np.cumsum(rng.uniform(0.01, 0.05, (8, 8, 3)), axis=1)
    got = losses.tv_loss(base)
    num = central_diff(lambda x: losses.tv_loss(x).value, base.copy())
    assert grad_rel_error(got.grad, num) < TOL


def test_psnr_known_value():
    a = np.zeros((4, 4, 3))
    b = np.full((4, 4, 3), 0.1)
    assert losses.psnr(a, b) == pytest.approx(20.0)
    assert losses.psnr(a, a) == np.inf
