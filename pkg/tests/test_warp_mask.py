"""Warping semantics, error maps, and the soft reliability mask."""

import numpy as np
import pytest

from uvtc import warp_mask
from uvtc.warp_mask import MaskConfig, binarize_mask, build_pair_masks, rgb_only_mask, soft_mask
from oracles import warp_bilinear_ref


def test_identity_warp(rng):
    img = rng.random((10, 10, 3))
    out, valid = warp_mask.warp_backward(img, np.zeros((10, 10, 2)))
    assert valid.all()
    assert np.array_equal(out, img)


def test_integer_shift_recovers_neighbor_content(rng):
    img = rng.random((8, 8, 3))
    flow = np.zeros((8, 8, 2))
    flow[:, :, 0] = 2.0  # sample two columns to the right
    out, valid = warp_mask.warp_backward(img, flow)
    assert np.array_equal(out[:, :6], img[:, 2:])
    assert not valid[:, 6:].any()
    assert valid[:, :6].all()


def test_out_of_bounds_is_invalid_not_clamped(rng):
    img = rng.random((6, 6, 3)) + 0.5
    flow = np.full((6, 6, 2), 100.0)
    out, valid = warp_mask.warp_backward(img, flow)
    assert not valid.any()
    assert np.all(out == 0.0)


def test_warp_matches_scalar_reference(rng):
    img = rng.random((9, 14, 3))
    flow = rng.uniform(-4, 4, (9, 14, 2))
    out, valid = warp_mask.warp_backward(img, flow)
    out_ref, valid_ref = warp_bilinear_ref(img, flow)
    assert np.array_equal(valid, valid_ref)
    assert np.allclose(out, out_ref, atol=1e-12, rtol=0)


def test_warp_2d_input(rng):
    img = rng.random((7, 7))
    out, valid = warp_mask.warp_backward(img, np.zeros((7, 7, 2)))
    assert out.shape == (7, 7)
    assert np.array_equal(out, img)


def test_flow_error_zero_for_consistent_flows():
    h, w = 8, 8
    fwd = np.zeros((h, w, 2))
    fwd[:, :, 0] = 1.0
    bwd = -fwd
    err = warp_mask.flow_error_map(bwd, fwd)
    inside = np.isfinite(err)
    assert np.allclose(err[inside], 0.0, atol=1e-12)
    # backward flow escapes the image on the left edge column
    assert not inside[:, 0].any()


def test_flow_error_matches_scalar_reference(rng):
    h, w = 7, 9
    fwd = rng.uniform(-2, 2, (h, w, 2))
    bwd = rng.uniform(-2, 2, (h, w, 2))
    warped_ref, valid_ref = warp_bilinear_ref(fwd, bwd)
    err = warp_mask.flow_error_map(bwd, fwd)
    expect = np.sqrt(np.sum((bwd + warped_ref) ** 2, axis=2))
    expect[~valid_ref] = np.inf
    finite = np.isfinite(expect)
    assert np.array_equal(finite, np.isfinite(err))
    assert np.allclose(err[finite], expect[finite], atol=1e-7)


def test_rgb_error_matches_scalar_reference(rng):
    h, w = 7, 9
    curr = rng.random((h, w, 3))
    nxt = rng.random((h, w, 3))
    flow = rng.uniform(-2, 2, (h, w, 2))
    warped_ref, valid_ref = warp_bilinear_ref(nxt, flow)
    err = warp_mask.rgb_error_map(curr, nxt, flow)
    expect = np.mean(np.abs(curr - warped_ref), axis=2)
    expect[~valid_ref] = np.inf
    finite = np.isfinite(expect)
    assert np.array_equal(finite, np.isfinite(err))
    assert np.allclose(err[finite], expect[finite], atol=1e-7)


def test_soft_mask_quarter_at_both_thresholds():
    cfg = MaskConfig(xi_mode="explicit", xi_flow=0.3, xi_rgb=0.1)
    m = soft_mask(np.full((4, 4), 0.3), np.full((4, 4), 0.1), cfg)
    assert np.all(m == 0.25)


def test_soft_mask_zero_on_sentinel_errors():
    e_flow = np.zeros((3, 3))
    e_flow[1, 1] = np.inf
    m = soft_mask(e_flow, np.zeros((3, 3)), MaskConfig(xi_mode="explicit", xi_flow=1.0, xi_rgb=1.0))
    assert m[1, 1] == 0.0
    assert np.all(m[np.isfinite(e_flow)] > 0.5)


def test_soft_mask_decreases_with_error():
    cfg = MaskConfig(xi_mode="explicit", xi_flow=0.5, xi_rgb=0.5)
    errs = np.linspace(0, 1, 50).reshape(1, 50)
    m = soft_mask(errs, np.full_like(errs, 0.2), cfg)
    assert np.all(np.diff(m[0]) < 0)


def test_soft_mask_statistic_threshold_splits_outliers(rng):
    e = np.full((10, 10), 0.01)
    e[0, :3] = 5.0  # gross outliers must fall below the mean+std threshold
    m = rgb_only_mask(e)
    assert np.all(m[0, :3] < 0.5)
    assert np.all(m[1:] > 0.5)


def test_binarize_threshold_is_strict():
    m = np.array([0.0, 0.5, np.nextafter(0.5, 1.0), 1.0])
    assert list(binarize_mask(m)) == [False, False, True, True]


def test_build_pair_masks_counts_and_rgb_only_path(rng):
    video = np.clip(rng.random((4, 12, 12, 3)), 0, 1)
    flows = [np.zeros((12, 12, 2)) for _ in range(3)]
    masks = build_pair_masks(video, flows)
    assert len(masks) == 3
    assert all(m.shape == (12, 12) for m in masks)
    with pytest.raises(ValueError):
        build_pair_masks(video, flows[:2])


def test_build_pair_masks_with_backward_flow(rng):
    video = np.clip(rng.random((4, 12, 12, 3)), 0, 1)
    flows = [np.zeros((12, 12, 2)) for _ in range(3)]
    bwd = [np.zeros((12, 12, 2)) for _ in range(3)]
    masks = build_pair_masks(video, flows, bwd)
    assert len(masks) == 3
    # without a preceding pair the first mask falls back to photometric only
    cfg = MaskConfig()
    e0 = warp_mask.rgb_error_map(video[0], video[1], flows[0])
    assert np.allclose(masks[0], rgb_only_mask(e0, cfg))


def test_mask_config_rejects_bad_values():
    with pytest.raises(ValueError):
        MaskConfig(beta=0.0)
    with pytest.raises(ValueError):
        MaskConfig(xi_mode="quantile")
    with pytest.raises(ValueError):
        MaskConfig(flow_error_direction="sideways")
