"""Temporal-consistency and reconstruction metrics."""

import numpy as np
import pytest

from uvtc import metrics


def _static_fixture(rng, t=3, h=16, w=16):
    frame = rng.random((h, w, 3))
    video = np.stack([frame] * t)
    flows = [np.zeros((h, w, 2))] * (t - 1)
    masks = [np.ones((h, w))] * (t - 1)
    return video, flows, masks


def test_warp_ssim_is_100_for_static_video(rng):
    video, flows, masks = _static_fixture(rng)
    assert metrics.warp_ssim_metric(video, flows, masks) == pytest.approx(100.0)


def test_warp_l1_is_zero_for_static_video(rng):
    video, flows, masks = _static_fixture(rng)
    assert metrics.warp_l1_metric(video, flows, masks) == 0.0


def test_flicker_lowers_both_metrics(rng):
    video, flows, masks = _static_fixture(rng, t=4)
    noisy = np.clip(video + rng.uniform(-0.2, 0.2, video.shape), 0, 1)
    assert metrics.warp_ssim_metric(noisy, flows, masks) < 100.0
    assert metrics.warp_l1_metric(noisy, flows, masks) > 0.0


def test_masked_out_pixels_do_not_count(rng):
    video, flows, masks = _static_fixture(rng, t=3)
    noisy = video.copy()
    noisy[1, :4] = 0.0  # corrupt rows that the mask then excludes
    sel = [np.ones((16, 16)) for _ in masks]
    for m in sel:
        m[:9] = 0.0  # window margin reaches 5 rows past the corruption
    assert metrics.warp_l1_metric(noisy, flows, sel) == 0.0
    assert metrics.warp_ssim_metric(noisy, flows, sel) == pytest.approx(100.0)


def test_all_masked_returns_zero_score(rng):
    video, flows, masks = _static_fixture(rng)
    zeros = [np.zeros((16, 16))] * 2
    assert metrics.warp_ssim_metric(video, flows, zeros) == 0.0


def test_reconstruction_report(rng):
    original = np.clip(rng.random((4, 16, 16, 3)), 0, 1)
    report = metrics.reconstruction_metrics(original, original, n_elements=512)
    assert report["psnr"] == metrics.PSNR_SENTINEL
    assert report["ssim"] == pytest.approx(1.0)
    assert report["compression_rate"] == pytest.approx(100.0 * 512 / (4 * 16 * 16))


def test_reconstruction_psnr_known_value(rng):
    original = np.zeros((2, 16, 16, 3))
    recon = np.full_like(original, 0.1)
    report = metrics.reconstruction_metrics(original, recon, n_elements=10)
    assert report["psnr"] == pytest.approx(20.0)
