"""Consistency and reconstruction metrics."""

import numpy as np

from . import losses
from .warp_mask import binarize_mask, warp_backward

PSNR_SENTINEL = 99.0  # reported when reconstruction is exact

_SSIM_R = losses.SSIM_WINDOW // 2


def warp_ssim_metric(video, flows_fwd, masks):
    """Mean SSIM between each frame and its warped next frame, percent.

    The SSIM map is averaged only over pixels whose binarized mask (and
    warp validity) is true; frames smaller than the SSIM window raise.
    """
    n_frames = video.shape[0]
    vals = []
    for t in range(n_frames - 1):
        warped, valid = warp_backward(video[t + 1], flows_fwd[t])
        smap = losses.ssim_map(video[t], warped)
        keep = binarize_mask(masks[t]) & valid
        keep = keep[_SSIM_R:-_SSIM_R, _SSIM_R:-_SSIM_R]
        if keep.any():
            vals.append(float(smap[keep].mean()))
    if not vals:
        return 0.0
    return max(0.0, min(100.0, 100.0 * float(np.mean(vals))))


def warp_l1_metric(video, flows_fwd, masks):
    """Masked mean |I_t - warp(I_{t+1})| averaged over adjacent pairs."""
    n_frames = video.shape[0]
    vals = []
    for t in range(n_frames - 1):
        warped, valid = warp_backward(video[t + 1], flows_fwd[t])
        m = np.asarray(masks[t], dtype=np.float64) * valid
        vals.append(losses.l1_loss(video[t], warped, mask=m).value)
    return float(np.mean(vals))


def reconstruction_metrics(original, reconstructed, n_elements):
    """Compression rate (percent of pixels kept) and fidelity vs original."""
    t, h, w, _ = original.shape
    p = losses.psnr(original, reconstructed)
    smaps = [losses.ssim_map(reconstructed[i], original[i]) for i in range(t)]
    return {
        "compression_rate": 100.0 * n_elements / (t * h * w),
        "psnr": PSNR_SENTINEL if np.isinf(p) else p,
        "ssim": float(np.mean([m.mean() for m in smaps])),
    }
