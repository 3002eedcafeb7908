"""Differentiable losses with hand-derived gradients.

Everything operates on (H, W, C) float64 arrays in [0, 1] (values may
leave the range mid-optimization; nothing here clamps).
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


@dataclass
class LossValue:
    value: float
    grad: np.ndarray


def l1_loss(a, b, mask=None):
    """Masked mean absolute error; gradient w.r.t. ``a``.

    Normalizer is (sum of mask weights) * channels; an all-zero mask
    yields loss 0 with zero gradient.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    diff = a - b
    c = a.shape[2] if a.ndim == 3 else 1
    if mask is None:
        norm = diff.size
        value = float(np.abs(diff).sum() / norm)
        grad = np.sign(diff) / norm
    else:
        m = np.asarray(mask, dtype=np.float64)
        norm = m.sum() * c
        if norm <= 0.0:
            return LossValue(0.0, np.zeros_like(a))
        mw = m[..., None] if a.ndim == 3 else m
        value = float((mw * np.abs(diff)).sum() / norm)
        grad = mw * np.sign(diff) / norm
    return LossValue(value, grad)


def _gaussian_kernel(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    x = np.arange(size) - size // 2
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _conv_valid(img, kern):
    """Separable 2D correlation, 'valid' output region, per channel."""
    k = len(kern)
    out = convolve1d(img, kern, axis=0, mode="constant")
    out = convolve1d(out, kern, axis=1, mode="constant")
    r = k // 2
    return out[r:img.shape[0] - r, r:img.shape[1] - r]


def _conv_valid_transpose(field, kern, h, w):
    """Adjoint of _conv_valid: zero-pad by window-1 and correlate ('full')."""
    r = 2 * (len(kern) // 2)
    pad = [(r, r), (r, r)] + [(0, 0)] * (field.ndim - 2)
    return _conv_valid(np.pad(field, pad), kern)


def _ssim_terms(a, b, kern):
    mu1 = _conv_valid(a, kern)
    mu2 = _conv_valid(b, kern)
    s1 = _conv_valid(a * a, kern) - mu1 ** 2
    s2 = _conv_valid(b * b, kern) - mu2 ** 2
    s12 = _conv_valid(a * b, kern) - mu1 * mu2
    a1 = 2.0 * mu1 * mu2 + SSIM_C1
    a2 = 2.0 * s12 + SSIM_C2
    b1 = mu1 ** 2 + mu2 ** 2 + SSIM_C1
    b2 = s1 + s2 + SSIM_C2
    return mu1, mu2, s12, a1, a2, b1, b2


def ssim_map(a, b):
    """Per-pixel mean-over-channel SSIM on the valid interior region."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ValueError(f"frame {a.shape[:2]} smaller than SSIM window {SSIM_WINDOW}")
    kern = _gaussian_kernel()
    _, _, _, a1, a2, b1, b2 = _ssim_terms(a, b, kern)
    smap = (a1 * a2) / (b1 * b2)
    return smap.mean(axis=2) if a.ndim == 3 else smap


def ssim_loss(a, b):
    """1 - mean(SSIM map), with analytic gradient w.r.t. ``a``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ValueError(f"frame {a.shape[:2]} smaller than SSIM window {SSIM_WINDOW}")
    if np.array_equal(a, b):
        # global maximum of SSIM: the true gradient is exactly zero, and
        # evaluating the closed form there only yields rounding noise
        return LossValue(0.0, np.zeros_like(a))
    kern = _gaussian_kernel()
    mu1, mu2, s12, a1, a2, b1, b2 = _ssim_terms(a, b, kern)
    n = a1.size  # mean over map positions and channels
    value = 1.0 - float((a1 * a2 / (b1 * b2)).sum() / n)

    # d(loss)/d(ssim_p) = -1/n; chain through the window statistics
    scale = -1.0 / n
    d_mu1 = scale * (2.0 * mu2 * a2 / (b1 * b2) - 2.0 * mu1 * a1 * a2 / (b1 ** 2 * b2))
    d_s12 = scale * (2.0 * a1 / (b1 * b2))
    d_s1 = scale * (-a1 * a2 / (b1 * b2 ** 2))

    h, w = a.shape[:2]
    # mu1 = G*a ; s1 = G*(a^2) - mu1^2 ; s12 = G*(ab) - mu1*mu2
    grad = _conv_valid_transpose(d_mu1 - 2.0 * mu1 * d_s1 - mu2 * d_s12, kern, h, w)
    grad += 2.0 * a * _conv_valid_transpose(d_s1, kern, h, w)
    grad += b * _conv_valid_transpose(d_s12, kern, h, w)
    return LossValue(value, grad)


def photometric_loss(a, b, lambda_dssim=0.2):
    """(1-lambda)*L1 + lambda*(1-SSIM)/2."""
    l1 = l1_loss(a, b)
    if lambda_dssim == 0.0:
        return LossValue(l1.value, l1.grad)
    ds = ssim_loss(a, b)
    value = (1.0 - lambda_dssim) * l1.value + lambda_dssim * 0.5 * ds.value
    grad = (1.0 - lambda_dssim) * l1.grad + (lambda_dssim * 0.5) * ds.grad
    return LossValue(value, grad)


def tv_loss(a):
    """Anisotropic total variation: mean of |dx| + |dy| forward differences."""
    a = np.asarray(a, dtype=np.float64)
    dx = a[:, 1:] - a[:, :-1]
    dy = a[1:] - a[:-1]
    norm = dx.size + dy.size
    value = float((np.abs(dx).sum() + np.abs(dy).sum()) / norm)
    grad = np.zeros_like(a)
    sx = np.sign(dx)
    sy = np.sign(dy)
    grad[:, 1:] += sx
    grad[:, :-1] -= sx
    grad[1:] += sy
    grad[:-1] -= sy
    grad /= norm
    return LossValue(value, grad)


def psnr(a, b, peak=1.0):
    mse = float(np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak ** 2 / mse)
