"""Pure-numpy implementations of the hot kernels.

Operation order (corner weighting, accumulation passes) is kept identical
to the compiled twin in ``_core.pyx`` so both backends are bit-exact
matches of each other.
"""

import numpy as np

BACKEND = "python"


def _sample_coords(flow):
    h, w = flow.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    sx = xs + flow[:, :, 0]
    sy = ys + flow[:, :, 1]
    return sx, sy


def _base_and_frac(s, size):
    # base index clamped to size-2 so a sample exactly on the far edge
    # stays in bounds (frac becomes 1.0, full weight on the edge pixel)
    b = np.floor(s)
    b = np.clip(b, 0.0, size - 2.0)
    return b.astype(np.int64), s - b


def warp_bilinear(img, flow):
    """Backward-warp ``img`` by sampling at pixel + flow.

    img: (H, W, C) float64, flow: (H, W, 2) float64 with (u, v) in pixels.
    Returns (out, valid); out-of-bounds samples are invalid and 0.
    """
    h, w, _ = img.shape
    sx, sy = _sample_coords(flow)
    valid = (sx >= 0.0) & (sx <= w - 1.0) & (sy >= 0.0) & (sy <= h - 1.0)
    x0, fx = _base_and_frac(sx, w)
    y0, fy = _base_and_frac(sy, h)

    w00 = (1.0 - fy) * (1.0 - fx)
    w01 = (1.0 - fy) * fx
    w10 = fy * (1.0 - fx)
    w11 = fy * fx

    a = img[y0, x0]
    b = img[y0, x0 + 1]
    c = img[y0 + 1, x0]
    d = img[y0 + 1, x0 + 1]
    out = ((w00[..., None] * a + w01[..., None] * b) + w10[..., None] * c) + w11[..., None] * d
    out[~valid] = 0.0
    return out, valid


def warp_bilinear_grad(grad_out, flow, valid, h_src, w_src):
    """Transpose of warp_bilinear w.r.t. the sampled image.

    Scatter-adds grad_out * bilinear weight into the four corners, one
    corner pass at a time in raster order (accumulation order matters for
    bit-reproducibility).
    """
    h, w, c = grad_out.shape
    sx, sy = _sample_coords(flow)
    x0, fx = _base_and_frac(sx, w_src)
    y0, fy = _base_and_frac(sy, h_src)
    x0 = x0.ravel()
    y0 = y0.ravel()
    fx = fx.ravel()
    fy = fy.ravel()

    g = grad_out.reshape(-1, c) * valid.reshape(-1, 1)

    w00 = (1.0 - fy) * (1.0 - fx)
    w01 = (1.0 - fy) * fx
    w10 = fy * (1.0 - fx)
    w11 = fy * fx

    n = h_src * w_src
    grad_img = np.zeros((n, c))
    corners = (
        (y0 * w_src + x0, w00),
        (y0 * w_src + x0 + 1, w01),
        ((y0 + 1) * w_src + x0, w10),
        ((y0 + 1) * w_src + x0 + 1, w11),
    )
    for idx, wt in corners:
        for ch in range(c):
            grad_img[:, ch] += np.bincount(idx, weights=g[:, ch] * wt, minlength=n)
    return grad_img.reshape(h_src, w_src, c)


def segment_sum(values, index, n_segments):
    """Sum rows of ``values`` (P, C) into ``n_segments`` bins by ``index``.

    Sequential accumulation in array order per bin (bincount semantics).
    """
    _, c = values.shape
    out = np.zeros((n_segments, c))
    for ch in range(c):
        out[:, ch] = np.bincount(index, weights=values[:, ch], minlength=n_segments)
    return out
