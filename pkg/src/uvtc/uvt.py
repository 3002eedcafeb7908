"""Canonical video compression via the Unique Video Tensor.

Every pixel of the video gets an integer key (flow ID propagated along
unmasked flow links, 7-bit quantized source color, optional world-space
voxel). Pixels sharing a key share one (R, G, B) element of a flat
N x 3 tensor; gathering averages into it, scattering broadcasts back.
Stage II optimizes that tensor against the exposure-aligned video.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, losses
from .optim import MaskedAdam
from .parallel import ordered_map
from .warp_mask import warp_backward, warp_backward_grad

NO_VOXEL = np.iinfo(np.int64).min  # shared marker: all depthless pixels compare equal


@dataclass
class StageTwoConfig:
    lambda_u: float = 0.8
    lambda_tv: float = 0.01
    epochs: int = 70
    batch_size: int = 16
    lr: float = 0.05
    voxel_size: float | None = None
    use_rgb_key: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lambda_u <= 1.0:
            raise ValueError("lambda_u must be in [0, 1]")
        if self.lambda_tv < 0.0:
            raise ValueError("lambda_tv must be >= 0")
        if self.voxel_size is not None and self.voxel_size <= 0.0:
            raise ValueError("voxel_size must be positive")


@dataclass
class KeyVolume:
    index_map: np.ndarray  # (T, H, W) int64 in [0, N)
    n: int
    columns: np.ndarray    # (T*H*W, d) int64 raw key tuples, for debugging


@dataclass
class UniqueVideoTensor:
    values: np.ndarray     # (N, 3)
    keys: KeyVolume


def quantize_rgb(frame):
    """7-bit color codes: floor(c*127 + 0.5), clamped to [0, 127]."""
    q = np.floor(np.asarray(frame, dtype=np.float64) * 127.0 + 0.5)
    return np.clip(q, 0, 127).astype(np.int64)


def voxelize(depth, cam, voxel_size):
    """World-space voxel index per pixel; NO_VOXEL where depth is invalid."""
    d = depth.data.astype(np.float64)
    h, w = d.shape
    ys, xs = np.mgrid[0:h, 0:w]
    pix = np.stack([xs, ys, np.ones_like(xs)], axis=-1).reshape(-1, 3).astype(np.float64)
    rays = pix @ np.linalg.inv(cam.intrinsics).T
    cam_pts = rays * d.reshape(-1, 1)
    world = cam_pts @ cam.extrinsics[:3, :3].T + cam.extrinsics[:3, 3]
    vox = np.floor(world / voxel_size).astype(np.int64).reshape(h, w, 3)
    vox[~depth.valid] = NO_VOXEL
    return vox


def _flow_data(f):
    return f.data if hasattr(f, "data") and not isinstance(f, np.ndarray) else np.asarray(f)


def propagate_flow_ids(flows_fwd, masks_bin):
    """Integer labels linking pixels along unmasked forward flow.

    Frame 0 is labeled 0..HW-1 in raster order. A masked pixel passes its
    label to the nearest-integer target pixel in the next frame; when
    several sources land on one target the smallest source label wins.
    Unreached pixels get fresh labels from a global counter.
    """
    if len(flows_fwd) != len(masks_bin):
        raise ValueError("flow/mask count mismatch")
    n_frames = len(flows_fwd) + 1
    h, w = _flow_data(flows_fwd[0]).shape[:2]
    ids = np.empty((n_frames, h, w), dtype=np.int64)
    ids[0] = np.arange(h * w).reshape(h, w)
    counter = h * w
    ys, xs = np.mgrid[0:h, 0:w]

    for t in range(n_frames - 1):
        fl = _flow_data(flows_fwd[t])
        tx = np.floor(xs + fl[:, :, 0] + 0.5).astype(np.int64)
        ty = np.floor(ys + fl[:, :, 1] + 0.5).astype(np.int64)
        ok = np.asarray(masks_bin[t], dtype=bool) & (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
        tgt = (ty[ok] * w + tx[ok]).ravel()
        src = ids[t][ok].ravel()
        nxt = np.full(h * w, -1, dtype=np.int64)
        # write larger source labels first so the smallest wins
        order = np.argsort(-src, kind="stable")
        nxt[tgt[order]] = src[order]
        fresh = nxt < 0
        n_fresh = int(fresh.sum())
        nxt[fresh] = np.arange(counter, counter + n_fresh)
        counter += n_fresh
        ids[t + 1] = nxt.reshape(h, w)
    return ids


def build_keys(source, flows_fwd, masks_bin, depths=None, cams=None,
               cfg: StageTwoConfig = StageTwoConfig()):
    """Key volume for the source video; dense indices in first-seen order."""
    n_frames, h, w, _ = source.shape
    cols = [propagate_flow_ids(flows_fwd, masks_bin).reshape(-1, 1)]
    if cfg.use_rgb_key:
        cols.append(np.stack([quantize_rgb(source[t]) for t in range(n_frames)]).reshape(-1, 3))
    if depths is not None and cfg.voxel_size is not None:
        if cams is None or len(cams) != n_frames:
            raise ValueError("voxel keys need one camera per frame")
        vox = np.stack([voxelize(depths[t], cams[t], cfg.voxel_size) for t in range(n_frames)])
        cols.append(vox.reshape(-1, 3))
    columns = np.hstack(cols)

    _, first, inverse = np.unique(columns, axis=0, return_index=True, return_inverse=True)
    # np.unique sorts; remap so indices follow first-occurrence scan order
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    index_map = rank[inverse].reshape(n_frames, h, w)
    return KeyVolume(index_map=index_map, n=len(first), columns=columns)


def gather(video, keys: KeyVolume) -> UniqueVideoTensor:
    """Average all member-pixel colors into each tensor element."""
    colors = np.ascontiguousarray(video.reshape(-1, 3), dtype=np.float64)
    idx = np.ascontiguousarray(keys.index_map.reshape(-1))
    sums = _kernels.segment_sum(colors, idx, keys.n)
    counts = np.bincount(idx, minlength=keys.n)
    return UniqueVideoTensor(values=sums / counts[:, None], keys=keys)


def scatter(uvt: UniqueVideoTensor):
    """Broadcast element colors back to pixels."""
    k = uvt.keys
    return uvt.values[k.index_map.reshape(-1)].reshape(*k.index_map.shape, 3)


def scatter_frame(values, keys: KeyVolume, t):
    return values[keys.index_map[t].reshape(-1)].reshape(*keys.index_map[t].shape, 3)


def _accumulate_frame_grad(grad_u, grad_img, keys, t):
    g = np.ascontiguousarray(grad_img.reshape(-1, 3), dtype=np.float64)
    idx = np.ascontiguousarray(keys.index_map[t].reshape(-1))
    grad_u += _kernels.segment_sum(g, idx, keys.n)


def stage2_loss(t, values, keys, target, flows_fwd, masks, cfg: StageTwoConfig):
    """Per-frame training loss; returns (value, grad w.r.t. values).

    Frames 0..T-2 combine TV + SSIM-to-target + masked warp alignment
    with the next frame; the last frame contributes TV + SSIM only.
    """
    n_frames = target.shape[0]
    frame_t = scatter_frame(values, keys, t)
    grad_u = np.zeros_like(values)

    tv = losses.tv_loss(frame_t)
    ssim = losses.ssim_loss(frame_t, target[t])
    value = cfg.lambda_tv * tv.value + (1.0 - cfg.lambda_u) * ssim.value
    grad_img = cfg.lambda_tv * tv.grad + (1.0 - cfg.lambda_u) * ssim.grad

    if t < n_frames - 1:
        if flows_fwd[t] is None:
            raise ValueError(f"missing forward flow for pair ({t}, {t + 1})")
        flow = _flow_data(flows_fwd[t])
        frame_next = scatter_frame(values, keys, t + 1)
        warped, valid = warp_backward(frame_next, flow)
        m = masks[t] * valid
        l1 = losses.l1_loss(frame_t, warped, mask=m)
        value += cfg.lambda_u * l1.value
        grad_img += cfg.lambda_u * l1.grad
        g_next = warp_backward_grad(-cfg.lambda_u * l1.grad, flow, valid)
        _accumulate_frame_grad(grad_u, g_next, keys, t + 1)

    _accumulate_frame_grad(grad_u, grad_img, keys, t)
    return value, grad_u


def run_stage2(aligned, keys: KeyVolume, flows_fwd, masks, cfg: StageTwoConfig,
               threads=1, log=None):
    """Optimize the tensor initialized from the Stage I output.

    Returns (final video clamped to [0,1], optimized UVT, loss curve).
    """
    n_frames = aligned.shape[0]
    uvt = gather(aligned, keys)
    values = uvt.values.copy()
    opt = MaskedAdam(values.shape)
    rng = np.random.default_rng(cfg.seed)
    frame_rows = [np.unique(keys.index_map[t]) for t in range(n_frames)]
    curve = []

    for epoch in range(cfg.epochs):
        entries = list(rng.permutation(n_frames - 1)) + [n_frames - 1]
        epoch_loss = 0.0
        for start in range(0, len(entries), cfg.batch_size):
            batch = entries[start:start + cfg.batch_size]
            results = ordered_map(
                lambda t: stage2_loss(t, values, keys, aligned, flows_fwd, masks, cfg),
                batch, threads=threads)
            grad = np.zeros_like(values)
            touched = []
            for t, (value, g_u) in zip(batch, results):
                epoch_loss += value
                grad += g_u
                touched.append(frame_rows[t])
                if t < n_frames - 1:
                    touched.append(frame_rows[t + 1])
            rows = np.unique(np.concatenate(touched))
            opt.step(values, grad, cfg.lr, rows=rows)
        curve.append(epoch_loss / len(entries))
        if log is not None:
            log(epoch, curve[-1])

    final = UniqueVideoTensor(values=values, keys=keys)
    return np.clip(scatter(final), 0.0, 1.0), final, curve
