"""Bilinear backward warping and soft reliability masks.

The mask multiplies a sigmoid on the forward/backward flow-consistency
error with a sigmoid on the photometric error; out-of-bounds warp samples
get an infinite error sentinel and end up fully masked.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class MaskConfig:
    beta: float = 50.0
    xi_mode: str = "mean_std"   # threshold = mean + std of the finite error entries
    xi_flow: float | None = None
    xi_rgb: float | None = None
    flow_error_direction: str = "as_written"  # or "forward_pair"

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.xi_mode not in ("mean_std", "explicit"):
            raise ValueError(f"unknown xi_mode: {self.xi_mode}")
        if self.flow_error_direction not in ("as_written", "forward_pair"):
            raise ValueError(f"unknown flow_error_direction: {self.flow_error_direction}")


def _as_array(x):
    return x.data if hasattr(x, "data") and not isinstance(x, np.ndarray) else np.asarray(x)


def warp_backward(target, flow):
    """Sample ``target`` at pixel + flow (bilinear).

    Returns (warped, valid). Samples outside the image are invalid and 0;
    no clamping, so invalid pixels must be masked downstream.
    """
    img = np.asarray(target, dtype=np.float64)
    fl = np.ascontiguousarray(_as_array(flow), dtype=np.float64)
    if img.shape[:2] != fl.shape[:2]:
        raise ValueError(f"frame {img.shape[:2]} vs flow {fl.shape[:2]} resolution mismatch")
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    out, valid = _kernels.warp_bilinear(np.ascontiguousarray(img), fl)
    return (out[:, :, 0] if squeeze else out), valid


def warp_backward_grad(grad_out, flow, valid):
    """Gradient of warp_backward w.r.t. the sampled image."""
    g = np.ascontiguousarray(np.asarray(grad_out, dtype=np.float64))
    fl = np.ascontiguousarray(_as_array(flow), dtype=np.float64)
    h, w = fl.shape[:2]
    return _kernels.warp_bilinear_grad(g, fl, np.asarray(valid), h, w)


def flow_error_map(f_bwd_t, f_fwd_prev):
    """Forward-backward consistency error |F_bwd,t + warp(F_fwd,t-1)|.

    The previous frame's forward flow is warped into frame t channelwise,
    sampling with the backward flow. Invalid samples get +inf.
    """
    bwd = _as_array(f_bwd_t)
    fwd = _as_array(f_fwd_prev)
    if bwd.shape != fwd.shape:
        raise ValueError("flow resolution mismatch")
    warped, valid = warp_backward(fwd, bwd)
    err = np.sqrt(np.sum((bwd + warped) ** 2, axis=2))
    err[~valid] = np.inf
    return err


def rgb_error_map(curr, next_frame, f_fwd_t):
    """Photometric error: mean |I_t - warp(I_{t+1})| over channels."""
    warped, valid = warp_backward(next_frame, f_fwd_t)
    err = np.mean(np.abs(np.asarray(curr, dtype=np.float64) - warped), axis=2)
    err[~valid] = np.inf
    return err


def _threshold(err, explicit, mode):
    if explicit is not None:
        return float(explicit)
    finite = err[np.isfinite(err)]
    if finite.size == 0:
        return 0.0
    return float(finite.mean() + finite.std())


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def soft_mask(e_flow, e_rgb, cfg: MaskConfig = MaskConfig()):
    """sigmoid(beta*(xi_flow - E_flow)) * sigmoid(beta*(xi_rgb - E_rgb))."""
    e_flow = np.asarray(e_flow, dtype=np.float64)
    e_rgb = np.asarray(e_rgb, dtype=np.float64)
    if e_flow.shape != e_rgb.shape:
        raise ValueError("error map size mismatch")
    xi_f = _threshold(e_flow, cfg.xi_flow, cfg.xi_mode)
    xi_r = _threshold(e_rgb, cfg.xi_rgb, cfg.xi_mode)
    sentinel = ~(np.isfinite(e_flow) & np.isfinite(e_rgb))
    m = _sigmoid(cfg.beta * (xi_f - e_flow)) * _sigmoid(cfg.beta * (xi_r - e_rgb))
    m[sentinel] = 0.0
    return m


def rgb_only_mask(e_rgb, cfg: MaskConfig = MaskConfig()):
    """Mask from the photometric error alone (flow-consistency pair missing)."""
    e_rgb = np.asarray(e_rgb, dtype=np.float64)
    xi_r = _threshold(e_rgb, cfg.xi_rgb, cfg.xi_mode)
    m = _sigmoid(cfg.beta * (xi_r - e_rgb))
    m[~np.isfinite(e_rgb)] = 0.0
    return m


def binarize_mask(m):
    return np.asarray(m) > 0.5


def build_pair_masks(source, flows_fwd, flows_bwd=None, cfg: MaskConfig = MaskConfig()):
    """Reliability masks M_t for every adjacent pair (t, t+1) of the source.

    flows_fwd[t] maps t -> t+1 (T-1 fields). flows_bwd[t] maps t+1 -> t
    (T-1 fields, optional). Without backward flow the flow-consistency
    sigmoid is dropped and the mask is photometric-only.
    """
    t_frames = source.shape[0]
    if len(flows_fwd) != t_frames - 1:
        raise ValueError(f"need {t_frames - 1} forward flows, got {len(flows_fwd)}")
    if flows_bwd is not None and len(flows_bwd) != t_frames - 1:
        raise ValueError(f"need {t_frames - 1} backward flows, got {len(flows_bwd)}")

    masks = []
    for t in range(t_frames - 1):
        e_rgb = rgb_error_map(source[t], source[t + 1], flows_fwd[t])
        e_flow = None
        if flows_bwd is not None:
            if cfg.flow_error_direction == "as_written":
                # E_flow at frame t uses its backward flow and the
                # previous pair's forward flow; undefined at t=0
                if t >= 1:
                    e_flow = flow_error_map(flows_bwd[t - 1], flows_fwd[t - 1])
            else:  # forward_pair: check the pair's own forward flow
                warped, valid = warp_backward(_as_array(flows_bwd[t]), flows_fwd[t])
                e_flow = np.sqrt(np.sum((_as_array(flows_fwd[t]) + warped) ** 2, axis=2))
                e_flow[~valid] = np.inf
        if e_flow is None:
            masks.append(rgb_only_mask(e_rgb, cfg))
        else:
            masks.append(soft_mask(e_flow, e_rgb, cfg))
    return masks
