"""Decayed blending of two noise tensors with statistics alignment.

Pure tensor math on (T, C, H, W) arrays: a geometric decay schedule for
the blend weight, adaptive instance normalization to match per-frame
per-channel statistics, and the square-root blend itself.
"""

from dataclasses import dataclass

import numpy as np

SIGMA_FLOOR = 1e-8


class DegenerateStatistics(ValueError):
    """A frame-channel slice has (near-)zero standard deviation."""


@dataclass(frozen=True)
class GammaSchedule:
    gamma_start: float = 0.2
    gamma_end: float = 0.002
    steps: int = 25

    def __post_init__(self):
        if not 0.0 < self.gamma_end <= self.gamma_start <= 1.0:
            raise ValueError("need 0 < gamma_end <= gamma_start <= 1")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")


def gamma_at(sched: GammaSchedule, step_index):
    """Geometric decay from gamma_start (step 0) to gamma_end (last step)."""
    if not 0 <= step_index < sched.steps:
        raise ValueError(f"step {step_index} outside [0, {sched.steps})")
    if sched.gamma_start == sched.gamma_end or step_index == 0:
        return sched.gamma_start
    if step_index == sched.steps - 1:
        return sched.gamma_end
    frac = step_index / (sched.steps - 1)
    return sched.gamma_start * (sched.gamma_end / sched.gamma_start) ** frac


def forward_noise(z0, eps, alpha_bar):
    """sqrt(a)*z0 + sqrt(1-a)*eps, elementwise."""
    if z0.shape != eps.shape:
        raise ValueError("shape mismatch")
    if not 0.0 < alpha_bar <= 1.0:
        raise ValueError("alpha_bar must be in (0, 1]")
    return np.sqrt(alpha_bar) * z0 + np.sqrt(1.0 - alpha_bar) * eps


def _stats(x):
    mu = x.mean(axis=(2, 3), keepdims=True)
    sigma = x.std(axis=(2, 3), keepdims=True)
    return mu, sigma


def ain_align(eps_yt, eps_xy):
    """Re-standardize eps_yt to eps_xy's per-frame-channel mean/std."""
    eps_yt = np.asarray(eps_yt, dtype=np.float64)
    eps_xy = np.asarray(eps_xy, dtype=np.float64)
    if eps_yt.shape != eps_xy.shape:
        raise ValueError("shape mismatch")
    mu_yt, sig_yt = _stats(eps_yt)
    if np.any(sig_yt < SIGMA_FLOOR):
        raise DegenerateStatistics("constant frame-channel slice in the tensor being aligned")
    mu_xy, sig_xy = _stats(eps_xy)
    return sig_xy * ((eps_yt - mu_yt) / sig_yt) + mu_xy


def combine_noise(eps_xy, eps_yt, sched: GammaSchedule, step, swap_weights=False):
    """Blend the frame-plane noise with the aligned slice noise.

    As printed, sqrt(gamma) weights eps_xy; ``swap_weights`` flips the
    assignment for the alternate reading of the decay.
    """
    g = gamma_at(sched, step)
    aligned = ain_align(eps_yt, eps_xy)
    w_xy, w_yt = np.sqrt(g), np.sqrt(1.0 - g)
    if swap_weights:
        w_xy, w_yt = w_yt, w_xy
    return w_xy * np.asarray(eps_xy, dtype=np.float64) + w_yt * aligned
