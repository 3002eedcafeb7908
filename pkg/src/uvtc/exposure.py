"""Stage I: per-frame affine exposure alignment.

Each frame t gets a 3x4 color transform E_t = [A|b] (initialized to the
identity) so that transformed frames agree with their flow-warped
neighbors while staying photometrically close to the input.
"""

from dataclasses import dataclass, field

import numpy as np

from . import losses
from .optim import MaskedAdam, lr_schedule
from .parallel import ordered_map
from .warp_mask import MaskConfig, warp_backward, warp_backward_grad


@dataclass
class StageOneConfig:
    lambda_e: float = 0.8
    lambda_dssim: float = 0.2
    epochs: int = 35
    batch_size: int = 16
    lr_start: float = 0.01
    lr_end: float = 0.001
    seed: int = 0
    mask: MaskConfig = field(default_factory=MaskConfig)

    def __post_init__(self):
        if not 0.0 <= self.lambda_e <= 1.0:
            raise ValueError("lambda_e must be in [0, 1]")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def identity_embedding():
    return np.hstack([np.eye(3), np.zeros((3, 1))])


def apply_embedding(e, frame):
    """Per-pixel color c -> A c + b with E = [A|b]. No clamping."""
    e = np.asarray(e, dtype=np.float64)
    frame = np.asarray(frame, dtype=np.float64)
    return frame @ e[:, :3].T + e[:, 3]


def embedding_grad(frame, grad_out):
    """Accumulate d(loss)/dE from d(loss)/d(output): rows g, cols [c|1]."""
    h, w, _ = frame.shape
    c = frame.reshape(-1, 3)
    g = grad_out.reshape(-1, 3)
    ge = np.empty((3, 4))
    ge[:, :3] = g.T @ c
    ge[:, 3] = g.sum(axis=0)
    return ge


def _flow_data(f):
    return f.data if hasattr(f, "data") and not isinstance(f, np.ndarray) else np.asarray(f)


def stage1_loss(t, embeddings, relit, flows_fwd, masks, cfg: StageOneConfig):
    """Pair loss at frame t; gradients for E_t and E_{t+1}.

    For the final frame (t == T-1) only the photometric anchor applies
    and the second gradient is None.
    """
    n_frames = relit.shape[0]
    i_t = relit[t]
    tilde_t = apply_embedding(embeddings[t], i_t)

    photo = losses.photometric_loss(tilde_t, i_t, cfg.lambda_dssim)
    value = (1.0 - cfg.lambda_e) * photo.value
    grad_t_img = (1.0 - cfg.lambda_e) * photo.grad

    grad_next = None
    if t < n_frames - 1:
        if flows_fwd[t] is None:
            raise ValueError(f"missing forward flow for pair ({t}, {t + 1})")
        flow = _flow_data(flows_fwd[t])
        i_next = relit[t + 1]
        tilde_next = apply_embedding(embeddings[t + 1], i_next)
        warped, valid = warp_backward(tilde_next, flow)
        m = masks[t] * valid
        l1 = losses.l1_loss(tilde_t, warped, mask=m)
        value += cfg.lambda_e * l1.value
        grad_t_img += cfg.lambda_e * l1.grad
        g_warped = -cfg.lambda_e * l1.grad
        g_next_img = warp_backward_grad(g_warped, flow, valid)
        grad_next = embedding_grad(i_next, g_next_img)

    return value, embedding_grad(i_t, grad_t_img), grad_next


def apply_all(embeddings, relit, clamp=False):
    out = np.stack([apply_embedding(embeddings[t], relit[t]) for t in range(relit.shape[0])])
    return np.clip(out, 0.0, 1.0) if clamp else out


def run_stage1(relit, flows_fwd, masks, cfg: StageOneConfig, threads=1, log=None):
    """Optimize all embeddings; returns (embeddings (T,3,4), aligned video).

    ``masks`` are the per-pair reliability masks built from the SOURCE
    video. Batches are shuffled frame pairs plus a photometric-only entry
    for the last frame, one Adam step per batch on the touched frames.
    """
    n_frames = relit.shape[0]
    emb = np.stack([identity_embedding() for _ in range(n_frames)])
    opt = MaskedAdam((n_frames, 12))
    rng = np.random.default_rng(cfg.seed)
    curve = []

    for epoch in range(cfg.epochs):
        lr = lr_schedule(epoch, cfg.epochs, cfg.lr_start, cfg.lr_end)
        entries = list(rng.permutation(n_frames - 1)) + [n_frames - 1]
        epoch_loss = 0.0
        for start in range(0, len(entries), cfg.batch_size):
            batch = entries[start:start + cfg.batch_size]
            results = ordered_map(
                lambda t: stage1_loss(t, emb, relit, flows_fwd, masks, cfg),
                batch, threads=threads)
            grad = np.zeros((n_frames, 12))
            touched = set()
            for t, (value, g_t, g_next) in zip(batch, results):
                epoch_loss += value
                grad[t] += g_t.ravel()
                touched.add(int(t))
                if g_next is not None:
                    grad[t + 1] += g_next.ravel()
                    touched.add(int(t) + 1)
            rows = np.array(sorted(touched), dtype=np.int64)
            opt.step(emb.reshape(n_frames, 12), grad, lr, rows=rows)
        curve.append(epoch_loss / len(entries))
        if log is not None:
            log(epoch, curve[-1])

    aligned = apply_all(emb, relit, clamp=True)
    return emb, aligned, curve


def save_embeddings(path, embeddings):
    lines = [" ".join([str(t)] + [repr(float(v)) for v in embeddings[t].ravel()])
             for t in range(embeddings.shape[0])]
    from pathlib import Path
    Path(path).write_text("\n".join(lines) + "\n")


def load_embeddings(path):
    from pathlib import Path
    rows = []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        rows.append((int(parts[0]), np.array([float(v) for v in parts[1:]]).reshape(3, 4)))
    rows.sort(key=lambda r: r[0])
    return np.stack([m for _, m in rows])
