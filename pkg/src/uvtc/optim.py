"""Adam with per-row masking, and the geometric learning-rate schedule."""

import numpy as np


class MaskedAdam:
    """Adam over a (rows, dim) parameter block.

    A step may touch only a subset of rows; untouched rows keep their
    moments and step counters frozen, so bias correction stays correct
    for sparsely visited parameters.
    """

    def __init__(self, shape, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = np.zeros(shape[0], dtype=np.int64)

    def step(self, params, grad, lr, rows=None):
        """Update ``params`` in place; returns it for convenience."""
        if rows is None:
            rows = slice(None)
            self.t += 1
            t = self.t[:, None]
        else:
            self.t[rows] += 1
            t = self.t[rows][:, None]
        g = grad[rows]
        self.m[rows] = self.beta1 * self.m[rows] + (1.0 - self.beta1) * g
        self.v[rows] = self.beta2 * self.v[rows] + (1.0 - self.beta2) * g * g
        m_hat = self.m[rows] / (1.0 - self.beta1 ** t)
        v_hat = self.v[rows] / (1.0 - self.beta2 ** t)
        params[rows] -= lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return params


def adam_step(state, params, grad, lr):
    """Single dense Adam step (state = MaskedAdam over flat params)."""
    return state.step(params, grad, lr)


def lr_schedule(epoch, total, lr_start, lr_end):
    """Geometric interpolation from lr_start to lr_end over ``total`` epochs."""
    if total <= 1 or lr_start == lr_end:
        return lr_start
    frac = epoch / (total - 1)
    return lr_start * (lr_end / lr_start) ** frac
