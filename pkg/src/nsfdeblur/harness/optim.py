"""Adam with bias-corrected moments, and the stepped-halving lr schedule."""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..autograd import Tensor


def lr_schedule(base_lr: float, epoch: int, halve_every: int) -> float:
    """base_lr * 0.5 ** floor(epoch / halve_every)."""
    return base_lr * 0.5 ** (epoch // halve_every)


def adam_step(param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray,
              lr: float, betas: Tuple[float, float], eps: float, t: int) -> None:
    """One in-place Adam update; m and v are updated in place too."""
    b1, b2 = betas
    m += (1.0 - b1) * (grad - m)
    v += (1.0 - b2) * (grad * grad - v)
    mhat = m / (1.0 - b1 ** t)
    vhat = v / (1.0 - b2 ** t)
    param -= lr * mhat / (np.sqrt(vhat) + eps)


class Adam:
    """Holds first/second moment state for a fixed parameter list."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-4,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params: List[Tensor] = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            adam_step(p.data, p.grad, m, v, self.lr, self.betas, self.eps, self.t)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
