"""Central-difference gradient verification.

Checks run in float64: float32 forward noise at h = 1e-4 sits near 1e-3
relative error, which would drown the signal the check is after. Callers
therefore build the closure (and any model inside it) in float64.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor, no_grad


def grad_check(closure: Callable[[], Tensor], params: Sequence[Tensor],
               h: float = 1e-4, samples: Optional[int] = None,
               seed: int = 0) -> float:
    """Max relative error between autodiff and central differences.

    ``closure`` recomputes a scalar loss from ``params`` (float64 leaf
    tensors, perturbed in place during the sweep). Relative error per entry
    is |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-6).

    ``samples`` bounds the number of entries difference-checked per tensor
    (None checks every entry). The analytic gradient is always computed in
    full, every tensor is probed, and the probe set is a seeded draw, so a
    sampled run stays deterministic. Large models need this: exhaustive
    central differences cost two closure evaluations per scalar entry.
    """
    params = list(params)
    for p in params:
        if p.data.dtype != np.float64:
            raise ShapeError("grad_check requires float64 parameters")
        if not p.requires_grad:
            raise ShapeError("grad_check parameters must require gradients")
        p.grad = None

    loss = closure()
    if loss.size != 1:
        raise ShapeError(f"grad_check closure must return a scalar, got {loss.shape}")
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    if samples is not None and samples < 1:
        raise ShapeError(f"samples must be positive, got {samples}")
    pick = np.random.default_rng(seed)

    worst = 0.0
    with no_grad():
        for p, ga in zip(params, analytic):
            flat = p.data.reshape(-1)
            gaf = ga.reshape(-1)
            if samples is None or samples >= flat.size:
                idx = range(flat.size)
            else:
                idx = np.sort(pick.choice(flat.size, size=samples, replace=False))
            for i in idx:
                orig = flat[i]
                flat[i] = orig + h
                fp = float(closure().data)
                flat[i] = orig - h
                fm = float(closure().data)
                flat[i] = orig
                fd = (fp - fm) / (2.0 * h)
                rel = abs(gaf[i] - fd) / max(abs(gaf[i]), abs(fd), 1e-6)
                if rel > worst:
                    worst = rel
    return worst
