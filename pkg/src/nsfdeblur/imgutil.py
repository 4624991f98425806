"""Conversions between H x W x 3 float images and [1,3,H,W] tensors."""

from __future__ import annotations

import numpy as np

from .autograd import Tensor
from .errors import ShapeError


def to_chw_tensor(img, dtype=np.float32) -> Tensor:
    if isinstance(img, Tensor):
        img = img.data
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError(f"expected an HxWx3 image, got shape {img.shape}")
    return Tensor(np.ascontiguousarray(img.transpose(2, 0, 1)[None]), dtype=dtype)


def chw_to_image(t) -> np.ndarray:
    arr = t.data if isinstance(t, Tensor) else np.asarray(t)
    if arr.ndim != 4 or arr.shape[0] != 1 or arr.shape[1] != 3:
        raise ShapeError(f"expected a [1,3,H,W] tensor, got shape {arr.shape}")
    return np.ascontiguousarray(arr[0].transpose(1, 2, 0))
