"""PSNR and SSIM over [0,1] float images (H x W x 3 or H x W)."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import convolve

from ..errors import ConfigError, ShapeError

PSNR_CAP = 100.0
_WIN = 11
_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10*log10(1/MSE) against peak 1; identical images report the 100 dB cap."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"psnr shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP)


def _gaussian_kernel() -> np.ndarray:
    half = _WIN // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * _SIGMA * _SIGMA))
    g /= g.sum()
    return np.outer(g, g)


def _ssim_channel(a: np.ndarray, b: np.ndarray) -> float:
    kern = _gaussian_kernel()
    c1 = _K1 * _K1
    c2 = _K2 * _K2
    # valid-mode windows: filter then crop the half-window border
    half = _WIN // 2

    def win(x):
        return convolve(x, kern, mode="constant")[half:-half, half:-half]

    mu_a = win(a)
    mu_b = win(b)
    var_a = win(a * a) - mu_a * mu_a
    var_b = win(b * b) - mu_b * mu_b
    cov = win(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean single-scale SSIM with an 11x11 Gaussian window, per channel."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"ssim shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[:, :, None]
        b = b[:, :, None]
    if a.ndim != 3:
        raise ShapeError(f"ssim expects HxW or HxWxC images, got {a.shape}")
    if a.shape[0] < _WIN or a.shape[1] < _WIN:
        raise ConfigError(f"image {a.shape[0]}x{a.shape[1]} smaller than the "
                          f"{_WIN}x{_WIN} ssim window")
    vals = [_ssim_channel(a[:, :, c], b[:, :, c]) for c in range(a.shape[2])]
    return float(np.mean(vals))
