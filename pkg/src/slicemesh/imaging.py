"""Slice enhancement: power-law (gamma) correction, median and mean filtering.

Gray images are plain 2-D float arrays with values in ``[0, 255]``. Both
filters replicate edge pixels outside the image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidKernel, InvalidParam


@dataclass(frozen=True)
class EnhanceParams:
    c: float = 1.0
    gamma: float = 0.3
    median_kernel: int = 9
    mean_kernel: int = 9

    def __post_init__(self):
        if not self.c > 0 or not self.gamma > 0:
            raise InvalidParam(f"c and gamma must be positive, got c={self.c}, gamma={self.gamma}")
        for name in ("median_kernel", "mean_kernel"):
            k = getattr(self, name)
            if int(k) != k or k < 1 or k % 2 == 0:
                raise InvalidKernel(f"{name} must be an odd integer >= 1, got {k}")


def as_gray(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("gray image values must lie in [0, 255]")
    return arr


def _check_kernel(img: np.ndarray, k: int) -> int:
    if int(k) != k or k < 1 or k % 2 == 0:
        raise InvalidKernel(f"kernel size must be an odd integer >= 1, got {k}")
    if k > min(img.shape):
        raise InvalidKernel(f"kernel size {k} exceeds image size {img.shape[1]}x{img.shape[0]}")
    return int(k)


def power_law(img, c: float = 1.0, gamma: float = 0.3) -> np.ndarray:
    """Gamma correction ``s = 255 * c * (r / 255) ** gamma``, clamped to [0, 255]."""
    if not c > 0 or not gamma > 0:
        raise InvalidParam(f"c and gamma must be positive, got c={c}, gamma={gamma}")
    r = as_gray(img)
    return np.clip(255.0 * c * np.power(r / 255.0, gamma), 0.0, 255.0)


def median_filter(img, k: int) -> np.ndarray:
    r = as_gray(img)
    k = _check_kernel(r, k)
    return ndimage.median_filter(r, size=k, mode="nearest")


def mean_filter(img, k: int) -> np.ndarray:
    r = as_gray(img)
    k = _check_kernel(r, k)
    out = ndimage.uniform_filter(r, size=k, mode="nearest")
    # running sums can drift a few ulps past the input range
    return np.clip(out, r.min(), r.max())


def enhance(img, params: EnhanceParams | None = None) -> np.ndarray:
    """Power law, then median, then mean filter."""
    p = params or EnhanceParams()
    out = power_law(img, p.c, p.gamma)
    out = median_filter(out, p.median_kernel)
    return mean_filter(out, p.mean_kernel)


def quantize(img) -> np.ndarray:
    """Round to 0..255 integers (half up) for output."""
    return np.clip(np.floor(np.asarray(img, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)
