"""Detail-enhanced variants of an original image.

Each variant is produced by upsampling the original by an integer factor,
sharpening at that resolution and resampling back down, so different
factors inject detail at different frequencies of the original grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate1d

from .errors import InvalidParameterError
from .spectral import as_image

ENHANCERS = ("unsharp", "none", "external")
CATMULL_ROM_A = -0.5


@dataclass(frozen=True)
class VariantConfig:
    scales: tuple[int, ...] = (2, 3, 4)
    enhancer: str = "unsharp"
    unsharp_radius: float = 1.5
    unsharp_amount: float = 0.8

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        if not self.scales or any(s < 1 for s in self.scales):
            raise InvalidParameterError(f"scales must be a non-empty list of integers >= 1, got {self.scales}")
        if self.enhancer not in ENHANCERS:
            raise InvalidParameterError(f"enhancer must be one of {ENHANCERS}, got {self.enhancer!r}")
        if not math.isfinite(self.unsharp_radius) or self.unsharp_radius <= 0:
            raise InvalidParameterError(f"unsharp radius must be > 0, got {self.unsharp_radius}")
        if not math.isfinite(self.unsharp_amount) or self.unsharp_amount < 0:
            raise InvalidParameterError(f"unsharp amount must be >= 0, got {self.unsharp_amount}")


def cubic_kernel(x: np.ndarray, a: float = CATMULL_ROM_A) -> np.ndarray:
    x = np.abs(x)
    x2, x3 = x * x, x * x * x
    near = (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0
    far = a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Dense ``(n_out, n_in)`` bicubic interpolation operator.

    Pixel centres are aligned (``src = (dst + 0.5) * n_in / n_out - 0.5``)
    and taps falling outside the input are clamped to the nearest edge.
    """
    dst = np.arange(n_out, dtype=np.float64)
    src = (dst + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for tap in (-1, 0, 1, 2):
        w = cubic_kernel(frac - tap)
        idx = np.clip(base + tap, 0, n_in - 1)
        np.add.at(mat, (rows, idx), w)
    return mat


def resample_bicubic(img, out_height: int, out_width: int) -> np.ndarray:
    """Separable Catmull-Rom resampling to ``(out_height, out_width)``, clamped to [0, 1]."""
    x = as_image(img)
    if int(out_height) != out_height or int(out_width) != out_width or out_height < 2 or out_width < 2:
        raise InvalidParameterError(f"output dimensions must be integers >= 2, got {out_height}x{out_width}")
    rows = resample_matrix(x.shape[0], int(out_height))
    cols = resample_matrix(x.shape[1], int(out_width))
    out = np.tensordot(rows, x, axes=(1, 0))
    out = np.tensordot(out, cols, axes=(1, 1)).transpose(0, 2, 1)
    return np.clip(out, 0.0, 1.0)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = max(1, math.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Separable Gaussian blur truncated at 3 sigma, edges replicated."""
    x = as_image(img)
    k = gaussian_kernel1d(sigma)
    out = correlate1d(x, k, axis=0, mode="nearest")
    return correlate1d(out, k, axis=1, mode="nearest")


def unsharp_mask(img, radius: float = 1.5, amount: float = 0.8) -> np.ndarray:
    if not math.isfinite(radius) or radius <= 0:
        raise InvalidParameterError(f"radius must be > 0, got {radius}")
    if not math.isfinite(amount) or amount < 0:
        raise InvalidParameterError(f"amount must be >= 0, got {amount}")
    x = as_image(img)
    if amount == 0:
        return np.clip(x, 0.0, 1.0)
    return np.clip(x + amount * (x - gaussian_blur(x, radius)), 0.0, 1.0)


def make_variant(original, scale: int, cfg: VariantConfig) -> np.ndarray:
    x = as_image(original, "original")
    H, W = x.shape[:2]
    up = resample_bicubic(x, scale * H, scale * W)
    if cfg.enhancer == "unsharp":
        up = unsharp_mask(up, cfg.unsharp_radius, cfg.unsharp_amount)
    return resample_bicubic(up, H, W)


def make_variant_set(original, cfg: VariantConfig | None = None, workers: int = 1) -> list[np.ndarray]:
    """One variant per scale factor, each the size of ``original``."""
    cfg = cfg or VariantConfig()
    if cfg.enhancer == "external":
        raise InvalidParameterError("external variants are loaded from files, not generated")
    x = as_image(original, "original")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda s: make_variant(x, s, cfg), cfg.scales))
    return [make_variant(x, s, cfg) for s in cfg.scales]
