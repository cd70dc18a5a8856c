"""Reference metrics (PSNR, SSIM) and per-band spectral energy."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError
from .proxies import hf_energy_ratio, laplacian_variance, proxy_scores, tenengrad  # noqa: F401
from .spectral import BasisBank, as_image

PSNR_CAP = 150.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_image(a, "a")
    b = as_image(b, "b")
    if a.shape != b.shape:
        raise InvalidParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b) -> float:
    """PSNR in dB for intensities in [0, 1]; identical images give 150 dB."""
    a, b = _pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(1.0 / mse)))


def ssim_window() -> np.ndarray:
    t = np.arange(SSIM_WINDOW, dtype=np.float64) - SSIM_WINDOW // 2
    g = np.exp(-(t * t) / (2.0 * SSIM_SIGMA**2))
    return g / g.sum()


def _filter_valid(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable "valid" filtering along the two leading axes
    n = g.size
    H, W = x.shape[:2]
    rows = sum(g[k] * x[k : H - n + 1 + k] for k in range(n))
    return sum(g[k] * rows[:, k : W - n + 1 + k] for k in range(n))


def ssim(a, b) -> float:
    """Mean SSIM over all fully covered 11x11 windows, averaged over channels."""
    a, b = _pair(a, b)
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise InvalidParameterError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape[:2]}")
    g = ssim_window()
    c1 = (SSIM_K1 * 1.0) ** 2
    c2 = (SSIM_K2 * 1.0) ** 2
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(np.mean(num / den, axis=(0, 1))))


def band_energy_profile(img, bank: BasisBank) -> np.ndarray:
    """Energy ``sum R_b |X|^2`` of the unitary spectrum captured by each ring."""
    x = as_image(img)
    if x.shape[:2] != bank.shape:
        raise InvalidParameterError(f"image is {x.shape[:2]}, bank is {bank.shape}")
    spec = np.fft.fft2(x, axes=(0, 1), norm="ortho")
    power = np.sum(spec.real**2 + spec.imag**2, axis=2)
    return np.einsum("bhw,hw->b", bank.masks, power)
