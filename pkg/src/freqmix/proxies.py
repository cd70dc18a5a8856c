"""Differentiable no-reference sharpness proxies.

Three native measures stand in for learned image-quality models:

``hf_energy``
    fraction of spectral energy above a quarter of the half-diagonal
    frequency,
``tenengrad``
    mean squared Sobel gradient magnitude,
``laplacian_var``
    variance of the 3x3 Laplacian response.

Each ``*_and_grad`` function returns the raw value and its gradient with
respect to the (already clamped) image.  Convolutions use only the
interior ("valid") positions, so constant images score exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import InvalidParameterError
from .spectral import as_image, frequency_distance_grid, half_plane_multiplicity

HF_CUTOFF = 0.25

def sobel_valid(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel responses ``(gx, gy)`` at the interior pixels of ``x``."""
    dx = x[:, 2:] - x[:, :-2]
    gx = (dx[:-2] + dx[2:]) + 2.0 * dx[1:-1]
    dy = x[2:] - x[:-2]
    gy = (dy[:, :-2] + dy[:, 2:]) + 2.0 * dy[:, 1:-1]
    return gx, gy


def sobel_valid_adjoint(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    h, w = gx.shape[:2]
    sx = np.zeros((h + 2, w) + gx.shape[2:])
    sx[:-2] += gx
    sx[1:-1] += 2.0 * gx
    sx[2:] += gx
    sy = np.zeros((h, w + 2) + gy.shape[2:])
    sy[:, :-2] += gy
    sy[:, 1:-1] += 2.0 * gy
    sy[:, 2:] += gy
    out = np.zeros((h + 2, w + 2) + gx.shape[2:])
    out[:, 2:] += sx
    out[:, :-2] -= sx
    out[2:] += sy
    out[:-2] -= sy
    return out


def laplacian_valid(x: np.ndarray) -> np.ndarray:
    """4-neighbour Laplacian at the interior pixels of ``x``."""
    return (x[:-2, 1:-1] + x[2:, 1:-1]) + (x[1:-1, :-2] + x[1:-1, 2:]) - 4.0 * x[1:-1, 1:-1]


def laplacian_valid_adjoint(y: np.ndarray) -> np.ndarray:
    h, w = y.shape[:2]
    out = np.zeros((h + 2, w + 2) + y.shape[2:])
    out[:-2, 1:-1] += y
    out[2:, 1:-1] += y
    out[1:-1, :-2] += y
    out[1:-1, 2:] += y
    out[1:-1, 1:-1] -= 4.0 * y
    return out


def highpass_weights(H: int, W: int, cutoff: float = HF_CUTOFF) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(mask, weights)`` on the ``rfft2`` half plane.

    ``mask`` flags bins above ``cutoff * d_max``; ``weights`` is the mask times
    the number of full-plane bins each stored bin represents.
    """
    grid = frequency_distance_grid(H, W)
    mask = (grid.d[:, : W // 2 + 1] > cutoff * grid.d_max).astype(np.float64)
    return mask, mask * half_plane_multiplicity(H, W)


def hf_energy_and_grad(x: np.ndarray, cutoff: float = HF_CUTOFF) -> tuple[float, np.ndarray]:
    H, W = x.shape[:2]
    total = float(np.sum(x * x))
    if total == 0.0:
        return 0.0, np.zeros_like(x)
    mask, weights = highpass_weights(H, W, cutoff)
    spec = sfft.rfft2(x, axes=(0, 1), norm="ortho")
    high = float(np.sum(weights[:, :, None] * (spec.real**2 + spec.imag**2)))
    d_high = 2.0 * sfft.irfft2(mask[:, :, None] * spec, s=(H, W), axes=(0, 1), norm="ortho")
    grad = (d_high * total - high * 2.0 * x) / total**2
    return high / total, grad


def tenengrad_and_grad(x: np.ndarray) -> tuple[float, np.ndarray]:
    gx, gy = sobel_valid(x)
    n = gx.size
    value = float(np.sum(gx * gx) + np.sum(gy * gy)) / n
    grad = sobel_valid_adjoint(gx, gy) * (2.0 / n)
    return value, grad


def laplacian_var_and_grad(x: np.ndarray) -> tuple[float, np.ndarray]:
    lap = laplacian_valid(x)
    n = lap.shape[0] * lap.shape[1]
    C = lap.shape[2]
    centred = lap - lap.mean(axis=(0, 1), keepdims=True)
    value = float(np.sum(centred * centred)) / (n * C)
    grad = laplacian_valid_adjoint(centred) * (2.0 / (n * C))
    return value, grad


RAW_PROXIES = {
    "hf_energy": hf_energy_and_grad,
    "tenengrad": tenengrad_and_grad,
    "laplacian_var": laplacian_var_and_grad,
}


def hf_energy_ratio(img) -> float:
    return hf_energy_and_grad(np.clip(as_image(img), 0.0, 1.0))[0]


def tenengrad(img) -> float:
    return tenengrad_and_grad(np.clip(as_image(img), 0.0, 1.0))[0]


def laplacian_variance(img) -> float:
    return laplacian_var_and_grad(np.clip(as_image(img), 0.0, 1.0))[0]


@dataclass(frozen=True)
class ProxyTerm:
    """One weighted proxy; the raw value is mapped to ``(raw - offset) / scale``."""

    name: str
    weight: float = 1.0
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.name not in RAW_PROXIES:
            raise InvalidParameterError(f"unknown proxy {self.name!r}; choose from {sorted(RAW_PROXIES)}")
        if not np.isfinite(self.weight) or self.weight < 0:
            raise InvalidParameterError(f"proxy weight must be finite and >= 0, got {self.weight}")
        if not np.isfinite(self.scale) or self.scale <= 0 or not np.isfinite(self.offset):
            raise InvalidParameterError(f"invalid normalisation for proxy {self.name!r}")


# Normalised proxies are measured in units of a typical variant's squared
# error: each scale is the proxy's corpus maximum (image or default variant)
# divided by 1e-3 and rounded up, see scripts/calibrate_proxies.py.  Scores
# normalised to [0, 1] instead would swamp the mean-squared reconstruction
# term (~1e-4) for every lambda above ~0.05.
DEFAULT_SCALES = {
    "hf_energy": 60.0,
    "tenengrad": 1000.0,
    "laplacian_var": 150.0,
}


@dataclass(frozen=True)
class ProxySpec:
    terms: tuple[ProxyTerm, ...] = field(
        default_factory=lambda: tuple(ProxyTerm(name, 1.0, scale) for name, scale in DEFAULT_SCALES.items())
    )

    def __post_init__(self):
        if len(self.terms) == 0:
            raise InvalidParameterError("proxy spec needs at least one proxy")
        if not any(t.weight > 0 for t in self.terms):
            raise InvalidParameterError("at least one proxy weight must be positive")

    @classmethod
    def only(cls, *names: str) -> "ProxySpec":
        """Spec with the named proxies at their default scales and unit weights."""
        return cls(tuple(ProxyTerm(n, 1.0, DEFAULT_SCALES.get(n, 1.0)) for n in names))


def score_and_grad(img: np.ndarray, spec: ProxySpec) -> tuple[float, np.ndarray]:
    """Weighted normalised proxy score of ``clip(img)`` and its gradient in ``img``.

    The clamp passes gradient through where ``0 <= img <= 1`` and blocks it
    elsewhere.
    """
    clamped = np.clip(img, 0.0, 1.0)
    score = 0.0
    grad = np.zeros_like(img)
    for term in spec.terms:
        if term.weight == 0.0:
            continue
        raw, g = RAW_PROXIES[term.name](clamped)
        score += term.weight * (raw - term.offset) / term.scale
        grad += (term.weight / term.scale) * g
    inside = (img >= 0.0) & (img <= 1.0)
    return score, grad * inside


def proxy_scores(img, spec: ProxySpec | None = None) -> dict[str, float]:
    """Raw and normalised value of every proxy in ``spec``, keyed by name."""
    spec = spec or ProxySpec()
    x = np.clip(as_image(img), 0.0, 1.0)
    out = {}
    for term in spec.terms:
        raw = RAW_PROXIES[term.name](x)[0]
        out[term.name] = raw
        out[term.name + "_norm"] = (raw - term.offset) / term.scale
    return out
