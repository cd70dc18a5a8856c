"""Composite fidelity/sharpness loss and its gradient in the mask coefficients.

The loss for an enhancement level ``lam`` is::

    L = (1 - lam) * mse(fused, original) - lam * proxy_score(fused)

:class:`FusionObjective` evaluates ``L`` and ``dL/dc`` for a fixed set of
source images.  It works on the half spectrum returned by ``rfft2``: every
mask is symmetric under frequency negation, so sums over the full plane
equal multiplicity-weighted sums over the stored half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import InvalidParameterError
from .proxies import ProxySpec, score_and_grad
from .spectral import BasisBank, as_image, half_plane_multiplicity, softmax_rows, stack_images, validate_coefficients


@dataclass(frozen=True)
class LossReport:
    recon: float
    percep: float
    composite: float
    lam: float


def check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 <= lam <= 1.0):
        raise InvalidParameterError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_image(a, "fused")
    b = as_image(b, "original")
    if a.shape != b.shape:
        raise InvalidParameterError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def recon_loss(fused, original) -> float:
    """Mean squared error over all pixels and channels."""
    a, b = _pair(fused, original)
    return float(np.mean((a - b) ** 2))


def perceptual_proxy_score(img, spec: ProxySpec | None = None) -> float:
    """Weighted sum of normalised sharpness proxies of the clamped image."""
    return score_and_grad(as_image(img), spec or ProxySpec())[0]


def perceptual_loss(img, spec: ProxySpec | None = None) -> float:
    return -perceptual_proxy_score(img, spec)


def combine(recon: float, percep: float, lam: float) -> LossReport:
    return LossReport(recon=recon, percep=percep, composite=(1.0 - lam) * recon + lam * percep, lam=lam)


def composite_loss(fused, original, lam: float, spec: ProxySpec | None = None) -> LossReport:
    lam = check_lambda(lam)
    a, b = _pair(fused, original)
    return combine(recon_loss(a, b), perceptual_loss(a, spec), lam)


class FusionObjective:
    """Loss and coefficient gradient for one original and its variants.

    Args:
        images: ``N+1`` source images; index 0 is the original.
        bank: basis rings matching the image size.
        lam: enhancement level in ``[0, 1]``.
        spec: perceptual proxies; defaults to :class:`ProxySpec`.
    """

    def __init__(self, images, bank: BasisBank, lam: float, spec: ProxySpec | None = None):
        self.lam = check_lambda(lam)
        self.spec = spec or ProxySpec()
        stack = stack_images(images)
        H, W, _ = stack.shape[1:]
        if bank.shape != (H, W):
            raise InvalidParameterError(f"basis bank is {bank.shape}, images are {(H, W)}")
        self.shape = stack.shape[1:]
        self.original = stack[0]
        self.bank = bank
        self.n_sources = stack.shape[0]
        self.half_shape = (H, W // 2 + 1)
        # channel-first half spectra, (N+1, C, H, W//2+1)
        spectra = sfft.rfft2(stack.transpose(0, 3, 1, 2), axes=(2, 3), norm="ortho")
        self.spectra = spectra
        self.spectra_re = np.ascontiguousarray(spectra.real)
        self.spectra_im = np.ascontiguousarray(spectra.imag)
        self.rings = np.ascontiguousarray(bank.masks[:, :, : W // 2 + 1]).reshape(bank.size, -1)
        self.weighted_rings = self.rings * half_plane_multiplicity(H, W).reshape(1, -1)

    def masks(self, coeffs) -> np.ndarray:
        """Half-plane masks, shape ``(N+1, H, W//2+1)``."""
        c = validate_coefficients(coeffs, self.bank)
        if c.shape[0] != self.n_sources:
            raise InvalidParameterError(f"expected {self.n_sources} coefficient rows, got {c.shape[0]}")
        return softmax_rows(c @ self.rings).reshape((self.n_sources,) + self.half_shape)

    def fuse(self, coeffs) -> np.ndarray:
        """Unclamped fused image for ``coeffs``."""
        return self._fuse(self.masks(coeffs))

    def _fuse(self, masks: np.ndarray) -> np.ndarray:
        mixed = masks[0] * self.spectra[0]
        for n in range(1, self.n_sources):
            mixed += masks[n] * self.spectra[n]
        fused = sfft.irfft2(mixed, s=self.shape[:2], axes=(1, 2), norm="ortho")
        return np.ascontiguousarray(fused.transpose(1, 2, 0))

    def loss(self, coeffs) -> LossReport:
        fused = self.fuse(coeffs)
        score = score_and_grad(fused, self.spec)[0]
        return combine(float(np.mean((fused - self.original) ** 2)), -score, self.lam)

    def value_and_grad(self, coeffs) -> tuple[LossReport, np.ndarray]:
        """Loss report and ``dL/dc`` (shape ``(N+1, B)``).

        Chain: spatial adjoint -> its unitary spectrum -> per-mask adjoint
        ``Re sum_c X_i conj(G)`` -> softmax Jacobian -> contraction with the
        rings.
        """
        masks = self.masks(coeffs)
        fused = self._fuse(masks)
        residual = fused - self.original
        recon = float(np.mean(residual**2))
        spatial = (2.0 * (1.0 - self.lam) / residual.size) * residual
        score, score_grad = score_and_grad(fused, self.spec)
        if self.lam > 0.0:
            spatial -= self.lam * score_grad
        report = combine(recon, -score, self.lam)

        adj = sfft.rfft2(spatial.transpose(2, 0, 1), axes=(1, 2), norm="ortho")
        adj_re, adj_im = adj.real, adj.imag
        mask_adj = np.empty_like(masks)
        for n in range(self.n_sources):
            acc = self.spectra_re[n, 0] * adj_re[0]
            acc += self.spectra_im[n, 0] * adj_im[0]
            for c in range(1, adj.shape[0]):
                acc += self.spectra_re[n, c] * adj_re[c]
                acc += self.spectra_im[n, c] * adj_im[c]
            mask_adj[n] = acc
        mean_adj = np.sum(masks * mask_adj, axis=0)
        mask_adj -= mean_adj
        mask_adj *= masks
        return report, mask_adj.reshape(self.n_sources, -1) @ self.weighted_rings.T


def loss_gradient_wrt_coeffs(images, coeffs, bank: BasisBank, lam: float, spec: ProxySpec | None = None) -> np.ndarray:
    """Analytic ``dL/dc`` of the composite loss for the given sources."""
    return FusionObjective(images, bank, lam, spec).value_and_grad(coeffs)[1]
