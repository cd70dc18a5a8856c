"""Frequency-grid geometry, ring-shaped basis masks and Fourier-domain mixing.

Images are ``(H, W, C)`` float64 arrays (a 2-D array is treated as one
channel).  Spectra are the unitary 2-D DFT of each channel, kept in the
unshifted index order produced by :func:`numpy.fft.fft2`; use
:func:`centered` only for display.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, SymmetryViolationError

#: Nominal spread of the first / last ring, as a fraction of ``d_max``.
SPREAD_START = 0.05
SPREAD_STOP = 0.55

HERMITIAN_RTOL = 1e-6


def as_image(img, name: str = "image") -> np.ndarray:
    """Validate ``img`` and return it as a float64 ``(H, W, C)`` array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise InvalidParameterError(f"{name}: expected (H, W) or (H, W, 1|3) array, got shape {arr.shape}")
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise InvalidParameterError(f"{name}: height and width must be >= 2, got {arr.shape[:2]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name}: contains non-finite values")
    return arr


def negate_frequency(a: np.ndarray) -> np.ndarray:
    """Return ``a[(-h) % H, (-w) % W, ...]`` over the two leading axes."""
    return np.roll(a[::-1, ::-1], 1, axis=(0, 1))


def signed_frequencies(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.where(k <= n // 2, k, k - n).astype(np.float64)


@dataclass(frozen=True)
class DistanceGrid:
    """Radial distance of every DFT bin from DC, in frequency-bin units."""

    d: np.ndarray
    d_max: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.d.shape

    @property
    def height(self) -> int:
        return self.d.shape[0]

    @property
    def width(self) -> int:
        return self.d.shape[1]


def frequency_distance_grid(height: int, width: int) -> DistanceGrid:
    """Build the distance grid from signed DFT frequencies.

    Row ``h`` has frequency ``h`` for ``h <= H // 2`` and ``h - H`` otherwise
    (likewise for columns), so ``d`` is exactly invariant under frequency
    negation for odd and even sizes alike.
    """
    if int(height) != height or int(width) != width or height < 2 or width < 2:
        raise InvalidParameterError(f"grid dimensions must be integers >= 2, got {height}x{width}")
    fh = signed_frequencies(int(height))
    fw = signed_frequencies(int(width))
    d = np.sqrt(fh[:, None] ** 2 + fw[None, :] ** 2)
    d_max = float(np.sqrt(height**2 + width**2) / 2.0)
    return DistanceGrid(d=d, d_max=d_max)


@dataclass(frozen=True)
class BasisBank:
    """``B`` ring-shaped Gaussian masks over one frequency grid.

    Attributes:
        masks: ``(B, H, W)`` ring profiles, each peaking at 1 on ``d == mu``.
        mus: ring radii in frequency-bin units.
        sigmas: nominal spreads in ``[0.05, 0.55]`` (fractions of ``d_max``).
        spreads: effective Gaussian widths in bins, ``sigmas * d_max``.
        d_max: half-diagonal of the grid.
    """

    masks: np.ndarray
    mus: np.ndarray
    sigmas: np.ndarray
    spreads: np.ndarray
    d_max: float

    @property
    def size(self) -> int:
        return self.masks.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.masks.shape[1:]


def basis_schedule(B: int, d_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(mus, nominal_sigmas)`` for a bank of ``B`` rings.

    Both schedules are quadratic in the band index, so rings are packed
    densely near DC and spread out towards the corners.
    """
    if int(B) != B or B < 2:
        raise InvalidParameterError(f"number of basis masks must be an integer >= 2, got {B}")
    t = (np.arange(B, dtype=np.float64) / (B - 1)) ** 2
    mus = d_max * t
    sigmas = SPREAD_START + (SPREAD_STOP - SPREAD_START) * t
    # pin the endpoints against rounding in the affine map
    mus[0], mus[-1] = 0.0, d_max
    sigmas[0], sigmas[-1] = SPREAD_START, SPREAD_STOP
    return mus, sigmas


def make_basis_bank(grid: DistanceGrid, B: int) -> BasisBank:
    mus, sigmas = basis_schedule(B, grid.d_max)
    spreads = sigmas * grid.d_max
    diff = grid.d[None, :, :] - mus[:, None, None]
    masks = np.exp(-(diff**2) / (2.0 * spreads[:, None, None] ** 2))
    return BasisBank(masks=masks, mus=mus, sigmas=sigmas, spreads=spreads, d_max=grid.d_max)


def bank_for(height: int, width: int, B: int) -> BasisBank:
    """Shorthand for ``make_basis_bank(frequency_distance_grid(h, w), B)``."""
    return make_basis_bank(frequency_distance_grid(height, width), B)


def forward_spectrum(img) -> np.ndarray:
    """Unitary per-channel 2-D DFT of an image."""
    arr = as_image(img)
    return np.fft.fft2(arr, axes=(0, 1), norm="ortho")


def hermitian_defect(spec: np.ndarray) -> float:
    """Largest ``|X[k] - conj(X[-k])|`` relative to the largest ``|X|``."""
    scale = float(np.max(np.abs(spec))) if spec.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(spec - np.conj(negate_frequency(spec))))) / scale


def inverse_spectrum(spec, *, return_residual: bool = False):
    """Inverse unitary DFT of a Hermitian spectrum.

    The result is not clamped.  With ``return_residual`` the largest
    magnitude of the discarded imaginary part is returned alongside.

    Raises:
        SymmetryViolationError: if the spectrum is not Hermitian to 1e-6.
    """
    spec = np.asarray(spec)
    if spec.ndim == 2:
        spec = spec[:, :, None]
    if spec.ndim != 3 or spec.shape[0] < 2 or spec.shape[1] < 2:
        raise InvalidParameterError(f"spectrum must be (H, W, C) with H, W >= 2, got {spec.shape}")
    defect = hermitian_defect(spec)
    if defect > HERMITIAN_RTOL:
        raise SymmetryViolationError(f"spectrum is not Hermitian (relative defect {defect:.3e})")
    out = np.fft.ifft2(spec, axes=(0, 1), norm="ortho")
    if return_residual:
        return out.real, float(np.max(np.abs(out.imag)))
    return out.real


def validate_coefficients(coeffs, bank: BasisBank) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 2 or c.shape[1] != bank.size:
        raise InvalidParameterError(
            f"coefficient matrix must have shape (sources, {bank.size}), got {c.shape}"
        )
    if c.shape[0] < 1:
        raise InvalidParameterError("coefficient matrix needs at least one row")
    if not np.all(np.isfinite(c)):
        raise InvalidParameterError("coefficients contain non-finite values")
    return c


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    """Softmax across axis 0, stabilised by the per-bin maximum."""
    z = np.exp(scores - scores.max(axis=0, keepdims=True))
    return z / z.sum(axis=0, keepdims=True)


def compose_masks(coeffs, bank: BasisBank) -> np.ndarray:
    """Blend the basis rings into ``N+1`` masks that sum to one per bin.

    Returns an ``(N+1, H, W)`` array.  The per-bin scores are accumulated
    band by band with elementwise arithmetic, so bins ``k`` and ``-k`` see
    the same operations and the masks stay exactly symmetric.
    """
    c = validate_coefficients(coeffs, bank)
    scores = np.zeros((c.shape[0],) + bank.shape)
    for b in range(bank.size):
        scores += c[:, b, None, None] * bank.masks[b]
    return softmax_rows(scores)


def stack_images(images) -> np.ndarray:
    """Validate ``images`` and stack them into an ``(n, H, W, C)`` array."""
    if len(images) == 0:
        raise InvalidParameterError("at least one source image is required")
    arrs = [as_image(im, f"images[{i}]") for i, im in enumerate(images)]
    if any(a.shape != arrs[0].shape for a in arrs):
        raise InvalidParameterError("all source images must share dimensions and channels")
    return np.stack(arrs)


def _stack_sources(images, masks) -> tuple[np.ndarray, np.ndarray]:
    stack = stack_images(images)
    m = np.asarray(masks, dtype=np.float64)
    if m.ndim != 3 or m.shape[0] != stack.shape[0] or m.shape[1:] != stack.shape[1:3]:
        raise InvalidParameterError(
            f"mask set of shape {m.shape} does not match {stack.shape[0]} sources of size {stack.shape[1:3]}"
        )
    return stack, m


def fused_spectrum(images, masks) -> np.ndarray:
    """``sum_i masks[i] * F(images[i])`` with masks shared across channels."""
    stack, m = _stack_sources(images, masks)
    spectra = np.fft.fft2(stack, axes=(1, 2), norm="ortho")
    return np.einsum("nhw,nhwc->hwc", m, spectra)


def frequency_mixup(images, masks, *, return_residual: bool = False):
    """Fuse ``N+1`` images through per-bin masks in the Fourier domain.

    The output is the real part of the inverse transform and is left
    unclamped.  Pass ``return_residual=True`` to also get the largest
    imaginary magnitude, which stays at rounding level for symmetric masks.
    """
    out = np.fft.ifft2(fused_spectrum(images, masks), axes=(0, 1), norm="ortho")
    if return_residual:
        return out.real, float(np.max(np.abs(out.imag)))
    return out.real


def decompose_contributions(images, masks) -> list[np.ndarray]:
    """Per-source components ``F^-1(M_i * F(I_i))``; they sum to the fused image."""
    stack, m = _stack_sources(images, masks)
    spectra = np.fft.fft2(stack, axes=(1, 2), norm="ortho")
    parts = np.fft.ifft2(m[..., None] * spectra, axes=(1, 2), norm="ortho").real
    return list(parts)


def half_plane_multiplicity(height: int, width: int) -> np.ndarray:
    """How many full-plane bins each ``rfft2`` bin stands for (1 or 2)."""
    mult = np.full(width // 2 + 1, 2.0)
    mult[0] = 1.0
    if width % 2 == 0:
        mult[-1] = 1.0
    return np.broadcast_to(mult, (height, width // 2 + 1))


def centered(a: np.ndarray) -> np.ndarray:
    """Move DC to the array centre for viewing."""
    return np.fft.fftshift(a, axes=(0, 1))
