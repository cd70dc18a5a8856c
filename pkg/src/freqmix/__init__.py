"""Frequency-domain fusion of an image with sharpened variants of itself.

An original image and ``N`` variants are blended per DFT bin through masks
built from a bank of ring-shaped Gaussian basis functions.  The blending
coefficients are found by gradient descent on a loss that trades fidelity to
the original against native sharpness proxies.
"""

from .errors import (
    DecodeError,
    DivergenceError,
    FreqMixError,
    InvalidParameterError,
    ManifestError,
    ParseError,
    SchemaError,
    SymmetryViolationError,
)
from .metrics import band_energy_profile, psnr, ssim
from .objective import FusionObjective, LossReport, composite_loss, loss_gradient_wrt_coeffs
from .optimizer import (
    OptimizationTrace,
    OptimizerConfig,
    lambda_sweep,
    load_coefficients,
    optimize_coefficients,
    save_coefficients,
)
from .proxies import ProxySpec, ProxyTerm, hf_energy_ratio, laplacian_variance, tenengrad
from .spectral import (
    BasisBank,
    DistanceGrid,
    bank_for,
    compose_masks,
    decompose_contributions,
    frequency_distance_grid,
    frequency_mixup,
    inverse_spectrum,
    make_basis_bank,
)
from .variants import VariantConfig, make_variant_set, resample_bicubic, unsharp_mask

__version__ = "0.1.0"
