"""Per-image optimisation of the mask coefficients, lambda sweeps, and the
coefficient file format."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidParameterError, ParseError, SchemaError
from .imageio import atomic_write_bytes
from .objective import FusionObjective, LossReport, check_lambda
from .proxies import ProxySpec
from .spectral import BasisBank, as_image

WINDOW = 10


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam settings for the coefficient search.

    ``convergence_tol`` enables early stopping: the run ends once the
    composite loss improved by less than this over the last 10 steps.
    Zero disables it.  ``init_bias`` is added to every coefficient of the
    original's row; the rings overlap (their sum is 6..14 per bin), so 0.2
    already favours the original (M_0 of roughly 0.5..0.85) without
    saturating the softmax.  ``init_jitter`` adds seeded Gaussian noise of that
    standard deviation to the initial coefficients (off by default).
    """

    steps: int = 300
    step_size: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    init_bias: float = 0.2
    seed: int = 0
    convergence_tol: float = 0.0
    init_jitter: float = 0.0

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise InvalidParameterError(f"steps must be an integer >= 1, got {self.steps}")
        for name in ("step_size", "beta1", "beta2", "epsilon", "init_bias", "convergence_tol", "init_jitter"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if self.step_size <= 0 or self.epsilon <= 0:
            raise InvalidParameterError("step_size and epsilon must be > 0")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise InvalidParameterError("beta1 and beta2 must lie in (0, 1)")
        if self.convergence_tol < 0 or self.init_jitter < 0:
            raise InvalidParameterError("convergence_tol and init_jitter must be >= 0")


@dataclass
class OptimizationTrace:
    composite: np.ndarray
    recon: np.ndarray
    percep: np.ndarray
    coefficients: np.ndarray
    final: LossReport
    steps_run: int
    wall_time: float = field(default=0.0, compare=False)


def initial_coefficients(n_sources: int, B: int, cfg: OptimizerConfig) -> np.ndarray:
    c = np.zeros((n_sources, B))
    c[0] += cfg.init_bias
    if cfg.init_jitter > 0:
        c += np.random.default_rng(cfg.seed).normal(0.0, cfg.init_jitter, c.shape)
    return c


def _check_sources(original, variants) -> list[np.ndarray]:
    if len(variants) < 1:
        raise InvalidParameterError("at least one variant is required")
    return [as_image(original, "original")] + [as_image(v, f"variants[{i}]") for i, v in enumerate(variants)]


def optimize_coefficients(
    original,
    variants,
    bank: BasisBank,
    lam: float,
    cfg: OptimizerConfig | None = None,
    spec: ProxySpec | None = None,
) -> OptimizationTrace:
    """Minimise the composite loss over the coefficient matrix with Adam.

    Coefficients start at zero with ``cfg.init_bias`` added to the
    original's row.  The returned coefficients are the best iterate
    visited, so the final loss never exceeds the initial one.

    Raises:
        DivergenceError: when a loss or gradient becomes non-finite.
    """
    cfg = cfg or OptimizerConfig()
    lam = check_lambda(lam)
    objective = FusionObjective(_check_sources(original, variants), bank, lam, spec)
    start = time.perf_counter()

    c = initial_coefficients(objective.n_sources, bank.size, cfg)
    m = np.zeros_like(c)
    v = np.zeros_like(c)
    composite, recon, percep = [], [], []
    best_c, best = c.copy(), None

    for step in range(1, cfg.steps + 1):
        report, grad = objective.value_and_grad(c)
        if not (math.isfinite(report.composite) and np.all(np.isfinite(grad))):
            raise DivergenceError("non-finite loss or gradient", step)
        composite.append(report.composite)
        recon.append(report.recon)
        percep.append(report.percep)
        if best is None or report.composite < best.composite:
            best, best_c = report, c.copy()

        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
        m_hat = m / (1.0 - cfg.beta1**step)
        v_hat = v / (1.0 - cfg.beta2**step)
        c = c - cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.epsilon)

        if cfg.convergence_tol > 0 and step > WINDOW and composite[-1 - WINDOW] - composite[-1] < cfg.convergence_tol:
            break

    last = objective.loss(c)
    if not math.isfinite(last.composite):
        raise DivergenceError("non-finite loss", len(composite) + 1)
    if last.composite < best.composite:
        best, best_c = last, c

    return OptimizationTrace(
        composite=np.array(composite),
        recon=np.array(recon),
        percep=np.array(percep),
        coefficients=best_c,
        final=best,
        steps_run=len(composite),
        wall_time=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class SweepResult:
    lam: float
    report: LossReport
    coefficients: np.ndarray


def _sweep_one(args) -> SweepResult:
    original, variants, bank, lam, cfg, spec = args
    trace = optimize_coefficients(original, variants, bank, lam, cfg, spec)
    return SweepResult(lam, trace.final, trace.coefficients)


def lambda_sweep(
    original,
    variants,
    bank: BasisBank,
    lambdas,
    cfg: OptimizerConfig | None = None,
    spec: ProxySpec | None = None,
    workers: int = 1,
) -> list[SweepResult]:
    """Independent optimisations, one per lambda, returned in ascending lambda order."""
    lambdas = [check_lambda(lam) for lam in lambdas]
    if not lambdas:
        raise InvalidParameterError("lambda list must not be empty")
    cfg = cfg or OptimizerConfig()
    jobs = [(original, variants, bank, lam, cfg, spec) for lam in sorted(lambdas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(job) for job in jobs]


# -- coefficient files ------------------------------------------------------

MAGIC = "freqmix-coefficients"
VERSION = 1
OPTIONAL_FIELDS = ("lambda", "height", "width")


@dataclass(frozen=True)
class CoefficientFile:
    values: np.ndarray
    lam: float | None = None
    image_shape: tuple[int, int] | None = None

    @property
    def n_sources(self) -> int:
        return self.values.shape[0]

    @property
    def bands(self) -> int:
        return self.values.shape[1]


def format_coefficients(coeffs, lam: float | None = None, image_shape=None) -> str:
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim != 2 or not np.all(np.isfinite(c)):
        raise InvalidParameterError("coefficients must be a finite 2-D matrix")
    height, width = image_shape if image_shape is not None else ("none", "none")
    lines = [
        f"{MAGIC} {VERSION}",
        f"sources {c.shape[0]}",
        f"bands {c.shape[1]}",
        f"lambda {'none' if lam is None else repr(float(lam))}",
        f"height {height}",
        f"width {width}",
        "data",
    ]
    lines += [" ".join(repr(float(x)) for x in row) for row in c]
    return "\n".join(lines) + "\n"


def save_coefficients(coeffs, path, lam: float | None = None, image_shape=None) -> None:
    """Write coefficients as self-describing text with full round-trip precision."""
    atomic_write_bytes(path, format_coefficients(coeffs, lam, image_shape).encode("utf-8"))


def _header_value(lines: list[str], index: int, key: str, kind):
    if index >= len(lines):
        raise ParseError("file ended inside the header", field=key)
    parts = lines[index].split()
    if len(parts) != 2 or parts[0] != key:
        raise ParseError(f"expected '{key} <value>' on line {index + 1}, got {lines[index]!r}", field=key)
    if parts[1] == "none" and key in OPTIONAL_FIELDS:
        return None
    try:
        value = kind(parts[1])
    except ValueError:
        raise ParseError(f"malformed value {parts[1]!r}", field=key) from None
    return value


def parse_coefficients(text: str) -> CoefficientFile:
    lines = text.splitlines()
    if not lines or lines[0].split()[:1] != [MAGIC]:
        raise ParseError("not a coefficient file", field="magic")
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise ParseError("missing or malformed version", field="version") from None
    if version != VERSION:
        raise ParseError(f"unsupported version {version}", field="version")
    sources = _header_value(lines, 1, "sources", int)
    bands = _header_value(lines, 2, "bands", int)
    lam = _header_value(lines, 3, "lambda", float)
    height = _header_value(lines, 4, "height", int)
    width = _header_value(lines, 5, "width", int)
    if len(lines) < 7 or lines[6].strip() != "data":
        raise ParseError("missing 'data' marker", field="data")
    if sources is None or sources < 1 or bands is None or bands < 1:
        raise SchemaError(f"header declares invalid shape sources={sources} bands={bands}")
    if (height is None) != (width is None):
        raise ParseError("height and width must both be given or both be 'none'", field="height")
    if lam is not None and not (0.0 <= lam <= 1.0):
        raise SchemaError(f"header lambda {lam} outside [0, 1]")

    rows = [ln for ln in lines[7:] if ln.strip()]
    if len(rows) != sources:
        raise SchemaError(f"header declares {sources} sources but file has {len(rows)} data rows")
    values = np.empty((sources, bands))
    for i, row in enumerate(rows):
        cells = row.split()
        if len(cells) != bands:
            raise SchemaError(f"header declares {bands} bands but data row {i} has {len(cells)} columns")
        try:
            values[i] = [float(x) for x in cells]
        except ValueError:
            raise ParseError(f"malformed number in data row {i}", field=f"data[{i}]") from None
    if not np.all(np.isfinite(values)):
        raise ParseError("non-finite coefficient", field="data")
    shape = None if height is None else (height, width)
    return CoefficientFile(values=values, lam=lam, image_shape=shape)


def load_coefficients(path) -> CoefficientFile:
    with open(path, encoding="utf-8") as f:
        return parse_coefficients(f.read())
