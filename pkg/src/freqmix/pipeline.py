"""End-to-end runs behind the command-line interface.

Every run writes into a scratch directory next to its destination and
renames it into place once all artifacts exist, so a failed run leaves no
partial output behind.
"""

from __future__ import annotations

import contextlib
import hashlib
import logging
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import metrics
from .errors import FreqMixError, SchemaError
from .imageio import atomic_write_bytes, read_image, read_png, write_image
from .manifest import INDEX_FORMAT, SUMMARY_FORMAT, RunManifest, write_records
from .objective import FusionObjective, perceptual_proxy_score
from .optimizer import OptimizationTrace, load_coefficients, optimize_coefficients, save_coefficients
from .spectral import bank_for, centered, compose_masks, decompose_contributions, frequency_mixup
from .variants import VariantConfig, make_variant_set

log = logging.getLogger(__name__)

DECOMPOSE_TOL = 1e-6


class StageError(FreqMixError):
    """A pipeline stage failed; ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.exit_code = getattr(cause, "exit_code", 3 if isinstance(cause, OSError) else 1)


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (FreqMixError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc


@contextlib.contextmanager
def staging_dir(out_dir):
    """Yield a scratch directory that replaces ``out_dir`` on success."""
    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=out.parent, prefix=f".{out.name}.tmp-"))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    old = None
    if out.exists():
        old = out.parent / f".{out.name}.old-{os.getpid()}"
        os.replace(out, old)
    os.replace(tmp, out)
    if old is not None:
        shutil.rmtree(old, ignore_errors=True)


def load_sources(manifest: RunManifest) -> tuple[np.ndarray, list[np.ndarray], int]:
    """Original image, its variants and the original's PNG bit depth."""
    with stage("read original"):
        original, depth = read_png(manifest.original)
    if manifest.variant_paths is not None:
        with stage("read variants"):
            variants = [read_image(p) for p in manifest.variant_paths]
            for p, v in zip(manifest.variant_paths, variants):
                if v.shape != original.shape:
                    raise SchemaError(f"variant {p} is {v.shape}, original is {original.shape}")
    else:
        with stage("generate variants"):
            variants = make_variant_set(original, manifest.variant_config)
    return original, variants, depth


def mask_image(mask: np.ndarray) -> np.ndarray:
    return mask[:, :, None]


@dataclass
class EnhanceResult:
    summary: dict
    fused: np.ndarray
    trace: OptimizationTrace


def summarize(manifest: RunManifest, original, fused, trace: OptimizationTrace) -> dict:
    clamped = np.clip(fused, 0.0, 1.0)
    H, W, C = original.shape
    return {
        "lambda": trace.final.lam,
        "recon": trace.final.recon,
        "percep": trace.final.percep,
        "composite": trace.final.composite,
        "proxy_score": perceptual_proxy_score(clamped),
        "psnr_to_original": metrics.psnr(clamped, original),
        "ssim_to_original": metrics.ssim(clamped, original) if min(H, W) >= metrics.SSIM_WINDOW else None,
        "steps_run": trace.steps_run,
        "n_sources": trace.coefficients.shape[0],
        "bands": manifest.bands,
        "height": H,
        "width": W,
        "channels": C,
        "seed": manifest.seed,
        "enhanced": "enhanced.png",
        "coefficients": "coefficients.txt",
    }


def run_enhance(manifest: RunManifest) -> EnhanceResult:
    """Optimise the masks for one image and write the full artifact set.

    Artifacts: ``enhanced.png``, ``coefficients.txt``, ``trace.tsv``,
    ``summary.jsonl`` and ``masks/mask_XX_{raw,centered}.png``.
    """
    with stage("validate manifest"):
        manifest.validate()
    original, variants, _ = load_sources(manifest)
    H, W, _ = original.shape
    cfg = replace(manifest.optimizer, seed=manifest.seed)
    with stage("build basis"):
        bank = bank_for(H, W, manifest.bands)
    with stage("optimize"):
        trace = optimize_coefficients(original, variants, bank, manifest.lam, cfg)
    log.info("optimized %s in %.2fs (%d steps)", manifest.original, trace.wall_time, trace.steps_run)
    with stage("fuse"):
        objective = FusionObjective([original] + variants, bank, manifest.lam)
        fused = objective.fuse(trace.coefficients)
        masks = compose_masks(trace.coefficients, bank)
        summary = summarize(manifest, original, fused, trace)

    with stage("write artifacts"), staging_dir(manifest.out_dir) as tmp:
        write_image(fused, tmp / "enhanced.png", manifest.bit_depth)
        save_coefficients(trace.coefficients, tmp / "coefficients.txt", manifest.lam, (H, W))
        (tmp / "masks").mkdir()
        for i, m in enumerate(masks):
            write_image(mask_image(m), tmp / "masks" / f"mask_{i:02d}_raw.png", 8)
            write_image(mask_image(centered(m)), tmp / "masks" / f"mask_{i:02d}_centered.png", 8)
        rows = ["step\tcomposite\trecon\tpercep"]
        rows += [
            f"{k}\t{a!r}\t{b!r}\t{c!r}"
            for k, (a, b, c) in enumerate(zip(trace.composite.tolist(), trace.recon.tolist(), trace.percep.tolist()))
        ]
        atomic_write_bytes(tmp / "trace.tsv", ("\n".join(rows) + "\n").encode())
        write_records(tmp / "summary.jsonl", SUMMARY_FORMAT, [summary])
    return EnhanceResult(summary=summary, fused=fused, trace=trace)


def run_decompose(manifest: RunManifest, coefficient_path, out_dir) -> dict:
    """Write each source's masked contribution and check that they re-sum."""
    with stage("validate manifest"):
        manifest.validate()
    original, variants, _ = load_sources(manifest)
    H, W, _ = original.shape
    with stage("read coefficients"):
        coeffs = load_coefficients(coefficient_path)
        if coeffs.n_sources != len(variants) + 1:
            raise SchemaError(f"coefficient file has {coeffs.n_sources} sources, run has {len(variants) + 1}")
        if coeffs.bands != manifest.bands:
            raise SchemaError(f"coefficient file has {coeffs.bands} bands, manifest asks for {manifest.bands}")
        if coeffs.image_shape is not None and tuple(coeffs.image_shape) != (H, W):
            raise SchemaError(f"coefficient file is for {coeffs.image_shape} images, original is {(H, W)}")
    with stage("decompose"):
        images = [original] + variants
        masks = compose_masks(coeffs.values, bank_for(H, W, manifest.bands))
        parts = decompose_contributions(images, masks)
        fused = frequency_mixup(images, masks)
        max_diff = float(np.max(np.abs(np.sum(parts, axis=0) - fused)))
    record = {
        "max_abs_diff": max_diff,
        "tolerance": DECOMPOSE_TOL,
        "ok": max_diff <= DECOMPOSE_TOL,
        "components": [f"component_{i:02d}.png" for i in range(len(parts))],
        "fused": "fused.png",
    }
    with stage("write artifacts"), staging_dir(out_dir) as tmp:
        for name, part in zip(record["components"], parts):
            write_image(part, tmp / name, manifest.bit_depth)
        write_image(fused, tmp / "fused.png", manifest.bit_depth)
        write_records(tmp / "decompose.jsonl", "freqmix-decompose", [record])
    return record


def _lambda_dir(lam: float) -> str:
    return f"lambda_{lam:.6f}"


def _sweep_job(manifest: RunManifest) -> dict:
    return run_enhance(manifest).summary


SWEEP_COLUMNS = ("lambda", "recon", "proxy_score", "psnr", "ssim", "enhanced_path", "coefficient_path")


def run_sweep(manifest: RunManifest, lambdas, workers: int = 1) -> list[dict]:
    """Enhance once per lambda and write ``sweep.tsv`` with one row each."""
    lambdas = sorted(float(x) for x in lambdas)
    if not lambdas:
        raise SchemaError("lambda list must not be empty")
    jobs = []
    for lam in lambdas:
        job = replace(manifest, lam=lam, out_dir=str(Path(manifest.out_dir) / _lambda_dir(lam)))
        with stage("validate manifest"):
            job.validate()
        jobs.append(job)
    summaries = _map(_sweep_job, jobs, workers)
    rows = []
    for job, s in zip(jobs, summaries):
        rel = Path(_lambda_dir(job.lam))
        rows.append(
            {
                "lambda": s["lambda"],
                "recon": s["recon"],
                "proxy_score": s["proxy_score"],
                "psnr": s["psnr_to_original"],
                "ssim": s["ssim_to_original"],
                "enhanced_path": str(rel / s["enhanced"]),
                "coefficient_path": str(rel / s["coefficients"]),
            }
        )
    lines = ["\t".join(SWEEP_COLUMNS)]
    lines += ["\t".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in SWEEP_COLUMNS) for r in rows]
    Path(manifest.out_dir).mkdir(parents=True, exist_ok=True)
    atomic_write_bytes(Path(manifest.out_dir) / "sweep.tsv", ("\n".join(lines) + "\n").encode())
    return rows


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def draw_lambdas(index: int, lambdas=None, uniform_count: int | None = None, seed: int = 0) -> list[float]:
    """Lambdas for the ``index``-th corpus image: a fixed list or seeded uniform draws."""
    if (lambdas is None) == (uniform_count is None):
        raise SchemaError("give either a lambda list or a uniform sample count")
    if lambdas is not None:
        return [float(x) for x in lambdas]
    rng = np.random.default_rng([seed, index])
    return rng.uniform(0.0, 1.0, int(uniform_count)).tolist()


@dataclass
class ExportJob:
    original: str
    lam: float
    out_dir: str
    template: RunManifest


def _export_job(job: ExportJob) -> dict:
    record = {"original_path": job.original, "lambda": job.lam}
    manifest = replace(job.template, original=job.original, lam=job.lam, out_dir=job.out_dir)
    try:
        run_enhance(manifest)
    except (FreqMixError, OSError) as exc:
        record["error"] = str(exc)
        return record
    out = Path(job.out_dir)
    record.update(
        enhanced_path=str(out / "enhanced.png"),
        coefficient_path=str(out / "coefficients.txt"),
        checksums={
            "original": sha256_file(job.original),
            "enhanced": sha256_file(out / "enhanced.png"),
            "coefficients": sha256_file(out / "coefficients.txt"),
        },
    )
    return record


def run_export(
    originals: list[str],
    out_dir,
    template: RunManifest,
    lambdas=None,
    uniform_count: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> list[dict]:
    """Enhance every (image, lambda) pair and write ``index.jsonl``.

    Failures are recorded with an ``error`` field; the export continues.
    Records appear in input order regardless of ``workers``.
    """
    out = Path(out_dir)
    jobs = []
    for i, path in enumerate(originals):
        stem = Path(path).stem
        for k, lam in enumerate(draw_lambdas(i, lambdas, uniform_count, seed)):
            jobs.append(ExportJob(path, lam, str(out / "pairs" / f"{i:04d}_{stem}" / f"l{k:02d}"), template))
    records = _map(_export_job, jobs, workers)
    out.mkdir(parents=True, exist_ok=True)
    write_records(out / "index.jsonl", INDEX_FORMAT, records, seed=seed)
    return records


def verify_index(records: list[dict]) -> bool:
    """True when every successful record's files exist and match their checksums."""
    for r in records:
        if "error" in r:
            continue
        for key, path in (("original", r["original_path"]), ("enhanced", r["enhanced_path"]), ("coefficients", r["coefficient_path"])):
            if not os.path.isfile(path) or sha256_file(path) != r["checksums"][key]:
                return False
    return True


def run_gen_variants(original_path, cfg: VariantConfig, out_dir, bit_depth: int = 16) -> list[str]:
    with stage("read original"):
        original = read_image(original_path)
    with stage("generate variants"):
        variants = make_variant_set(original, cfg)
    names = [f"variant_x{s}.png" for s in cfg.scales]
    with stage("write artifacts"), staging_dir(out_dir) as tmp:
        for name, v in zip(names, variants):
            write_image(v, tmp / name, bit_depth)
    return [str(Path(out_dir) / n) for n in names]
