"""Acceptance criteria 1-11, each at its stated tolerance and time budget.

Every test prints one ``PASS``/``FAIL`` line (also repeated in the pytest
summary) before asserting.
"""

import contextlib
import math
import os
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from freqmix import pipeline
from freqmix.corpus import corpus_paths, load_corpus
from freqmix.imageio import write_image
from freqmix.manifest import RunManifest
from freqmix.metrics import psnr, ssim
from freqmix.objective import FusionObjective, loss_gradient_wrt_coeffs, perceptual_proxy_score
from freqmix.optimizer import OptimizerConfig, optimize_coefficients
from freqmix.spectral import bank_for, compose_masks, frequency_mixup
from freqmix.variants import VariantConfig, make_variant_set, resample_bicubic

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

SIZES = [(8, 8), (17, 31), (64, 64)]
SWEEP = [0.1, 0.3, 0.5, 0.7, 0.9]


def report(n: int, ok: bool, detail: str, capsys) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)


def single_threaded():
    return threadpool_limits(limits=1) if threadpool_limits else contextlib.nullcontext()


@pytest.fixture(scope="module")
def corpus():
    return load_corpus()


@pytest.fixture(scope="module")
def corpus_variants(corpus):
    return {name: make_variant_set(img) for name, img in corpus}


def fused_output(img, variants, bank, coeffs):
    return np.clip(FusionObjective([img] + variants, bank, 0.0).fuse(coeffs), 0.0, 1.0)


def test_c01_partition_of_unity(capsys):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(100):
        H, W = SIZES[k % 3]
        B = int(rng.integers(2, 30))
        n = int(rng.integers(2, 6))
        masks = compose_masks(rng.normal(0.0, 10.0, (n, B)), bank_for(H, W, B))
        worst = max(worst, float(np.max(np.abs(masks.sum(axis=0) - 1.0))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 5.0
    report(1, ok, f"max |sum M - 1| = {worst:.2e} (< 1e-12), {elapsed:.2f}s (< 5s)", capsys)
    assert ok


def test_c02_real_output(capsys):
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(30):
        H, W = SIZES[k % 3]
        n, B = int(rng.integers(2, 5)), int(rng.integers(2, 26))
        images = [rng.random((H, W, 3)) for _ in range(n)]
        masks = compose_masks(rng.normal(0.0, 5.0, (n, B)), bank_for(H, W, B))
        _, residual = frequency_mixup(images, masks, return_residual=True)
        worst = max(worst, residual)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 5.0
    report(2, ok, f"max imaginary residual = {worst:.2e} (< 1e-9), {elapsed:.2f}s (< 5s)", capsys)
    assert ok


def test_c03_direct_dft_oracle(capsys):
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        H, W = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        n = 1 + int(rng.integers(1, 4))
        B = int(rng.integers(2, 5))
        C = int(rng.choice([1, 3]))
        images = [rng.random((H, W, C)) for _ in range(n)]
        masks = compose_masks(rng.normal(0.0, 3.0, (n, B)), bank_for(H, W, B))
        worst = max(worst, float(np.max(np.abs(frequency_mixup(images, masks) - oracles.fuse(images, masks)))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 10.0
    report(3, ok, f"max |mixup - direct DFT| = {worst:.2e} (< 1e-9), {elapsed:.2f}s (< 10s)", capsys)
    assert ok


def test_c04_gradient_finite_differences(capsys):
    rng = np.random.default_rng(104)
    t0 = time.perf_counter()
    worst_rel = worst_abs = 0.0
    for _ in range(25):
        H, W = int(rng.integers(4, 17)), int(rng.integers(4, 17))
        n, B = 1 + int(rng.integers(1, 4)), int(rng.integers(2, 7))
        C = int(rng.choice([1, 3]))
        # sources kept inside (0.2, 0.8) so no fused pixel sits on the clamp kink
        base = 0.3 + 0.4 * rng.random((H, W, C))
        images = [base] + [np.clip(base + 0.15 * rng.standard_normal(base.shape), 0.2, 0.8) for _ in range(n - 1)]
        coeffs = rng.normal(0.0, 0.5, (n, B))
        bank = bank_for(H, W, B)
        for lam in (0.0, 0.3, 1.0):
            grad = loss_gradient_wrt_coeffs(images, coeffs, bank, lam)

            def f(c, lam=lam):
                return FusionObjective(images, bank, lam).loss(c).composite

            rel, tiny = oracles.gradient_error(grad, oracles.central_difference(f, coeffs, 1e-4))
            worst_rel, worst_abs = max(worst_rel, rel), max(worst_abs, tiny)
    elapsed = time.perf_counter() - t0
    ok = worst_rel < 1e-5 and worst_abs < 1e-8 and elapsed < 60.0
    report(4, ok, f"max rel err = {worst_rel:.2e} (< 1e-5), tiny-entry abs err = {worst_abs:.1e}, "
                  f"{elapsed:.1f}s (< 60s)", capsys)
    assert ok


def test_c05_lambda0_identity(corpus, corpus_variants, capsys):
    t0 = time.perf_counter()
    bank = bank_for(128, 128, 25)
    values = {}
    for name, img in corpus:
        trace = optimize_coefficients(img, corpus_variants[name], bank, 0.0, OptimizerConfig(steps=300))
        values[name] = psnr(fused_output(img, corpus_variants[name], bank, trace.coefficients), img)
    elapsed = time.perf_counter() - t0
    worst = min(values.values())
    ok = worst >= 60.0 and len(values) == 10 and elapsed < 120.0
    report(5, ok, f"min PSNR at lambda=0 = {worst:.1f} dB over {len(values)} images (>= 60), "
                  f"{elapsed:.1f}s (< 120s)", capsys)
    assert ok


def test_c06_lambda_tradeoff(corpus, corpus_variants, capsys):
    t0 = time.perf_counter()
    bank = bank_for(128, 128, 25)
    wins, monotone, worst_rise = 0, 0, -math.inf
    for name, img in corpus:
        variants = corpus_variants[name]
        scores, psnrs = [], []
        for lam in SWEEP:
            trace = optimize_coefficients(img, variants, bank, lam)
            out = fused_output(img, variants, bank, trace.coefficients)
            scores.append(perceptual_proxy_score(out))
            psnrs.append(psnr(out, img))
        wins += scores[-1] > scores[0]
        rises = [psnrs[k + 1] - psnrs[k] for k in range(len(SWEEP) - 1)]
        worst_rise = max(worst_rise, max(rises))
        monotone += all(r <= 0.5 for r in rises)
    elapsed = time.perf_counter() - t0
    ok = wins >= 9 and monotone == len(corpus) and elapsed < 600.0
    report(6, ok, f"proxy(0.9) > proxy(0.1) on {wins}/10 (>= 9); PSNR non-increasing within 0.5 dB on "
                  f"{monotone}/10 (largest rise {worst_rise:+.2f} dB); {elapsed:.0f}s (< 600s)", capsys)
    assert ok


def test_c07_identity_fusion(capsys):
    rng = np.random.default_rng(107)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(20):
        H, W = SIZES[k % 3]
        n, B = int(rng.integers(2, 6)), int(rng.integers(2, 26))
        img = rng.random((H, W, 3))
        masks = compose_masks(rng.normal(0.0, 20.0, (n, B)), bank_for(H, W, B))
        worst = max(worst, float(np.max(np.abs(frequency_mixup([img] * n, masks) - img))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 5.0
    report(7, ok, f"max |fused - input| = {worst:.2e} (< 1e-10), {elapsed:.2f}s (< 5s)", capsys)
    assert ok


def test_c08_basis_endpoints(capsys):
    t0 = time.perf_counter()
    ok_params = True
    min_cover = math.inf
    for H, W in [(2, 2), (8, 8), (17, 31), (64, 64), (127, 255), (256, 384), (511, 512), (512, 512)]:
        bank = bank_for(H, W, 25)
        ok_params &= bank.mus[0] == 0.0 and bank.mus[-1] == bank.d_max
        ok_params &= bank.sigmas[0] == 0.05 and bank.sigmas[-1] == 0.55
        ok_params &= bank.d_max == math.sqrt(H * H + W * W) / 2
        min_cover = min(min_cover, float(bank.masks.sum(axis=0).min()))
    elapsed = time.perf_counter() - t0
    ok = bool(ok_params) and min_cover > 1e-6 and elapsed < 10.0
    report(8, ok, f"endpoints exact = {bool(ok_params)}, min sum R_b = {min_cover:.3f} (> 1e-6), "
                  f"{elapsed:.2f}s (< 10s)", capsys)
    assert ok


def test_c09_metric_oracles(capsys):
    rng = np.random.default_rng(109)
    t0 = time.perf_counter()
    worst_psnr = worst_ssim = 0.0
    ident = True
    for k in range(10):
        C = 3 if k % 2 else 1
        a = rng.random((16, 16, C))
        b = np.clip(a + rng.normal(0.0, 0.1 * (k + 1) / 10, a.shape), 0.0, 1.0)
        worst_psnr = max(worst_psnr, abs(psnr(a, b) - oracles.psnr(a, b)))
        worst_ssim = max(worst_ssim, abs(ssim(a, b) - oracles.ssim(a, b)))
        ident &= ssim(a, a) == 1.0
    elapsed = time.perf_counter() - t0
    ok = worst_psnr < 1e-9 and worst_ssim < 1e-9 and ident and elapsed < 5.0
    report(9, ok, f"PSNR err = {worst_psnr:.1e}, SSIM err = {worst_ssim:.1e} (< 1e-9), ssim(a,a)=1: {ident}, "
                  f"{elapsed:.2f}s (< 5s)", capsys)
    assert ok


def test_c10_pipeline_determinism(tmp_path, capsys):
    original = next(str(p) for p in corpus_paths() if "astronaut" in p.name)
    t0 = time.perf_counter()
    for run in ("a", "b"):
        m = RunManifest(original=original, out_dir=str(tmp_path / run), variant_config=VariantConfig(), seed=5)
        pipeline.run_enhance(m)
    elapsed = time.perf_counter() - t0
    same = all(
        (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        for f in ("coefficients.txt", "summary.jsonl")
    )
    ok = same and elapsed < 60.0
    report(10, ok, f"coefficients and summary byte-identical = {same}, {elapsed:.1f}s for two runs (< 60s)", capsys)
    assert ok


def test_c11_performance(tmp_path, corpus, capsys):
    img = dict(corpus)["00_astronaut"]
    big = tmp_path / "big.png"
    write_image(resample_bicubic(img, 512, 512), big, 16)
    manifest = RunManifest(original=str(big), out_dir=str(tmp_path / "big"), variant_config=VariantConfig())
    with single_threaded():
        t0 = time.perf_counter()
        summary = pipeline.run_enhance(manifest).summary
        single = time.perf_counter() - t0
    shape_ok = (summary["height"], summary["width"], summary["channels"]) == (512, 512, 3)
    shape_ok &= summary["n_sources"] == 4 and summary["bands"] == 25 and summary["steps_run"] == 300

    originals = [str(p) for p in corpus_paths()]
    template = RunManifest(original=originals[0], out_dir="", variant_config=VariantConfig())
    with single_threaded():
        t0 = time.perf_counter()
        seq = pipeline.run_export(originals, tmp_path / "seq", template, lambdas=[0.3], workers=1)
        t_seq = time.perf_counter() - t0
    t0 = time.perf_counter()
    par = pipeline.run_export(originals, tmp_path / "par", template, lambdas=[0.3], workers=4)
    t_par = time.perf_counter() - t0
    speedup = t_seq / t_par
    consistent = [r["checksums"] for r in seq] == [r["checksums"] for r in par]
    cpus = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    ok = shape_ok and single < 60.0 and speedup > 1.5 and consistent
    report(11, ok, f"512x512 RGB enhance {single:.1f}s (< 60s); 10-image export {t_seq:.1f}s -> {t_par:.1f}s "
                   f"at 4 workers, speedup {speedup:.2f}x (> 1.5x) on {cpus} CPU(s); outputs identical: {consistent}",
           capsys)
    assert ok
