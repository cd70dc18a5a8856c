"""Command-line interface: ``freqmix <command> [options]``.

Exit codes: 0 success, 2 usage or manifest error, 3 I/O error,
4 numerical divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import metrics, pipeline
from .errors import FreqMixError, ManifestError
from .imageio import read_image
from .manifest import RunManifest, load_corpus_manifest
from .optimizer import OptimizerConfig
from .spectral import bank_for
from .variants import ENHANCERS, VariantConfig

log = logging.getLogger("freqmix")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run options")
    g.add_argument("--manifest", help="run manifest (JSONL); explicit flags override its fields")
    g.add_argument("--lambda", dest="lam", type=float, help="enhancement level in [0, 1] (default 0.3)")
    g.add_argument("--bands", type=int, help="number of basis rings (default 25)")
    g.add_argument("--scales", type=_int_list, help="variant scale factors (default 2,3,4)")
    g.add_argument("--steps", type=int, help="optimizer steps (default 300)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--out-dir", help="output directory (default out)")
    g.add_argument("--enhancer", choices=ENHANCERS, help="variant enhancer (default unsharp)")
    g.add_argument("--variants", nargs="+", metavar="PNG", help="externally produced variant images")
    g.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    g.add_argument("--bit-depth", type=int, choices=(8, 16), help="bit depth of written images (default 16)")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freqmix", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common()]

    p = sub.add_parser("enhance", parents=common, help="optimise masks and write the enhanced image")
    p.add_argument("original", nargs="?")

    p = sub.add_parser("decompose", parents=common, help="write each source's masked contribution")
    p.add_argument("original", nargs="?")
    p.add_argument("--coefficients", required=True, help="coefficient file from a previous enhance run")

    p = sub.add_parser("sweep", parents=common, help="enhance at several lambdas and tabulate")
    p.add_argument("original", nargs="?")
    p.add_argument("--lambdas", type=_float_list, required=True, help="comma-separated lambda values")

    p = sub.add_parser("gen-variants", parents=common, help="write the generated variants as PNGs")
    p.add_argument("original")

    p = sub.add_parser("export-dataset", parents=common, help="enhance a corpus and write a pair index")
    p.add_argument("corpus", help="directory of PNGs or corpus manifest")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--lambdas", type=_float_list, help="fixed comma-separated lambda list")
    grp.add_argument("--uniform", type=int, metavar="COUNT", help="draw COUNT lambdas per image from U[0, 1]")

    p = sub.add_parser("stats", parents=common, help="print proxy scores and band energies")
    p.add_argument("images", nargs="+")
    p.add_argument("--reference", help="reference image for PSNR and SSIM")
    return parser


def manifest_from_args(args, original: str | None) -> RunManifest:
    """Combine ``--manifest`` (if any) with explicit flags, flags winning."""
    if args.manifest:
        m = RunManifest.load(args.manifest)
    else:
        if original is None:
            raise ManifestError("give an original image or --manifest")
        m = RunManifest(original=original, out_dir="out", variant_config=VariantConfig())
    if original is not None:
        m = replace(m, original=original)
    if args.variants is not None:
        if args.enhancer not in (None, "external"):
            raise ManifestError("--variants implies --enhancer external")
        m = replace(m, variant_paths=list(args.variants), variant_config=None)
    elif args.enhancer == "external":
        raise ManifestError("--enhancer external requires --variants")
    elif args.enhancer is not None or args.scales is not None:
        cfg = m.variant_config or VariantConfig()
        if args.enhancer is not None:
            cfg = replace(cfg, enhancer=args.enhancer)
        if args.scales is not None:
            cfg = replace(cfg, scales=tuple(args.scales))
        m = replace(m, variant_config=cfg, variant_paths=None)
    updates = {}
    if args.lam is not None:
        updates["lam"] = args.lam
    if args.bands is not None:
        updates["bands"] = args.bands
    if args.out_dir is not None:
        updates["out_dir"] = args.out_dir
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.bit_depth is not None:
        updates["bit_depth"] = args.bit_depth
    if args.steps is not None:
        updates["optimizer"] = replace(m.optimizer, steps=args.steps)
    return replace(m, **updates)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def cmd_enhance(args) -> None:
    m = manifest_from_args(args, args.original)
    result = pipeline.run_enhance(m)
    _emit(result.summary)


def cmd_decompose(args) -> None:
    m = manifest_from_args(args, args.original)
    record = pipeline.run_decompose(m, args.coefficients, m.out_dir)
    status = "OK" if record["ok"] else "MISMATCH"
    print(f"verify: components re-sum to fused image, max abs diff {record['max_abs_diff']:.3e} "
          f"(tolerance {record['tolerance']:.0e}) {status}")
    if not record["ok"]:
        raise FreqMixError("decomposition does not re-sum to the fused image")


def cmd_sweep(args) -> None:
    if not args.lambdas:
        raise ManifestError("lambda list must not be empty")
    m = manifest_from_args(args, args.original)
    rows = pipeline.run_sweep(m, args.lambdas, workers=args.workers)
    for r in rows:
        _emit(r)


def cmd_gen_variants(args) -> None:
    if args.variants is not None or args.enhancer == "external":
        raise ManifestError("gen-variants cannot use external variants")
    cfg = VariantConfig(
        scales=tuple(args.scales) if args.scales else (2, 3, 4),
        enhancer=args.enhancer or "unsharp",
    )
    for path in pipeline.run_gen_variants(args.original, cfg, args.out_dir or "variants", args.bit_depth or 16):
        print(path)


def cmd_export(args) -> None:
    template = manifest_from_args(args, "<corpus>") if not args.manifest else manifest_from_args(args, None)
    if template.variant_paths is not None:
        raise ManifestError("dataset export generates variants per image; --variants is not allowed")
    originals = load_corpus_manifest(args.corpus)
    if not originals:
        raise ManifestError(f"corpus {args.corpus} lists no images")
    seed = args.seed if args.seed is not None else 0
    records = pipeline.run_export(
        originals,
        args.out_dir or "dataset",
        template,
        lambdas=args.lambdas,
        uniform_count=args.uniform,
        seed=seed,
        workers=args.workers,
    )
    failed = sum("error" in r for r in records)
    print(f"{len(records) - failed} pairs written, {failed} failed")


def cmd_stats(args) -> None:
    ref = read_image(args.reference) if args.reference else None
    B = args.bands or 25
    for path in args.images:
        img = read_image(path)
        rec = {"path": path, **metrics.proxy_scores(img)}
        rec["band_energy"] = metrics.band_energy_profile(img, bank_for(img.shape[0], img.shape[1], B)).tolist()
        if ref is not None:
            rec["psnr"] = metrics.psnr(img, ref)
            if min(img.shape[:2]) >= metrics.SSIM_WINDOW:
                rec["ssim"] = metrics.ssim(img, ref)
        _emit(rec)


COMMANDS = {
    "enhance": cmd_enhance,
    "decompose": cmd_decompose,
    "sweep": cmd_sweep,
    "gen-variants": cmd_gen_variants,
    "export-dataset": cmd_export,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except FreqMixError as exc:
        print(f"freqmix {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"freqmix {args.command}: I/O error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"freqmix {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
