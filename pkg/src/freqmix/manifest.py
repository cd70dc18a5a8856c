"""Versioned line-delimited JSON files: run manifests, corpus lists, indexes.

Every file starts with a header line ``{"format": ..., "version": ...}``
followed by one JSON object per line.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ManifestError, ParseError
from .imageio import atomic_write_bytes
from .optimizer import OptimizerConfig
from .variants import VariantConfig

VERSION = 1
MANIFEST_FORMAT = "freqmix-manifest"
CORPUS_FORMAT = "freqmix-corpus"
INDEX_FORMAT = "freqmix-index"
SUMMARY_FORMAT = "freqmix-summary"


def dumps_records(fmt: str, records, **header) -> str:
    head = {"format": fmt, "version": VERSION, **header}
    lines = [json.dumps(head, sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True) for r in records]
    return "\n".join(lines) + "\n"


def write_records(path, fmt: str, records, **header) -> None:
    atomic_write_bytes(path, dumps_records(fmt, records, **header).encode("utf-8"))


def read_records(path, fmt: str) -> tuple[dict, list[dict]]:
    """Return ``(header, records)``, checking the format tag and version."""
    with open(path, encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty file", field="format")
    parsed = []
    for lineno, ln in enumerate(lines, 1):
        try:
            parsed.append(json.loads(ln))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc.msg}") from None
    header, records = parsed[0], parsed[1:]
    if not isinstance(header, dict) or header.get("format") != fmt:
        raise ParseError(f"{path}: expected a {fmt} file", field="format")
    if header.get("version") != VERSION:
        raise ParseError(f"{path}: unsupported version {header.get('version')!r}", field="version")
    if not all(isinstance(r, dict) for r in records):
        raise ParseError(f"{path}: every record must be a JSON object")
    return header, records


@dataclass
class RunManifest:
    """Everything needed to reproduce one enhancement run.

    Exactly one of ``variant_paths`` (externally produced variants) and
    ``variant_config`` (variants generated here) is set.
    """

    original: str
    out_dir: str
    variant_paths: list[str] | None = None
    variant_config: VariantConfig | None = None
    lam: float = 0.3
    bands: int = 25
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    bit_depth: int = 16

    def validate(self, check_files: bool = True) -> "RunManifest":
        """Raise :class:`ManifestError` on the first violated constraint."""
        if (self.variant_paths is None) == (self.variant_config is None):
            raise ManifestError("exactly one of variant paths and variant config must be given")
        if not isinstance(self.lam, (int, float)) or not math.isfinite(self.lam) or not 0.0 <= self.lam <= 1.0:
            raise ManifestError(f"lambda must lie in [0, 1], got {self.lam!r}")
        if int(self.bands) != self.bands or self.bands < 2:
            raise ManifestError(f"bands must be an integer >= 2, got {self.bands!r}")
        if self.bit_depth not in (8, 16):
            raise ManifestError(f"bit depth must be 8 or 16, got {self.bit_depth!r}")
        if self.variant_paths is not None and len(self.variant_paths) == 0:
            raise ManifestError("variant path list is empty")
        if self.variant_config is not None and self.variant_config.enhancer == "external":
            raise ManifestError("enhancer 'external' requires variant paths")
        if check_files:
            for p in [self.original] + list(self.variant_paths or []):
                if not os.path.isfile(p):
                    raise ManifestError(f"input file not found: {p}")
        return self

    def to_record(self) -> dict:
        rec = {
            "original": self.original,
            "out_dir": self.out_dir,
            "lambda": self.lam,
            "bands": self.bands,
            "optimizer": asdict(self.optimizer),
            "seed": self.seed,
            "bit_depth": self.bit_depth,
        }
        if self.variant_paths is not None:
            rec["variants"] = list(self.variant_paths)
        if self.variant_config is not None:
            cfg = asdict(self.variant_config)
            cfg["scales"] = list(cfg["scales"])
            rec["variant_config"] = cfg
        return rec

    @classmethod
    def from_record(cls, rec: dict, base: Path | None = None) -> "RunManifest":
        def resolve(p):
            return str(base / p) if base is not None and not os.path.isabs(p) else p

        try:
            variants = rec.get("variants")
            cfg = rec.get("variant_config")
            return cls(
                original=resolve(rec["original"]),
                out_dir=resolve(rec.get("out_dir", "out")),
                variant_paths=[resolve(p) for p in variants] if variants is not None else None,
                variant_config=VariantConfig(**cfg) if cfg is not None else None,
                lam=rec.get("lambda", 0.3),
                bands=rec.get("bands", 25),
                optimizer=OptimizerConfig(**rec.get("optimizer", {})),
                seed=rec.get("seed", 0),
                bit_depth=rec.get("bit_depth", 16),
            )
        except KeyError as exc:
            raise ManifestError(f"manifest is missing field {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ManifestError(f"malformed manifest: {exc}") from None

    def save(self, path) -> None:
        write_records(path, MANIFEST_FORMAT, [self.to_record()])

    @classmethod
    def load(cls, path) -> "RunManifest":
        _, records = read_records(path, MANIFEST_FORMAT)
        if len(records) != 1:
            raise ManifestError(f"{path}: expected exactly one run record, found {len(records)}")
        return cls.from_record(records[0], Path(path).resolve().parent)


def load_corpus_manifest(path) -> list[str]:
    """Image paths listed in a corpus manifest (or every PNG of a directory)."""
    path = Path(path)
    if path.is_dir():
        return sorted(str(p) for p in path.iterdir() if p.suffix.lower() == ".png")
    _, records = read_records(path, CORPUS_FORMAT)
    base = path.resolve().parent
    try:
        return [str(base / r["original"]) if not os.path.isabs(r["original"]) else r["original"] for r in records]
    except KeyError:
        raise ManifestError(f"{path}: every corpus record needs an 'original' field") from None
