"""Access to the bundled 128x128 test corpus."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .imageio import read_image


def corpus_paths() -> list[Path]:
    root = resources.files("freqmix") / "data" / "corpus"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".png"))


def load_corpus() -> list[tuple[str, np.ndarray]]:
    """``(stem, image)`` pairs in file-name order."""
    return [(p.stem, read_image(p)) for p in corpus_paths()]
