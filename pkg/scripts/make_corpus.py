"""Regenerate the bundled 128x128 test corpus from scikit-image sample data."""

from pathlib import Path

import numpy as np
from skimage import data, transform

from freqmix.imageio import write_image

SIZE = 128
NAMES = ["astronaut", "camera", "coffee", "chelsea", "rocket", "coins", "moon", "brick", "grass", "gravel"]
OUT = Path(__file__).resolve().parents[1] / "src" / "freqmix" / "data" / "corpus"


def square_crop(img):
    h, w = img.shape[:2]
    s = min(h, w)
    top, left = (h - s) // 2, (w - s) // 2
    return img[top : top + s, left : left + s]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for i, name in enumerate(NAMES):
        img = getattr(data, name)().astype(np.float64) / 255.0
        img = transform.resize(square_crop(img), (SIZE, SIZE), order=3, anti_aliasing=True)
        write_image(np.clip(img, 0.0, 1.0), OUT / f"{i:02d}_{name}.png", bitdepth=8)


if __name__ == "__main__":
    main()
