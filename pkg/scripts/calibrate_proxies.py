"""Derive the default proxy normalisation from the bundled corpus.

Each proxy is divided by ``max_raw / RECON_REFERENCE``, where ``max_raw`` is
its largest value over the corpus and its default variants, so normalised
proxies are measured in units of a typical variant's squared error.
"""

import numpy as np

from freqmix.corpus import load_corpus
from freqmix.proxies import RAW_PROXIES
from freqmix.variants import make_variant_set

RECON_REFERENCE = 1e-3


def main():
    peaks = dict.fromkeys(RAW_PROXIES, 0.0)
    mses = []
    for _, img in load_corpus():
        variants = make_variant_set(img)
        mses += [float(np.mean((v - img) ** 2)) for v in variants]
        for x in [img] + variants:
            for name, fn in RAW_PROXIES.items():
                peaks[name] = max(peaks[name], fn(np.clip(x, 0, 1))[0])
    print(f"variant MSE: median {np.median(mses):.2e}, max {max(mses):.2e}")
    for name, peak in peaks.items():
        print(f"{name}: max raw {peak:.4f} -> scale {peak / RECON_REFERENCE:.1f}")


if __name__ == "__main__":
    main()
