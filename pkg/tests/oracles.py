"""Slow, direct reference implementations used as test oracles.

Nothing here imports the package's numerical code; each oracle follows the
textbook definition with explicit loops or dense sums.
"""

from __future__ import annotations

import math

import numpy as np


def dft_matrix(H: int, W: int, sign: float = -1.0) -> np.ndarray:
    """Dense ``(HW, HW)`` unitary 2-D DFT operator built from the defining sum."""
    h, w = np.meshgrid(np.arange(H), np.arange(W), indexing="ij")
    h, w = h.ravel(), w.ravel()
    phase = np.outer(h, h) / H + np.outer(w, w) / W
    return np.exp(sign * 2j * math.pi * phase) / math.sqrt(H * W)


def dft2(x: np.ndarray) -> np.ndarray:
    """Unitary 2-D DFT of a 2-D array as a dense O((HW)^2) sum."""
    H, W = x.shape
    return (dft_matrix(H, W) @ x.ravel()).reshape(H, W)


def idft2(X: np.ndarray) -> np.ndarray:
    H, W = X.shape
    return (dft_matrix(H, W, +1.0) @ X.ravel()).reshape(H, W)


def signed(k: int, n: int) -> int:
    return k if k <= n // 2 else k - n


def distance(h: int, w: int, H: int, W: int) -> float:
    return math.hypot(signed(h, H), signed(w, W))


def ring_bank(H: int, W: int, B: int) -> np.ndarray:
    """Gaussian rings with quadratic centre/spread schedules, bin by bin."""
    d_max = math.sqrt(H * H + W * W) / 2.0
    out = np.zeros((B, H, W))
    for b in range(B):
        t = (b / (B - 1)) ** 2
        mu = d_max * t
        sigma = (0.05 + 0.5 * t) * d_max
        for h in range(H):
            for w in range(W):
                out[b, h, w] = math.exp(-((distance(h, w, H, W) - mu) ** 2) / (2.0 * sigma * sigma))
    return out


def softmax_masks(coeffs: np.ndarray, rings: np.ndarray) -> np.ndarray:
    n, B = coeffs.shape
    _, H, W = rings.shape
    out = np.zeros((n, H, W))
    for h in range(H):
        for w in range(W):
            s = [sum(coeffs[i, b] * rings[b, h, w] for b in range(B)) for i in range(n)]
            top = max(s)
            e = [math.exp(v - top) for v in s]
            z = sum(e)
            for i in range(n):
                out[i, h, w] = e[i] / z
    return out


def fuse(images: list[np.ndarray], masks: np.ndarray) -> np.ndarray:
    """Direct-DFT fusion: per channel, sum of masked spectra, inverse DFT."""
    H, W, C = images[0].shape
    out = np.zeros((H, W, C))
    for c in range(C):
        acc = np.zeros((H, W), dtype=complex)
        for i, im in enumerate(images):
            acc += masks[i] * dft2(im[:, :, c])
        out[:, :, c] = idft2(acc).real
    return out


def correlate_valid(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Valid 2-D correlation of one channel with explicit loops."""
    H, W = x.shape
    kh, kw = k.shape
    out = np.zeros((H - kh + 1, W - kw + 1))
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            out[i, j] = sum(k[a, b] * x[i + a, j + b] for a in range(kh) for b in range(kw))
    return out


SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
LAPLACE = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


def tenengrad(img: np.ndarray) -> float:
    total, count = 0.0, 0
    for c in range(img.shape[2]):
        gx = correlate_valid(img[:, :, c], SOBEL_X)
        gy = correlate_valid(img[:, :, c], SOBEL_X.T)
        total += float(np.sum(gx**2 + gy**2))
        count += gx.size
    return total / count


def laplacian_variance(img: np.ndarray) -> float:
    vals = []
    for c in range(img.shape[2]):
        lap = correlate_valid(img[:, :, c], LAPLACE)
        vals.append(float(np.mean((lap - lap.mean()) ** 2)))
    return float(np.mean(vals))


def hf_energy_ratio(img: np.ndarray, cutoff: float = 0.25) -> float:
    H, W, C = img.shape
    d_max = math.sqrt(H * H + W * W) / 2.0
    high = total = 0.0
    for c in range(C):
        X = dft2(img[:, :, c])
        for h in range(H):
            for w in range(W):
                e = abs(X[h, w]) ** 2
                total += e
                if distance(h, w, H, W) > cutoff * d_max:
                    high += e
    return high / total if total > 0 else 0.0


def mse(a: np.ndarray, b: np.ndarray) -> float:
    s = 0.0
    for x, y in zip(a.ravel(), b.ravel()):
        s += (x - y) ** 2
    return s / a.size


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    m = mse(a, b)
    return 150.0 if m == 0 else min(150.0, 10.0 * math.log10(1.0 / m))


def ssim(a: np.ndarray, b: np.ndarray, win: int = 11, sigma: float = 1.5) -> float:
    """Gaussian-window SSIM evaluated window by window."""
    t = np.arange(win) - win // 2
    g1 = np.exp(-(t * t) / (2 * sigma * sigma))
    g = np.outer(g1, g1)
    g /= g.sum()
    c1, c2 = 0.01**2, 0.03**2
    H, W, C = a.shape
    per_channel = []
    for c in range(C):
        vals = []
        for i in range(H - win + 1):
            for j in range(W - win + 1):
                pa = a[i : i + win, j : j + win, c]
                pb = b[i : i + win, j : j + win, c]
                ma, mb = np.sum(g * pa), np.sum(g * pb)
                va = np.sum(g * (pa - ma) ** 2)
                vb = np.sum(g * (pb - mb) ** 2)
                cov = np.sum(g * (pa - ma) * (pb - mb))
                vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
        per_channel.append(np.mean(vals))
    return float(np.mean(per_channel))


def central_difference(f, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += step
        xm[idx] -= step
        g[idx] = (f(xp) - f(xm)) / (2.0 * step)
    return g


def gradient_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> tuple[float, float]:
    """``(max relative error, max absolute error on tiny entries)``.

    Entries where both gradients are below ``floor`` in magnitude are
    compared absolutely; all others relatively.
    """
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    err = np.abs(analytic - numeric)
    big = scale >= floor
    rel = float(np.max(err[big] / scale[big])) if big.any() else 0.0
    tiny = float(np.max(err[~big])) if (~big).any() else 0.0
    return rel, tiny
