"""Phantom generation, noise injection with calibrated discrepancy, the
synthetic piecewise-constant image set, and image metrics."""

import math
from dataclasses import dataclass

import numpy as np

from .bregman import BregmanLoss
from .rng import Prng


@dataclass
class NoiseSpec:
    std: float = 0.0
    seed: int = 0
    clip_nonneg: bool = False

    def __post_init__(self):
        if self.std < 0:
            raise ValueError("noise standard deviation must be >= 0")


def circle_phantom(h, w, radius_frac=0.25, value=1.0):
    """Binary disk centred in an h x w image."""
    if h < 1 or w < 1:
        raise ValueError("image dimensions must be positive")
    if not 0.0 < radius_frac < 0.5:
        raise ValueError("radius_frac must lie in (0, 0.5)")
    ci, cj = (h - 1) / 2.0, (w - 1) / 2.0
    radius = radius_frac * min(h, w)
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    mask = (ii - ci) ** 2 + (jj - cj) ** 2 <= radius**2
    out = np.zeros((h, w))
    out[mask] = value
    return out


def add_noise(y, spec: NoiseSpec, penalty=None, pre_activation=None):
    """Perturb y with seeded Gaussian noise; returns (y_delta, delta_sq).

    delta_sq is the realised discrepancy: the Bregman loss against the
    clean pre-activation when one is supplied, the squared Euclidean
    half-distance otherwise.
    """
    y = np.asarray(y, dtype=np.float64)
    rng = Prng(spec.seed)
    y_delta = y + rng.normal(y.shape, std=spec.std) if spec.std > 0 else y.copy()
    if spec.clip_nonneg:
        y_delta = np.maximum(0.0, y_delta)
    if penalty is not None and pre_activation is not None:
        delta_sq = BregmanLoss(penalty).loss(y_delta, pre_activation)
    else:
        diff = (y_delta - y).ravel()
        delta_sq = 0.5 * float(np.dot(diff, diff))
    return y_delta, delta_sq


def synthetic_shapes(n, h=28, w=28, seed=0):
    """Piecewise-constant images (random rectangles and disks) in [0, 1].

    Stands in for digit images when no IDX dataset is available; the
    flat regions and sharp edges are exactly what a TV prior favours.
    """
    rng = Prng(seed)
    imgs = np.zeros((n, h, w))
    for i in range(n):
        img = imgs[i]
        for _ in range(1 + int(rng.uniform() * 3)):
            hh = 3 + int(rng.uniform() * (h // 2))
            ww = 3 + int(rng.uniform() * (w // 2))
            top = int(rng.uniform() * (h - hh))
            left = int(rng.uniform() * (w - ww))
            val = 0.4 + 0.6 * rng.uniform()
            img[top : top + hh, left : left + ww] = np.maximum(
                img[top : top + hh, left : left + ww], val
            )
        if rng.uniform() < 0.7:
            r = 2 + rng.uniform() * (min(h, w) / 4.0 - 2)
            ci = r + rng.uniform() * (h - 2 * r - 1)
            cj = r + rng.uniform() * (w - 2 * r - 1)
            val = 0.4 + 0.6 * rng.uniform()
            ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
            mask = (ii - ci) ** 2 + (jj - cj) ** 2 <= r * r
            img[mask] = np.maximum(img[mask], val)
    return imgs


def center_dataset(data):
    """Subtract the dataset-mean image; returns (centred, mean)."""
    data = np.asarray(data, dtype=np.float64)
    mean = data.mean(axis=0)
    return data - mean, mean


def psnr(x, ref, peak=1.0) -> float:
    """10 log10(peak^2 / mse); infinite for identical images."""
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {ref.shape}")
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(peak * peak / mse)
