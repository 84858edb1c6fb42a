"""Procedural stand-ins for pristine satellite tiles.

Real base imagery is user-supplied; these tiles exist so tests and demos run
without it. Each tile mixes smooth land-cover patches, fine texture and a
per-tile sensor noise level and resampling factor, so tiles differ in the
noise statistics SRM filters pick up.
"""
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

PALETTE = np.array([
    [74, 103, 58],    # forest
    [128, 140, 82],   # cropland
    [160, 142, 110],  # bare soil
    [60, 78, 110],    # water
    [150, 150, 150],  # built-up
    [190, 175, 130],  # sand
], dtype=np.float64)


def synthetic_tile(size: int, rng: np.random.Generator) -> np.ndarray:
    scale = float(rng.choice([1.0, 1.5, 2.0]))
    n = int(np.ceil(size / scale))
    # Voronoi land-cover patches
    k = int(rng.integers(6, 16))
    seeds = rng.uniform(0, n, size=(k, 2))
    yy, xx = np.mgrid[0:n, 0:n]
    d = (yy[..., None] - seeds[:, 0]) ** 2 + (xx[..., None] - seeds[:, 1]) ** 2
    labels = d.argmin(axis=2)
    colors = PALETTE[rng.integers(0, len(PALETTE), size=k)] + rng.normal(0, 12, size=(k, 3))
    img = colors[labels]
    # multi-scale texture
    for sigma, amp in ((n / 16, 18.0), (3.0, 10.0), (1.0, 6.0)):
        field = ndimage.gaussian_filter(rng.normal(size=(n, n)), sigma)
        field /= field.std() + 1e-12
        img += amp * field[..., None]
    if scale != 1.0:
        img = ndimage.zoom(img, (size / n, size / n, 1), order=1)[:size, :size]
    img += rng.normal(0, rng.uniform(0.5, 6.0), size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def make_synthetic_bases(out_dir, n: int, size: int = 1000, seed: int = 0) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        path = out_dir / f"base_{i:04d}.png"
        Image.fromarray(synthetic_tile(size, rng)).save(path, compress_level=1)
        paths.append(path)
    return paths
