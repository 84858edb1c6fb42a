"""Side-by-side grids: input | ground truth | one column per prediction."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ..errors import ShapeError

MARGIN = 8
TITLE_HEIGHT = 20
BACKGROUND = (255, 255, 255)


def _tile(arr) -> np.ndarray:
    """HxWx3 uint8 for an RGB image, a {0,1} mask or a [0,1] probability map."""
    arr = np.asarray(arr)
    if arr.ndim == 3:
        return arr.astype(np.uint8)
    if arr.dtype.kind in "iub" or np.isin(arr, (0, 1)).all():
        gray = (arr > 0).astype(np.uint8) * 255
    else:
        gray = np.clip(np.rint(arr.astype(np.float64) * 255), 0, 255).astype(np.uint8)
    return np.repeat(gray[..., None], 3, axis=2)


def grid_size(tile_hw, rows: int, cols: int) -> tuple[int, int]:
    """(width, height) of a grid with the fixed margins and title band."""
    h, w = tile_hw
    return cols * w + (cols + 1) * MARGIN, TITLE_HEIGHT + rows * h + (rows + 1) * MARGIN


def render_comparison(samples, titles=None, path=None) -> Image.Image:
    """Compose one row per sample.

    ``samples`` is a list of ``(image, gt_mask, predictions)`` where
    ``predictions`` maps a column name to a mask or probability map; every
    sample must use the same names. Tiles are pasted pixel for pixel, so
    binary masks stay pure black and white.
    """
    if isinstance(samples, tuple):
        samples = [samples]
    if not samples:
        raise ValueError("nothing to render")
    names = list(samples[0][2])
    h, w = np.asarray(samples[0][0]).shape[:2]
    rows = []
    for i, (image, gt, preds) in enumerate(samples):
        if list(preds) != names:
            raise ValueError(f"sample {i} predictions {list(preds)} differ from {names}")
        tiles = [image, gt, *preds.values()]
        for t in tiles:
            if np.asarray(t).shape[:2] != (h, w):
                raise ShapeError(f"sample {i}: tile {np.asarray(t).shape[:2]} differs from {(h, w)}")
        rows.append([_tile(t) for t in tiles])

    cols = 2 + len(names)
    canvas = Image.new("RGB", grid_size((h, w), len(rows), cols), BACKGROUND)
    draw = ImageDraw.Draw(canvas)
    for c, title in enumerate(titles or ["Input", "GT", *names]):
        draw.text((MARGIN + c * (w + MARGIN), 4), str(title), fill=(0, 0, 0))
    for r, tiles in enumerate(rows):
        for c, tile in enumerate(tiles):
            canvas.paste(Image.fromarray(tile), (MARGIN + c * (w + MARGIN), TITLE_HEIGHT + MARGIN + r * (h + MARGIN)))
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        canvas.save(path)
    return canvas
