from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError, PlacementError, ShapeError
from .regions import SHAPES, feather_alpha, make_region

KINDS = ("splice", "copy_move", "removal")
BLENDS = ("none", "feathered")
MAX_PLACEMENT_TRIES = 100
REMOVAL_ITERATIONS = 200


@dataclass
class ForgeryRecipe:
    """One manipulation.

    ``location`` and ``source`` are (x, y) top-left corners of the region's
    window (the size_px box plus the feather margin). ``source`` is where the
    pasted pixels come from: the donor for a splice, the base itself for
    copy-move. ``None`` means draw it from ``seed``.
    """

    kind: str
    region_shape: str = "ellipse"
    size_px: int = 64
    location: tuple[int, int] | None = None
    source: tuple[int, int] | None = None
    blend: str = "none"
    feather_radius: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.region_shape not in SHAPES:
            raise ConfigError(f"region_shape must be one of {SHAPES}")
        if not 16 <= self.size_px <= 512:
            raise ConfigError(f"size_px must lie in [16, 512], got {self.size_px}")
        if self.blend not in BLENDS:
            raise ConfigError(f"blend must be one of {BLENDS}")
        if self.blend == "feathered" and self.feather_radius < 1:
            raise ConfigError("feathered blending needs feather_radius >= 1")
        if self.location is not None:
            self.location = tuple(int(v) for v in self.location)
        if self.source is not None:
            self.source = tuple(int(v) for v in self.source)

    @property
    def margin(self) -> int:
        return self.feather_radius if self.blend == "feathered" else 0

    @property
    def window(self) -> int:
        return self.size_px + 2 * self.margin

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("location", "source"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


def _check_image(img, name="base"):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ShapeError(f"{name} must be an HxWx3 uint8 image, got {img.shape} {img.dtype}")
    return img


def _place(rng, shape_hw, window, given, margin=0):
    """Top-left (x, y) of a window fully inside the image, leaving ``margin`` px spare."""
    h, w = shape_hw
    hi_x, hi_y = w - window - margin, h - window - margin
    if given is not None:
        x, y = given
        if not (margin <= x <= hi_x and margin <= y <= hi_y):
            raise PlacementError(f"window {window}px at {given} leaves the {w}x{h} image")
        return x, y
    if hi_x < margin or hi_y < margin:
        raise PlacementError(f"{window}px window does not fit in a {w}x{h} image")
    return int(rng.integers(margin, hi_x + 1)), int(rng.integers(margin, hi_y + 1))


def _region_and_alpha(recipe, rng, patch):
    m = recipe.margin
    region = make_region(recipe.region_shape, recipe.size_px, rng,
                         patch[m:m + recipe.size_px, m:m + recipe.size_px])
    padded = np.pad(region, m)
    return padded, feather_alpha(padded, m)


def _composite(base_win, src_win, alpha):
    a = alpha[..., None]
    out = np.rint(a * src_win.astype(np.float64) + (1.0 - a) * base_win.astype(np.float64))
    return np.where(a > 0, out, base_win).astype(np.uint8)


def splice(base, donor, recipe: ForgeryRecipe):
    """Paste a donor region into ``base``; returns (image, mask)."""
    if recipe.kind != "splice":
        raise ConfigError("splice() needs a recipe of kind 'splice'")
    base, donor = _check_image(base), _check_image(donor, "donor")
    rng = np.random.default_rng(recipe.seed)
    s = recipe.window
    x, y = _place(rng, base.shape[:2], s, recipe.location)
    try:
        sx, sy = _place(rng, donor.shape[:2], s, recipe.source)
    except PlacementError as exc:
        raise PlacementError(f"donor too small or source out of bounds: {exc}") from None
    src = donor[sy:sy + s, sx:sx + s]
    _, alpha = _region_and_alpha(recipe, rng, src)

    out = base.copy()
    out[y:y + s, x:x + s] = _composite(base[y:y + s, x:x + s], src, alpha)
    mask = np.zeros(base.shape[:2], dtype=np.uint8)
    mask[y:y + s, x:x + s] = alpha > 0
    return out, mask


def _disjoint(a, b, s):
    return a[0] + s <= b[0] or b[0] + s <= a[0] or a[1] + s <= b[1] or b[1] + s <= a[1]


def copy_move(base, recipe: ForgeryRecipe):
    """Duplicate a region of ``base`` onto a disjoint location; mask marks the copy."""
    if recipe.kind != "copy_move":
        raise ConfigError("copy_move() needs a recipe of kind 'copy_move'")
    base = _check_image(base)
    rng = np.random.default_rng(recipe.seed)
    s = recipe.window
    for _ in range(MAX_PLACEMENT_TRIES):
        dst = _place(rng, base.shape[:2], s, recipe.location)
        src = _place(rng, base.shape[:2], s, recipe.source)
        if _disjoint(dst, src, s):
            break
        if recipe.location is not None and recipe.source is not None:
            raise PlacementError(f"source {src} and destination {dst} overlap")
    else:
        raise PlacementError(
            f"no disjoint copy-move placement for {s}px after {MAX_PLACEMENT_TRIES} tries"
        )
    (x, y), (sx, sy) = dst, src
    patch = base[sy:sy + s, sx:sx + s]
    _, alpha = _region_and_alpha(recipe, rng, patch)

    out = base.copy()
    out[y:y + s, x:x + s] = _composite(base[y:y + s, x:x + s], patch, alpha)
    mask = np.zeros(base.shape[:2], dtype=np.uint8)
    mask[y:y + s, x:x + s] = alpha > 0
    return out, mask


def diffusion_fill(window: np.ndarray, region: np.ndarray, iterations=REMOVAL_ITERATIONS):
    """Fill ``region`` (interior of ``window``) from its boundary by Jacobi averaging.

    ``window`` carries a one-pixel frame around the region box. Values start at
    the mean of the 4-connected boundary ring and relax towards the harmonic
    interpolant, so they never leave the ring's [min, max] range.
    """
    work = window.astype(np.float64)
    inner = np.pad(region, 1)
    ring = np.zeros_like(inner)
    ring[1:, :] |= inner[:-1, :]
    ring[:-1, :] |= inner[1:, :]
    ring[:, 1:] |= inner[:, :-1]
    ring[:, :-1] |= inner[:, 1:]
    ring &= ~inner
    work[inner] = work[ring].mean(axis=0)
    for _ in range(iterations):
        avg = (work[:-2, 1:-1] + work[2:, 1:-1] + work[1:-1, :-2] + work[1:-1, 2:]) / 4.0
        work[1:-1, 1:-1][region] = avg[region]
    return work


def removal(base, recipe: ForgeryRecipe):
    """Erase a region by diffusion fill from its surroundings; mask marks the region.

    Blending does not apply: outside the region the fill equals the base.
    """
    if recipe.kind != "removal":
        raise ConfigError("removal() needs a recipe of kind 'removal'")
    base = _check_image(base)
    rng = np.random.default_rng(recipe.seed)
    s = recipe.size_px
    # one spare pixel on every side supplies the boundary ring
    x, y = _place(rng, base.shape[:2], s, recipe.location, margin=1)
    patch = base[y:y + s, x:x + s]
    region = make_region(recipe.region_shape, s, rng, patch)

    window = base[y - 1:y + s + 1, x - 1:x + s + 1]
    filled = diffusion_fill(window, region)
    out = base.copy()
    win_out = out[y - 1:y + s + 1, x - 1:x + s + 1]
    inner = np.pad(region, 1)
    win_out[inner] = np.clip(np.rint(filled[inner]), 0, 255).astype(np.uint8)
    mask = np.zeros(base.shape[:2], dtype=np.uint8)
    mask[y:y + s, x:x + s] = region
    return out, mask


def apply_recipe(base, recipe: ForgeryRecipe, donor=None):
    if recipe.kind == "splice":
        if donor is None:
            raise ConfigError("splice needs a donor image")
        return splice(base, donor, recipe)
    if recipe.kind == "copy_move":
        return copy_move(base, recipe)
    return removal(base, recipe)
