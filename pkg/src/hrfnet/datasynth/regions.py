"""Binary region rasters for forgery placement."""
import numpy as np
from scipy import ndimage
from skimage.draw import polygon as draw_polygon

SHAPES = ("ellipse", "polygon", "donor_silhouette", "square")


def ellipse_region(size: int, rx: float, ry: float) -> np.ndarray:
    """Axis-aligned ellipse centred in a size x size box, sampled at pixel centres."""
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    return ((xx - c) / rx) ** 2 + ((yy - c) / ry) ** 2 <= 1.0


def convex_polygon_region(size: int, angles: np.ndarray) -> np.ndarray:
    """Polygon with vertices on the inscribed circle, so it is always convex."""
    c = (size - 1) / 2.0
    r = size / 2.0 - 0.5
    angles = np.sort(angles)
    rows = c + r * np.sin(angles)
    cols = c + r * np.cos(angles)
    mask = np.zeros((size, size), dtype=bool)
    rr, cc = draw_polygon(rows, cols, shape=mask.shape)
    mask[rr, cc] = True
    return mask


def silhouette_region(patch: np.ndarray, sigma: float = 2.0) -> np.ndarray:
    """Object-like blob cut from a patch's own content.

    The smoothed luminance is split at its median; the connected component
    under the patch centre (or the largest one) is kept and clipped to the
    inscribed disc so the blob stays compact.
    """
    size = patch.shape[0]
    lum = patch.astype(np.float64).mean(axis=2)
    lum = ndimage.gaussian_filter(lum, sigma)
    fg = lum >= np.median(lum)
    c = size // 2
    if not fg[c, c]:
        fg = ~fg
    fg &= ellipse_region(size, size / 2.0, size / 2.0)
    labels, n = ndimage.label(fg)
    if n == 0:
        return ellipse_region(size, size / 2.0, size / 2.0)
    keep = labels[c, c]
    if keep == 0:
        keep = 1 + int(np.argmax(ndimage.sum(fg, labels, range(1, n + 1))))
    region = ndimage.binary_fill_holes(labels == keep)
    # tiny fragments make a useless forgery; fall back to the disc
    if region.sum() < 0.1 * size * size:
        return ellipse_region(size, size / 2.0, size / 2.0)
    return region


def make_region(shape: str, size: int, rng: np.random.Generator, patch=None) -> np.ndarray:
    if shape == "ellipse":
        long_axis = size / 2.0
        short_axis = long_axis * rng.uniform(0.5, 1.0)
        if rng.random() < 0.5:
            return ellipse_region(size, long_axis, short_axis)
        return ellipse_region(size, short_axis, long_axis)
    if shape == "polygon":
        n = int(rng.integers(5, 10))
        return convex_polygon_region(size, rng.uniform(0, 2 * np.pi, n))
    if shape == "square":
        return np.ones((size, size), dtype=bool)
    if shape == "donor_silhouette":
        if patch is None:
            raise ValueError("donor_silhouette needs the source patch")
        return silhouette_region(patch)
    raise ValueError(f"unknown region shape {shape!r}")


def feather_alpha(region: np.ndarray, radius: int) -> np.ndarray:
    """Blend weights: 1 on the region, falling linearly to 0 over ``radius`` px outside."""
    if radius <= 0:
        return region.astype(np.float64)
    dist = ndimage.distance_transform_edt(~region)
    return np.clip(1.0 - dist / radius, 0.0, 1.0)
