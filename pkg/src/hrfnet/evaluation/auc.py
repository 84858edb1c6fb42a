"""Pixel-level ROC AUC by rank statistics."""
from __future__ import annotations

import logging

import numpy as np
from scipy.stats import rankdata

from ..errors import ShapeError, UndefinedAUCError

log = logging.getLogger(__name__)

AUC_MODES = ("pooled", "per_image_mean")


def binary_auc(scores, labels) -> float:
    """Mann-Whitney AUC with midranks for ties.

    Equals the mean over (positive, negative) pairs of 1[s+ > s-] + 0.5 * 1[s+ = s-].
    The numerator is formed as an exact integer before the single division, so
    the result matches that pairwise count to the last bit.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeError(f"{scores.size} scores vs {labels.size} labels")
    if np.isnan(scores).any():
        raise ValueError("scores contain NaN")
    pos = labels.astype(bool)
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError(f"AUC undefined with {n_pos} positive and {n_neg} negative pixels")
    # midranks are half-integers, so twice their sum is an integer
    twice_rank_sum = int(round(2.0 * rankdata(scores)[pos].sum()))
    twice_u = twice_rank_sum - n_pos * (n_pos + 1)
    return twice_u / (2 * n_pos * n_neg)


def pixel_auc(scores, targets, mode: str = "pooled") -> float:
    """AUC over a list of probability maps and their binary masks.

    ``pooled`` ranks every pixel of every image together. ``per_image_mean``
    averages per-image AUCs, skipping single-class masks.
    """
    if mode not in AUC_MODES:
        raise ValueError(f"mode must be one of {AUC_MODES}, got {mode!r}")
    if isinstance(scores, np.ndarray) and scores.ndim <= 2:
        scores, targets = [scores], [targets]
    scores, targets = list(scores), list(targets)
    if len(scores) != len(targets):
        raise ShapeError(f"{len(scores)} score maps vs {len(targets)} masks")
    if not scores:
        raise UndefinedAUCError("no images")
    for i, (s, t) in enumerate(zip(scores, targets)):
        if np.shape(s) != np.shape(t):
            raise ShapeError(f"image {i}: scores {np.shape(s)} vs mask {np.shape(t)}")
    if mode == "pooled":
        return binary_auc(
            np.concatenate([np.ravel(s) for s in scores]),
            np.concatenate([np.ravel(t) for t in targets]),
        )
    values = per_image_auc(scores, targets)
    kept = [v for v in values if v is not None]
    if not kept:
        raise UndefinedAUCError("every image has a single-class mask")
    return float(np.mean(kept))


def per_image_auc(scores, targets) -> list[float | None]:
    """Per-image AUC; ``None`` where the mask is single-class."""
    out = []
    for s, t in zip(scores, targets):
        try:
            out.append(binary_auc(s, t))
        except UndefinedAUCError:
            out.append(None)
    skipped = sum(v is None for v in out)
    if skipped:
        log.info("excluded %d single-class image(s) from per-image AUC", skipped)
    return out
