from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..datasynth.dataset import DatasetManifest
from ..errors import DataError
from ..model.network import tampered_probability
from ..train.data import ManifestDataset
from .auc import AUC_MODES, per_image_auc, pixel_auc

log = logging.getLogger(__name__)


@dataclass
class MetricsReport:
    auc: float
    mode: str
    n_images: int
    per_image_auc: list = field(default_factory=list)
    f1: float | None = None
    iou: float | None = None
    fps: float | None = None
    memory_mb: float | str | None = None
    memory_mode: str | None = None
    split: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc {self.auc} outside [0, 1]")
        if self.mode not in AUC_MODES:
            raise ValueError(f"unknown AUC mode {self.mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path) -> "MetricsReport":
        return cls(**json.loads(Path(path).read_text()))


@torch.no_grad()
def collect_predictions(model, dataset) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Tampered probabilities for every item, one image at a time."""
    was_training = model.training
    model.eval()
    scores, masks = [], []
    try:
        for i in range(len(dataset)):
            x, y = dataset[i]
            scores.append(tampered_probability(model(x.unsqueeze(0)))[0].double().numpy())
            masks.append(y.numpy().astype(np.uint8))
    finally:
        model.train(was_training)
    return scores, masks


def threshold_metrics(scores, masks, threshold: float = 0.5) -> tuple[float, float]:
    """Pooled F1 and IoU of the tampered class at ``threshold``."""
    tp = fp = fn = 0
    for s, m in zip(scores, masks):
        pred, gt = np.asarray(s) >= threshold, np.asarray(m).astype(bool)
        tp += int((pred & gt).sum())
        fp += int((pred & ~gt).sum())
        fn += int((~pred & gt).sum())
    f1 = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 1.0
    iou = tp / (tp + fp + fn) if tp + fp + fn else 1.0
    return f1, iou


def evaluate(model, manifest: DatasetManifest, split: str = "test", mode: str = "pooled",
             with_thresholds: bool = True) -> MetricsReport:
    """Pixel AUC of ``model`` on one manifest split, at batch 1 and full resolution."""
    dataset = ManifestDataset(manifest, split, size=model.cfg.full_res)
    if len(dataset) == 0:
        raise DataError(f"split {split!r} is empty")
    scores, masks = collect_predictions(model, dataset)
    auc = pixel_auc(scores, masks, mode)
    report = MetricsReport(auc=auc, mode=mode, n_images=len(dataset),
                           per_image_auc=per_image_auc(scores, masks), split=split)
    if with_thresholds:
        report.f1, report.iou = threshold_metrics(scores, masks)
    log.info("%s AUC (%s) = %.4f over %d images", split, mode, auc, len(dataset))
    return report
