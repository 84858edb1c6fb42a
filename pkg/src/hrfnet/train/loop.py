from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch.utils.data import DataLoader

from ..datasynth.dataset import DatasetManifest
from ..errors import DataError, NumericError, UndefinedAUCError
from ..model.checkpoint import save_checkpoint
from .data import ManifestDataset
from .losses import weighted_ce
from .schedule import TrainConfig, lr_schedule

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "lr", "train_loss", "val_auc")


@dataclass
class TrainResult:
    history: list[dict] = field(default_factory=list)
    step_losses: list[float] = field(default_factory=list)
    best_path: Path | None = None
    last_path: Path | None = None
    history_path: Path | None = None


def write_history(path, history) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for row in history:
            w.writerow([row["epoch"], repr(row["lr"]), repr(row["train_loss"]), repr(row["val_auc"])])
    return path


def read_history(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh, delimiter="\t"))
    return [{"epoch": int(r["epoch"]), "lr": float(r["lr"]), "train_loss": float(r["train_loss"]),
             "val_auc": float(r["val_auc"])} for r in rows]


def _val_auc(model, dataset) -> float:
    # deferred: evaluation imports this package's data module
    from ..evaluation.auc import pixel_auc
    from ..evaluation.evaluate import collect_predictions

    if len(dataset) == 0:
        return math.nan
    scores, masks = collect_predictions(model, dataset)
    try:
        return pixel_auc(scores, masks, "pooled")
    except UndefinedAUCError:
        return math.nan


def train_loop(model, manifest: DatasetManifest, cfg: TrainConfig | None = None, out_dir=None,
               max_steps: int | None = None, validate: bool = True) -> TrainResult:
    """Adam with step-decayed learning rate on the manifest's train split.

    The learning rate is set from ``lr_schedule`` at the start of every epoch.
    With ``out_dir`` the best-val-AUC and last checkpoints plus ``history.tsv``
    are written there. Best falls back to lowest train loss while val AUC is
    undefined. ``max_steps`` stops early after that many optimizer steps.
    """
    cfg = cfg or TrainConfig()
    train_set = ManifestDataset(manifest, "train", size=model.cfg.full_res, flip=cfg.flip_augment,
                                seed=cfg.seed)
    if len(train_set) == 0:
        raise DataError("the train split is empty")
    val_set = ManifestDataset(manifest, "val", size=model.cfg.full_res)
    # fail on resolution mismatch before any compute
    train_set.load(0)
    if len(val_set):
        val_set.load(0)

    gen = torch.Generator().manual_seed(cfg.seed)
    workers = 0 if cfg.deterministic else cfg.num_workers
    loader = DataLoader(train_set, batch_size=cfg.batch_size, shuffle=True, generator=gen,
                        num_workers=workers)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr0, betas=cfg.betas, eps=cfg.eps)

    out = Path(out_dir) if out_dir is not None else None
    result = TrainResult()
    best_key = None
    step = 0
    for epoch in range(cfg.epochs):
        lr = lr_schedule(epoch, cfg)
        for group in opt.param_groups:
            group["lr"] = lr
        model.train()
        total, count = 0.0, 0
        for x, y in loader:
            loss = weighted_ce(model(x), y, cfg.tampered_weight)
            if not torch.isfinite(loss):
                raise NumericError(f"non-finite loss {loss.item()} at epoch {epoch}, step {step}")
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
            step += 1
            result.step_losses.append(loss.item())
            total += loss.item() * x.shape[0]
            count += x.shape[0]
            if max_steps is not None and step >= max_steps:
                break
        val_auc = _val_auc(model, val_set) if validate else math.nan
        row = {"epoch": epoch, "lr": lr, "train_loss": total / count, "val_auc": val_auc}
        result.history.append(row)
        log.info("epoch %d lr %.3g loss %.5f val_auc %.4f", epoch, lr, row["train_loss"], val_auc)

        if out is not None:
            key = (val_auc, -row["train_loss"]) if not math.isnan(val_auc) else (-math.inf, -row["train_loss"])
            extra = {"train_config": cfg.to_dict(), "history": result.history}
            if best_key is None or key > best_key:
                best_key = key
                result.best_path = out / "best.pt"
                save_checkpoint(result.best_path, model, epoch, opt, extra)
            result.last_path = out / "last.pt"
            save_checkpoint(result.last_path, model, epoch, opt, extra)
            result.history_path = write_history(out / "history.tsv", result.history)
        if max_steps is not None and step >= max_steps:
            break
    return result
