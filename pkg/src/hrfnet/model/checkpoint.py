from __future__ import annotations

from pathlib import Path

import torch

from ..errors import DataError
from .config import ModelConfig

CHECKPOINT_VERSION = 1


def save_checkpoint(path, model, epoch=0, optimizer=None, extra=None) -> None:
    state = {
        "format_version": CHECKPOINT_VERSION,
        "config": model.cfg.to_dict(),
        "weights": model.state_dict(),
        "epoch": epoch,
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
    }
    if extra:
        state["extra"] = extra
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(state, path)


def load_checkpoint(path, map_location="cpu"):
    """Rebuild the model stored at ``path``; returns ``(model, state_dict)``."""
    from .network import HRFNet

    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    state = torch.load(path, map_location=map_location, weights_only=False)
    version = state.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint format {version!r} (expected {CHECKPOINT_VERSION})")
    model = HRFNet(ModelConfig.from_dict(state["config"]))
    model.load_state_dict(state["weights"])
    model.eval()
    return model, state
