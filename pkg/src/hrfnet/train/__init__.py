from .data import ManifestDataset
from .losses import weighted_ce
from .loop import TrainResult, read_history, train_loop, write_history
from .schedule import TrainConfig, lr_schedule

__all__ = [
    "ManifestDataset",
    "TrainConfig",
    "TrainResult",
    "lr_schedule",
    "read_history",
    "train_loop",
    "weighted_ce",
    "write_history",
]
