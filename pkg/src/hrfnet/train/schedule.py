from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from fractions import Fraction

from ..errors import ConfigError


@dataclass
class TrainConfig:
    lr0: float = 1e-3
    decay_factor: float = 0.8
    decay_every: int = 20
    epochs: int = 100
    batch_size: int = 4
    tampered_weight: float = 10.0
    seed: int = 0
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    flip_augment: bool = False
    deterministic: bool = True
    num_workers: int = 0

    def __post_init__(self):
        self.betas = tuple(float(b) for b in self.betas)
        if self.lr0 <= 0:
            raise ConfigError("lr0 must be > 0")
        if not 0 < self.decay_factor <= 1:
            raise ConfigError("decay_factor must lie in (0, 1]")
        if self.decay_every < 1:
            raise ConfigError("decay_every must be >= 1")
        if self.tampered_weight <= 0:
            raise ConfigError("tampered_weight must be > 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


def lr_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Step decay: ``lr0 * decay_factor ** (epoch // decay_every)``."""
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    # exact rational arithmetic on the decimal values, rounded once:
    # 1e-3 * 0.8**2 in floats gives 6.400000000000002e-4 rather than 6.4e-4
    steps = epoch // cfg.decay_every
    return float(Fraction(repr(cfg.lr0)) * Fraction(repr(cfg.decay_factor)) ** steps)
