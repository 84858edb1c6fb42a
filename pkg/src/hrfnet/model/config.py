from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import torch
import torch.nn as nn
import torch.nn.functional as F
import yaml

from ..errors import ConfigError

TOTAL_STRIDE = 32
SHALLOW_STRIDE = 8

# (kernel, expansion, out, squeeze-excite, hardswish, stride) per inverted-residual block
MOBILENET_V3_PREFIX = (
    (3, 16, 16, False, False, 1),
    (3, 64, 24, False, False, 2),
    (3, 72, 24, False, False, 1),
    (5, 72, 40, True, False, 2),
    (5, 120, 40, True, False, 1),
    (5, 120, 40, True, False, 1),
)
RESNET18_STAGES = ((64, 2, 1), (128, 2, 2), (256, 2, 2), (512, 2, 2))


def pad_to_multiple(n: int, m: int = TOTAL_STRIDE) -> int:
    return int(math.ceil(n / m) * m)


@dataclass
class ModelConfig:
    full_res: tuple[int, int] = (1000, 1000)
    deep_input_size: tuple[int, int] = (224, 224)
    shallow_stem: int = 16
    shallow_blocks: tuple = MOBILENET_V3_PREFIX
    deep_stem: int = 64
    deep_stages: tuple = RESNET18_STAGES
    srm_channels: int = 9
    fusion_channels: int = 256
    low_level_channels: int = 48
    aspp_rates: tuple[int, ...] = (1, 6, 12, 18)
    num_classes: int = 2
    width_multiplier: float = 1.0
    use_srm: bool = True
    srm_threshold: float = 2.0
    # SiLU / sigmoid / avg-pool in place of ReLU, hardswish, hardsigmoid and
    # max-pool; removes kinks so finite-difference gradient checks are well posed
    smooth_activations: bool = False

    def __post_init__(self):
        self.full_res = tuple(int(v) for v in self.full_res)
        self.deep_input_size = tuple(int(v) for v in self.deep_input_size)
        self.aspp_rates = tuple(int(r) for r in self.aspp_rates)
        self.shallow_blocks = tuple(tuple(b) for b in self.shallow_blocks)
        self.deep_stages = tuple(tuple(s) for s in self.deep_stages)
        self.validate()

    def validate(self) -> None:
        if self.num_classes != 2:
            raise ConfigError("num_classes must be 2 (pristine, tampered)")
        if self.width_multiplier <= 0:
            raise ConfigError("width_multiplier must be > 0")
        if self.srm_channels % 3 != 0 or self.srm_channels < 3:
            raise ConfigError("srm_channels must be a positive multiple of 3")
        h, w = self.deep_input_size
        if h % TOTAL_STRIDE or w % TOTAL_STRIDE:
            raise ConfigError(f"deep_input_size {self.deep_input_size} must be divisible by 32")
        ph, pw = self.padded_res
        if h > ph or w > pw:
            raise ConfigError("deep_input_size cannot exceed the full resolution")
        if not self.aspp_rates or min(self.aspp_rates) < 1:
            raise ConfigError("aspp_rates must be non-empty positive integers")
        extent = min(ph, pw) // SHALLOW_STRIDE
        if max(self.aspp_rates) > extent:
            raise ConfigError(
                f"ASPP rate {max(self.aspp_rates)} exceeds the {extent}px fused feature extent"
            )

    def act(self, kind: str = "relu") -> nn.Module:
        if self.smooth_activations:
            return nn.SiLU()
        return nn.Hardswish() if kind == "hswish" else nn.ReLU()

    def gate(self, x):
        return torch.sigmoid(x) if self.smooth_activations else F.hardsigmoid(x)

    def pool(self) -> nn.Module:
        return nn.AvgPool2d(3, 2, 1) if self.smooth_activations else nn.MaxPool2d(3, 2, 1)

    @property
    def padded_res(self) -> tuple[int, int]:
        """Full resolution rounded up to the 32-pixel grid."""
        return tuple(pad_to_multiple(v) for v in self.full_res)

    def ch(self, c: int) -> int:
        """Scale a nominal channel count by the width multiplier (minimum 8)."""
        return max(8, int(round(c * self.width_multiplier)))

    @classmethod
    def desk(cls, size: int, width_multiplier: float = 0.25, deep_size: int | None = None,
             **overrides) -> "ModelConfig":
        """Square small-scale config with ASPP rates clipped to the feature extent."""
        padded = pad_to_multiple(size)
        if deep_size is None:
            # >= 64 keeps the stride-32 map at least 2x2 for train-mode BatchNorm
            deep_size = min(padded, max(64, min(224, (padded // 2) // TOTAL_STRIDE * TOTAL_STRIDE)))
        extent = padded // SHALLOW_STRIDE
        rates = tuple(sorted({min(r, extent) for r in (1, 6, 12, 18)}))
        kw = dict(full_res=(size, size), deep_input_size=(deep_size, deep_size),
                  aspp_rates=rates, width_multiplier=width_multiplier)
        kw.update(overrides)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = [list(x) if isinstance(x, tuple) else x for x in v]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    @classmethod
    def load(cls, path: str | Path) -> "ModelConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))
