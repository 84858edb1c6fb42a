"""Fixed SRM high-pass residual filters.

The bank holds three rich-model kernels. Each one is applied to every RGB
channel separately, giving ``3 * 3 = 9`` residual channels ordered
channel-major: ``[R*k0, R*k1, R*k2, G*k0, ...]``. Residuals are computed on
raw 8-bit intensities, divided by the kernel divisor and truncated to
``+-threshold``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
import yaml

from .errors import ConfigError, ShapeError

_KV = [
    [-1, 2, -2, 2, -1],
    [2, -6, 8, -6, 2],
    [-2, 8, -12, 8, -2],
    [2, -6, 8, -6, 2],
    [-1, 2, -2, 2, -1],
]
_SQUARE3 = [
    [-1, 2, -1],
    [2, -4, 2],
    [-1, 2, -1],
]
_THIRD_ORDER = [
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
    [0, -1, 3, -3, 1],
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0],
]


@dataclass(frozen=True)
class FilterBank:
    """Integer kernel grids plus per-kernel divisors and the clamp bound."""

    kernels: tuple[np.ndarray, ...]
    divisors: tuple[float, ...]
    threshold: float = 2.0

    def __post_init__(self):
        if not self.kernels:
            raise ConfigError("filter bank needs at least one kernel")
        if len(self.kernels) != len(self.divisors):
            raise ConfigError("one divisor per kernel required")
        if self.threshold <= 0:
            raise ConfigError(f"truncation threshold must be > 0, got {self.threshold}")
        for k, d in zip(self.kernels, self.divisors):
            if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
                raise ConfigError(f"kernels must be square with odd side, got {k.shape}")
            if k.sum() != 0:
                raise ConfigError("SRM kernels must be zero-sum")
            if d <= 0:
                raise ConfigError("divisors must be positive")

    def __len__(self) -> int:
        return len(self.kernels)

    @property
    def max_side(self) -> int:
        return max(k.shape[0] for k in self.kernels)

    def normalized(self) -> np.ndarray:
        """All kernels divided by their divisor, zero-padded to ``max_side``."""
        side = self.max_side
        out = np.zeros((len(self), side, side), dtype=np.float64)
        for i, (k, d) in enumerate(zip(self.kernels, self.divisors)):
            off = (side - k.shape[0]) // 2
            out[i, off:off + k.shape[0], off:off + k.shape[0]] = k / d
        return out

    def to_yaml(self, path: str | Path) -> None:
        doc = {
            "threshold": float(self.threshold),
            "kernels": [
                {"divisor": float(d), "grid": k.astype(int).tolist()}
                for k, d in zip(self.kernels, self.divisors)
            ],
        }
        Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))

    @classmethod
    def from_yaml(cls, path: str | Path) -> "FilterBank":
        doc = yaml.safe_load(Path(path).read_text())
        kernels = tuple(np.asarray(k["grid"], dtype=np.int64) for k in doc["kernels"])
        divisors = tuple(float(k["divisor"]) for k in doc["kernels"])
        return cls(kernels, divisors, float(doc["threshold"]))


def srm_kernels(threshold: float = 2.0) -> FilterBank:
    """The default 3-kernel bank: 5x5 KV, 3x3 square, third-order horizontal."""
    grids = tuple(np.asarray(g, dtype=np.int64) for g in (_KV, _SQUARE3, _THIRD_ORDER))
    return FilterBank(grids, (12.0, 4.0, 3.0), threshold)


def _conv_weight(bank: FilterBank, channels: int, dtype=torch.float32):
    """Integer conv weights (flipped: conv2d correlates) and per-output divisors."""
    side = bank.max_side
    grids = np.zeros((len(bank), side, side))
    for i, k in enumerate(bank.kernels):
        off = (side - k.shape[0]) // 2
        grids[i, off:off + k.shape[0], off:off + k.shape[0]] = k
    grids = np.flip(grids, axis=(1, 2)).copy()
    w = torch.from_numpy(grids).to(dtype).unsqueeze(1).repeat(channels, 1, 1, 1)
    div = torch.tensor(bank.divisors, dtype=dtype).repeat(channels)
    return w, div


def srm_residual(x: torch.Tensor, weight: torch.Tensor, divisors: torch.Tensor,
                 threshold: float) -> torch.Tensor:
    """Batched residuals for ``x`` of shape (B, C, H, W); returns (B, C*nk, H, W).

    Integer kernels keep constant regions exactly zero before the division.
    """
    side = weight.shape[-1]
    pad = side // 2
    if x.shape[-1] < side or x.shape[-2] < side:
        raise ShapeError(f"image {tuple(x.shape[-2:])} smaller than {side}x{side} kernel")
    x = F.pad(x, (pad, pad, pad, pad), mode="reflect")
    out = F.conv2d(x, weight.to(x.dtype), groups=x.shape[1])
    out = out / divisors.to(x.dtype).view(1, -1, 1, 1)
    return out.clamp(-threshold, threshold)


def apply_srm(image: np.ndarray, bank: FilterBank | None = None) -> np.ndarray:
    """Residual image (H, W, 3*len(bank)) for an (H, W, 3) 8-bit image."""
    bank = bank or srm_kernels()
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected an HxWx3 image, got shape {image.shape}")
    x = torch.from_numpy(image.astype(np.float64)).permute(2, 0, 1).unsqueeze(0)
    weight, div = _conv_weight(bank, 3, torch.float64)
    out = srm_residual(x, weight, div, bank.threshold)
    return out[0].permute(1, 2, 0).numpy()


class SRMFilter(nn.Module):
    """Non-trainable SRM layer for use inside a network."""

    def __init__(self, bank: FilterBank | None = None, in_channels: int = 3):
        super().__init__()
        self.bank = bank or srm_kernels()
        self.threshold = self.bank.threshold
        weight, div = _conv_weight(self.bank, in_channels)
        self.register_buffer("weight", weight, persistent=False)
        self.register_buffer("divisors", div, persistent=False)

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return srm_residual(x, self.weight, self.divisors, self.threshold)


def _lerp_axis(x: torch.Tensor, size: int, dim: int) -> torch.Tensor:
    n = x.shape[dim]
    if n == size:
        return x
    scale = n / size
    src = ((torch.arange(size, dtype=torch.float64) + 0.5) * scale - 0.5).clamp(min=0.0)
    i0 = src.floor().long().clamp(max=n - 1)
    i1 = (i0 + 1).clamp(max=n - 1)
    shape = [1] * x.ndim
    shape[dim] = size
    t = (src - i0).to(x.dtype).view(shape)
    a = x.index_select(dim, i0.to(x.device))
    b = x.index_select(dim, i1.to(x.device))
    return a + t.to(x.device) * (b - a)


def resize(x: torch.Tensor, size: Sequence[int]) -> torch.Tensor:
    """Bilinear resize over the last two dims, align_corners disabled.

    Sampling positions match ``F.interpolate(mode="bilinear")``; the lerp form
    ``a + t * (b - a)`` reproduces constant regions exactly.
    """
    x = _lerp_axis(x, int(size[0]), x.ndim - 2)
    return _lerp_axis(x, int(size[1]), x.ndim - 1)


def downsample(image, target: Sequence[int]):
    """Bilinear down-sampling of an (H, W, C) array or (..., H, W) tensor.

    Requests that would enlarge either dimension are rejected.
    """
    h, w = int(target[0]), int(target[1])
    if h < 1 or w < 1:
        raise ConfigError(f"target dims must be >= 1, got {(h, w)}")
    if isinstance(image, torch.Tensor):
        src = tuple(image.shape[-2:])
    else:
        src = np.asarray(image).shape[:2]
    if h > src[0] or w > src[1]:
        raise ConfigError(f"downsample cannot enlarge {src} to {(h, w)}")

    if isinstance(image, torch.Tensor):
        x = image if image.is_floating_point() else image.double()
        return resize(x, (h, w))

    arr = np.asarray(image)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[..., None]
    x = torch.from_numpy(arr.astype(np.float64)).permute(2, 0, 1)
    out = resize(x, (h, w)).permute(1, 2, 0).numpy()
    return out[..., 0] if squeeze else out
