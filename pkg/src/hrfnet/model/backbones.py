"""Width-scalable backbones.

``ShallowNet`` is the MobileNet-v3 (large) prefix truncated after its stride-8
stage; it returns the stride-4 low-level map alongside the stride-8 output.
``DeepNet`` is ResNet-18 with every stage width scaled by the same multiplier.
Both are built from scratch so the multiplier reaches every layer.
"""
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ShapeError
from .config import ModelConfig


def conv_bn(cin, cout, k, stride=1, groups=1, act=None):
    layers = [
        nn.Conv2d(cin, cout, k, stride, k // 2, groups=groups, bias=False),
        nn.BatchNorm2d(cout),
    ]
    if act is not None:
        layers.append(act)
    return nn.Sequential(*layers)


class SqueezeExcite(nn.Module):
    def __init__(self, cfg, channels, reduction=4):
        super().__init__()
        hidden = max(8, channels // reduction)
        self.fc1 = nn.Conv2d(channels, hidden, 1)
        self.act = cfg.act()
        self.fc2 = nn.Conv2d(hidden, channels, 1)
        self.gate = cfg.gate

    def forward(self, x):
        s = F.adaptive_avg_pool2d(x, 1)
        return x * self.gate(self.fc2(self.act(self.fc1(s))))


class InvertedResidual(nn.Module):
    def __init__(self, cfg, cin, exp, cout, k, se, hs, stride):
        super().__init__()
        kind = "hswish" if hs else "relu"
        layers = []
        if exp != cin:
            layers.append(conv_bn(cin, exp, 1, act=cfg.act(kind)))
        layers.append(conv_bn(exp, exp, k, stride, groups=exp, act=cfg.act(kind)))
        if se:
            layers.append(SqueezeExcite(cfg, exp))
        layers.append(conv_bn(exp, cout, 1))
        self.block = nn.Sequential(*layers)
        self.use_res = stride == 1 and cin == cout

    def forward(self, x):
        out = self.block(x)
        return x + out if self.use_res else out


class ShallowNet(nn.Module):
    """Lightweight full-resolution encoder. Output stride 8, low-level stride 4."""

    stride = 8

    def __init__(self, cfg: ModelConfig, in_channels: int = 3):
        super().__init__()
        c = cfg.ch(cfg.shallow_stem)
        self.stem = conv_bn(in_channels, c, 3, stride=2, act=cfg.act("hswish"))
        self.low_stages = nn.ModuleList()
        self.high_stages = nn.ModuleList()
        stride = 2
        for k, exp, out, se, hs, s in cfg.shallow_blocks:
            block = InvertedResidual(cfg, c, cfg.ch(exp), cfg.ch(out), k, se, hs, s)
            stride *= s
            (self.low_stages if stride <= 4 else self.high_stages).append(block)
            c = cfg.ch(out)
        self.low_channels = self._channels_at(cfg, 4)
        self.out_channels = c

    @staticmethod
    def _channels_at(cfg, target_stride):
        stride, c = 2, cfg.ch(cfg.shallow_stem)
        for _, _, out, _, _, s in cfg.shallow_blocks:
            if stride * s > target_stride:
                break
            stride *= s
            c = cfg.ch(out)
        return c

    def forward(self, x):
        if x.shape[-1] % 32 or x.shape[-2] % 32:
            raise ShapeError(f"shallow input {tuple(x.shape[-2:])} not divisible by 32")
        x = self.stem(x)
        for block in self.low_stages:
            x = block(x)
        low = x
        for block in self.high_stages:
            x = block(x)
        return low, x


class BasicBlock(nn.Module):
    def __init__(self, cfg, cin, cout, stride):
        super().__init__()
        self.conv1 = conv_bn(cin, cout, 3, stride, act=cfg.act())
        self.conv2 = conv_bn(cout, cout, 3)
        self.shortcut = None
        if stride != 1 or cin != cout:
            self.shortcut = conv_bn(cin, cout, 1, stride)
        self.act = cfg.act()

    def forward(self, x):
        identity = x if self.shortcut is None else self.shortcut(x)
        return self.act(self.conv2(self.conv1(x)) + identity)


class DeepNet(nn.Module):
    """ResNet-18 encoder returning its stride-32 final-stage features."""

    stride = 32

    def __init__(self, cfg: ModelConfig, in_channels: int = 3):
        super().__init__()
        self.input_size = tuple(cfg.deep_input_size)
        c = cfg.ch(cfg.deep_stem)
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, c, 7, 2, 3, bias=False),
            nn.BatchNorm2d(c),
            cfg.act(),
            cfg.pool(),
        )
        layers = []
        for width, blocks, stride in cfg.deep_stages:
            out = cfg.ch(width)
            for i in range(blocks):
                layers.append(BasicBlock(cfg, c, out, stride if i == 0 else 1))
                c = out
        self.layers = nn.Sequential(*layers)
        self.out_channels = c

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if tuple(x.shape[-2:]) != self.input_size:
            raise ShapeError(f"deep branch expects {self.input_size}, got {tuple(x.shape[-2:])}")
        return self.layers(self.stem(x))
