from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ConfigError, ShapeError
from ..srm import SRMFilter, downsample, srm_kernels
from .backbones import DeepNet, ShallowNet
from .config import ModelConfig, pad_to_multiple
from .heads import ASPP, Decoder, Refine, fuse

RGB_MEAN = 127.5
RGB_STD = 64.0


def center_pad(x: torch.Tensor, multiple: int = 32):
    """Reflect-pad (B, C, H, W) up to the next ``multiple``; return the crop box too."""
    h, w = x.shape[-2:]
    ph, pw = pad_to_multiple(h, multiple) - h, pad_to_multiple(w, multiple) - w
    top, left = ph // 2, pw // 2
    if ph or pw:
        x = F.pad(x, (left, pw - left, top, ph - top), mode="reflect")
    return x, (top, left, h, w)


class HRFNet(nn.Module):
    """Four-branch forgery localizer.

    Input is a float tensor (B, 3, H, W) of raw 0-255 intensities. The output
    is a (B, 2, H, W) logit map; channel 1 is the tampered class.
    """

    def __init__(self, cfg: ModelConfig | None = None):
        super().__init__()
        cfg = cfg or ModelConfig()
        self.cfg = cfg
        bank = srm_kernels(cfg.srm_threshold)
        if cfg.srm_channels != 3 * len(bank):
            raise ConfigError(f"srm_channels={cfg.srm_channels} but bank yields {3 * len(bank)}")
        cf = cfg.ch(cfg.fusion_channels)
        act = cfg.act

        self.shallow_rgb = ShallowNet(cfg, 3)
        self.deep_rgb = DeepNet(cfg, 3)
        self.refine_rgb = Refine(self.shallow_rgb.out_channels + self.deep_rgb.out_channels, cf, act)
        if cfg.use_srm:
            self.srm = SRMFilter(bank)
            self.shallow_srm = ShallowNet(cfg, cfg.srm_channels)
            self.deep_srm = DeepNet(cfg, cfg.srm_channels)
            self.refine_srm = Refine(self.shallow_srm.out_channels + self.deep_srm.out_channels, cf,
                                     act)
        self.aspp = ASPP(2 * cf if cfg.use_srm else cf, cf, cfg.aspp_rates, act)
        self.decoder = Decoder(cf, self.shallow_rgb.low_channels, cfg.ch(cfg.low_level_channels),
                               cf, cfg.num_classes, act)

    def srm_modules(self) -> list[nn.Module]:
        if not self.cfg.use_srm:
            return []
        return [self.shallow_srm, self.deep_srm, self.refine_srm]

    def encode_rgb(self, x):
        low, shallow = self.shallow_rgb(x)
        deep = self.deep_rgb(downsample(x, self.cfg.deep_input_size))
        return low, self.refine_rgb(fuse(shallow, deep))

    def encode_srm(self, residual):
        _, shallow = self.shallow_srm(residual)
        deep = self.deep_srm(downsample(residual, self.cfg.deep_input_size))
        return self.refine_srm(fuse(shallow, deep))

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        if image.ndim != 4 or image.shape[1] != 3:
            raise ShapeError(f"expected (B, 3, H, W) input, got {tuple(image.shape)}")
        x, (top, left, h, w) = center_pad(image.float() if not image.is_floating_point() else image)
        dh, dw = self.cfg.deep_input_size
        if x.shape[-2] < dh or x.shape[-1] < dw:
            raise ShapeError(f"input {tuple(x.shape[-2:])} smaller than deep input {(dh, dw)}")

        low, feat = self.encode_rgb((x - RGB_MEAN) / RGB_STD)
        if self.cfg.use_srm:
            feat = fuse(feat, self.encode_srm(self.srm(x)))
        logits = self.decoder(self.aspp(feat), low, x.shape[-2:])
        return logits[..., top:top + h, left:left + w]


def image_to_tensor(image: np.ndarray) -> torch.Tensor:
    """(H, W, 3) uint8 array -> (1, 3, H, W) float tensor on the 0-255 scale."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected an HxWx3 image, got {image.shape}")
    return torch.from_numpy(image.astype(np.float32)).permute(2, 0, 1).unsqueeze(0)


def tampered_probability(logits: torch.Tensor) -> torch.Tensor:
    return torch.softmax(logits, dim=1)[:, 1]


@torch.no_grad()
def predict_mask(model: nn.Module, image, threshold: float = 0.5):
    """Tampered-class probability map and its thresholded binary mask.

    ``image`` may be an (H, W, 3) array or a (B, 3, H, W) tensor. Returns numpy
    arrays shaped (H, W) or (B, H, W) to match.
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    single = not isinstance(image, torch.Tensor)
    x = image_to_tensor(image) if single else image
    was_training = model.training
    model.eval()
    try:
        prob = tampered_probability(model(x)).cpu().numpy()
    finally:
        model.train(was_training)
    mask = (prob >= threshold).astype(np.uint8)
    if single:
        return prob[0], mask[0]
    return prob, mask


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


@torch.no_grad()
def ablate_srm(model: HRFNet) -> HRFNet:
    """Zero every parameter of the SRM branches in place.

    BatchNorm affine terms are zeroed too, so the branches emit exact zeros
    regardless of their running statistics.
    """
    for module in model.srm_modules():
        for p in module.parameters():
            p.zero_()
    return model
