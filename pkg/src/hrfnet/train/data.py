from __future__ import annotations

import numpy as np
import torch
from torch.utils.data import Dataset

from ..datasynth.dataset import DatasetManifest, load_image, load_mask
from ..errors import DataError


class ManifestDataset(Dataset):
    """Image/mask pairs of one manifest split as (3xHxW float 0-255, HxW long)."""

    def __init__(self, manifest: DatasetManifest, split: str = "train", size=None, flip: bool = False,
                 seed: int = 0):
        self.manifest = manifest
        self.entries = manifest.split(split)
        self.split = split
        self.size = tuple(size) if size is not None else None
        self.flip = flip
        self._rng = np.random.default_rng([seed, 0xF11B])

    def __len__(self):
        return len(self.entries)

    def load(self, i):
        e = self.entries[i]
        image = load_image(self.manifest.image_path(e))
        mask = load_mask(self.manifest.mask_path(e))
        if image.shape[:2] != mask.shape:
            raise DataError(f"{e['id']}: image {image.shape[:2]} vs mask {mask.shape}")
        if self.size is not None and mask.shape != self.size:
            raise DataError(f"{e['id']}: resolution {mask.shape} does not match model {self.size}")
        return image, mask

    def __getitem__(self, i):
        image, mask = self.load(i)
        if self.flip:
            if self._rng.random() < 0.5:
                image, mask = image[:, ::-1], mask[:, ::-1]
            if self._rng.random() < 0.5:
                image, mask = image[::-1], mask[::-1]
        x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32)).permute(2, 0, 1)
        y = torch.from_numpy(np.ascontiguousarray(mask, dtype=np.int64))
        return x, y
