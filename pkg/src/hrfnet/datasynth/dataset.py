from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import ConfigError, DataError
from .forgeries import KINDS, ForgeryRecipe, apply_recipe
from .regions import SHAPES

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp"}
SPLITS = ("train", "val", "test")
MANIFEST_VERSION = 1
# noisy imagery barely compresses; level 1 is several times faster than the default
PNG_LEVEL = 1


@dataclass
class SynthConfig:
    count: int = 30
    size: int = 1000
    kinds: tuple[str, ...] = KINDS
    shapes: tuple[str, ...] = ("ellipse", "polygon")
    region_sizes: tuple[int, ...] = (16, 32, 64, 128, 256)
    blend: str = "none"
    feather_radius: int = 3
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.kinds = tuple(self.kinds)
        self.shapes = tuple(self.shapes)
        self.region_sizes = tuple(int(s) for s in self.region_sizes)
        self.split = tuple(float(f) for f in self.split)
        if self.count < 1:
            raise ConfigError("count must be >= 1")
        if not self.kinds or set(self.kinds) - set(KINDS):
            raise ConfigError(f"kinds must be drawn from {KINDS}")
        if not self.shapes or set(self.shapes) - set(SHAPES):
            raise ConfigError(f"shapes must be drawn from {SHAPES}")
        if len(self.split) != 3 or min(self.split) < 0 or abs(sum(self.split) - 1) > 1e-9:
            raise ConfigError("split must be three non-negative fractions summing to 1")
        usable = [s for s in self.region_sizes if s <= self.max_region]
        if not usable:
            raise ConfigError(f"no region size fits a {self.size}px image")

    @property
    def max_region(self) -> int:
        # copy-move needs two disjoint windows; keep every region below a third of the side
        return min(512, (self.size - 2 * self.feather_radius - 2) // 3)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass
class DatasetManifest:
    root: Path
    entries: list[dict] = field(default_factory=list)
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    config: dict = field(default_factory=dict)

    def split(self, name: str) -> list[dict]:
        return [e for e in self.entries if e["split"] == name]

    def image_path(self, entry) -> Path:
        return self.root / entry["image"]

    def mask_path(self, entry) -> Path:
        return self.root / entry["mask"]

    def to_json(self) -> str:
        doc = {
            "format_version": MANIFEST_VERSION,
            "split_fractions": list(self.split_fractions),
            "config": self.config,
            "entries": self.entries,
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    def save(self) -> Path:
        path = self.root / "manifest.json"
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, root) -> "DatasetManifest":
        root = Path(root)
        path = root / "manifest.json" if root.is_dir() else root
        if not path.is_file():
            raise DataError(f"no manifest at {path}")
        doc = json.loads(path.read_text())
        if doc.get("format_version") != MANIFEST_VERSION:
            raise DataError(f"unsupported manifest version {doc.get('format_version')!r}")
        return cls(path.parent, doc["entries"], tuple(doc["split_fractions"]), doc["config"])

    def validate(self) -> None:
        """Check file presence, matching dims, binary masks and split disjointness."""
        seen: dict[str, str] = {}
        for e in self.entries:
            img, mask = load_image(self.image_path(e)), load_mask(self.mask_path(e))
            if img.shape[:2] != mask.shape:
                raise DataError(f"{e['id']}: image {img.shape[:2]} vs mask {mask.shape}")
            if seen.setdefault(e["base_id"], e["split"]) != e["split"]:
                raise DataError(f"base {e['base_id']} appears in more than one split")


def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def load_mask(path) -> np.ndarray:
    """Masks are stored as 0/255 PNGs and returned as {0, 1} uint8."""
    with Image.open(path) as im:
        return (np.asarray(im.convert("L")) > 127).astype(np.uint8)


def save_mask(path, mask) -> None:
    Image.fromarray((np.asarray(mask) > 0).astype(np.uint8) * 255).save(path, compress_level=PNG_LEVEL)


def center_crop(img: np.ndarray, size: int) -> np.ndarray:
    h, w = img.shape[:2]
    top, left = (h - size) // 2, (w - size) // 2
    return img[top:top + size, left:left + size]


def list_bases(bases_dir) -> list[Path]:
    bases_dir = Path(bases_dir)
    if not bases_dir.is_dir():
        raise DataError(f"base directory not found: {bases_dir}")
    paths = sorted(p for p in bases_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise DataError(f"no base images in {bases_dir}")
    return paths


def assign_splits(base_ids: list[str], fractions, seed: int) -> dict[str, str]:
    """Partition base ids into train/val/test so no base spans two splits."""
    order = list(base_ids)
    np.random.default_rng([seed, 0x5917]).shuffle(order)
    n = len(order)
    n_val = int(round(fractions[1] * n))
    n_test = int(round(fractions[2] * n))
    # the training split keeps at least one base whenever it was requested
    while fractions[0] > 0 and n_val + n_test >= n and (n_val or n_test):
        if n_test >= n_val and n_test:
            n_test -= 1
        else:
            n_val -= 1
    n_train = n - n_val - n_test
    out = {}
    for i, b in enumerate(order):
        out[b] = "train" if i < n_train else "val" if i < n_train + n_val else "test"
    return out


def entry_seed(global_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([global_seed, index]).generate_state(1)[0])


def plan_entry(cfg: SynthConfig, index: int, base_ids, splits) -> dict:
    """Draw every random choice for one entry from its own seed."""
    seed = entry_seed(cfg.seed, index)
    rng = np.random.default_rng(seed)
    kind = cfg.kinds[index % len(cfg.kinds)]
    base_id = base_ids[int(rng.integers(len(base_ids)))]
    same_split = [b for b in base_ids if splits[b] == splits[base_id] and b != base_id]
    donor_id = None
    if kind == "splice":
        donor_id = same_split[int(rng.integers(len(same_split)))] if same_split else base_id
    sizes = [s for s in cfg.region_sizes if s <= cfg.max_region]
    recipe = ForgeryRecipe(
        kind=kind,
        region_shape=cfg.shapes[int(rng.integers(len(cfg.shapes)))],
        size_px=int(sizes[int(rng.integers(len(sizes)))]),
        blend=cfg.blend if kind != "removal" else "none",
        feather_radius=cfg.feather_radius if cfg.blend == "feathered" and kind != "removal" else 0,
        seed=seed,
    )
    entry_id = f"{index:05d}_{kind}"
    return {
        "id": entry_id,
        "image": f"images/{entry_id}.png",
        "mask": f"masks/{entry_id}.png",
        "base_id": base_id,
        "donor_id": donor_id,
        "split": splits[base_id],
        "recipe": recipe.to_dict(),
    }


def _render(job) -> None:
    entry, base_path, donor_path, size, root = job
    base = center_crop(load_image(base_path), size)
    donor = center_crop(load_image(donor_path), size) if donor_path else None
    image, mask = apply_recipe(base, ForgeryRecipe(**entry["recipe"]), donor)
    if not mask.any():
        raise DataError(f"{entry['id']}: empty mask")
    Image.fromarray(image).save(Path(root) / entry["image"], compress_level=PNG_LEVEL)
    save_mask(Path(root) / entry["mask"], mask)


def generate_dataset(bases_dir, out_dir, cfg: SynthConfig | None = None) -> DatasetManifest:
    """Write ``cfg.count`` forged image/mask pairs plus ``manifest.json`` under ``out_dir``."""
    cfg = cfg or SynthConfig()
    paths = list_bases(bases_dir)
    undersized = []
    for p in paths:
        with Image.open(p) as im:
            if min(im.size) < cfg.size:
                undersized.append(f"{p.name} {im.size[0]}x{im.size[1]}")
    if undersized:
        raise DataError(f"bases smaller than {cfg.size}px: {', '.join(undersized)}")

    by_id = {p.stem: p for p in paths}
    base_ids = sorted(by_id)
    splits = assign_splits(base_ids, cfg.split, cfg.seed)
    entries = [plan_entry(cfg, i, base_ids, splits) for i in range(cfg.count)]

    root = Path(out_dir)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    jobs = [
        (e, by_id[e["base_id"]], by_id[e["donor_id"]] if e["donor_id"] else None, cfg.size, root)
        for e in entries
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            list(pool.map(_render, jobs))
    else:
        for job in jobs:
            _render(job)

    manifest = DatasetManifest(root, entries, cfg.split, cfg.to_dict())
    manifest.save()
    counts = {s: len(manifest.split(s)) for s in SPLITS}
    log.info("wrote %d pairs to %s (%s)", len(entries), root, counts)
    return manifest
