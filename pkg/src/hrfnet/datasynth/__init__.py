from .bases import make_synthetic_bases, synthetic_tile
from .dataset import (
    DatasetManifest,
    SynthConfig,
    assign_splits,
    generate_dataset,
    load_image,
    load_mask,
)
from .forgeries import ForgeryRecipe, apply_recipe, copy_move, diffusion_fill, removal, splice
from .regions import ellipse_region, make_region

__all__ = [
    "DatasetManifest",
    "ForgeryRecipe",
    "SynthConfig",
    "apply_recipe",
    "assign_splits",
    "copy_move",
    "diffusion_fill",
    "ellipse_region",
    "generate_dataset",
    "load_image",
    "load_mask",
    "make_region",
    "make_synthetic_bases",
    "removal",
    "splice",
    "synthetic_tile",
]
