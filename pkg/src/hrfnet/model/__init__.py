from .checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from .config import ModelConfig
from .heads import ASPP, Decoder, Refine, fuse
from .network import (
    HRFNet,
    ablate_srm,
    count_parameters,
    image_to_tensor,
    predict_mask,
    tampered_probability,
)

__all__ = [
    "ASPP",
    "CHECKPOINT_VERSION",
    "Decoder",
    "HRFNet",
    "ModelConfig",
    "Refine",
    "ablate_srm",
    "count_parameters",
    "fuse",
    "image_to_tensor",
    "load_checkpoint",
    "predict_mask",
    "save_checkpoint",
    "tampered_probability",
]
