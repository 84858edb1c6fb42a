import torch
import torch.nn.functional as F

from ..errors import ShapeError


def weighted_ce(logits: torch.Tensor, target: torch.Tensor, w_tampered: float = 10.0) -> torch.Tensor:
    """Class-weighted two-class cross-entropy.

    Pristine pixels weigh 1 and tampered pixels ``w_tampered``; the sum is
    normalized by the total applied weight rather than the pixel count.
    Accepts (2, H, W) / (H, W) or batched (B, 2, H, W) / (B, H, W).
    """
    if logits.ndim == 3:
        logits, target = logits.unsqueeze(0), target.unsqueeze(0)
    if logits.ndim != 4 or logits.shape[1] != 2:
        raise ShapeError(f"logits must be (B, 2, H, W), got {tuple(logits.shape)}")
    if target.shape != logits.shape[:1] + logits.shape[2:]:
        raise ShapeError(f"target {tuple(target.shape)} does not match logits {tuple(logits.shape)}")
    if ((target != 0) & (target != 1)).any():
        raise ValueError("target values must be 0 or 1")
    weight = torch.tensor([1.0, float(w_tampered)], dtype=logits.dtype, device=logits.device)
    return F.cross_entropy(logits, target.long(), weight=weight, reduction="mean")
