import torch
import torch.nn as nn

from ..srm import resize


def fuse(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Concatenate two feature maps along channels.

    The map with the smaller spatial area is bilinearly resized to the other's
    size first, so the result keeps the finer stride. Channel order is
    always ``[a, b]``.
    """
    ha, wa = a.shape[-2:]
    hb, wb = b.shape[-2:]
    if ha * wa >= hb * wb:
        b = resize(b, (ha, wa))
    else:
        a = resize(a, (hb, wb))
    return torch.cat([a, b], dim=1)


class Refine(nn.Module):
    """conv3x3 -> ReLU -> conv3x3, projecting to ``out_channels``."""

    def __init__(self, in_channels, out_channels, act=nn.ReLU):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.act = act()
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)

    def forward(self, x):
        return self.conv2(self.act(self.conv1(x)))


class ASPP(nn.Module):
    """Atrous spatial pyramid pooling.

    Rate 1 maps to a 1x1 conv, every other rate to a dilated 3x3 conv, plus an
    image-pooling branch. Borders use replicate padding so a constant input
    gives a spatially constant output.
    """

    def __init__(self, in_channels, out_channels, rates=(1, 6, 12, 18), act=nn.ReLU):
        super().__init__()
        self.branches = nn.ModuleList()
        for r in rates:
            if r == 1:
                conv = nn.Conv2d(in_channels, out_channels, 1, bias=False)
            else:
                conv = nn.Conv2d(in_channels, out_channels, 3, padding=r, dilation=r,
                                 bias=False, padding_mode="replicate")
            self.branches.append(nn.Sequential(conv, nn.BatchNorm2d(out_channels), act()))
        # no BatchNorm on the pooled branch: it sees one value per channel and sample
        self.pool = nn.Sequential(nn.AdaptiveAvgPool2d(1), nn.Conv2d(in_channels, out_channels, 1),
                                  act())
        n = len(self.branches) + 1
        self.project = nn.Sequential(
            nn.Conv2d(n * out_channels, out_channels, 1, bias=False),
            nn.BatchNorm2d(out_channels),
            act(),
        )

    @property
    def num_branches(self) -> int:
        return len(self.branches) + 1

    def forward(self, x):
        outs = [branch(x) for branch in self.branches]
        outs.append(self.pool(x).expand(-1, -1, *x.shape[-2:]))
        return self.project(torch.cat(outs, dim=1))


class Decoder(nn.Module):
    """DeepLabv3+ head: upsampled context + projected low-level skip -> logits."""

    def __init__(self, context_channels, low_channels, low_proj, mid_channels, num_classes=2,
                 act=nn.ReLU):
        super().__init__()
        self.low = nn.Sequential(
            nn.Conv2d(low_channels, low_proj, 1, bias=False),
            nn.BatchNorm2d(low_proj),
            act(),
        )
        self.refine = nn.Sequential(
            nn.Conv2d(context_channels + low_proj, mid_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(mid_channels),
            act(),
            nn.Conv2d(mid_channels, mid_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(mid_channels),
            act(),
        )
        self.classifier = nn.Conv2d(mid_channels, num_classes, 1)

    def forward(self, context, low_level, out_size):
        context = resize(context, low_level.shape[-2:])
        x = torch.cat([context, self.low(low_level)], dim=1)
        return resize(self.classifier(self.refine(x)), out_size)
