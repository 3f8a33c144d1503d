"""Patch discriminator with an analytic 70x70 receptive field."""

from __future__ import annotations

import torch
from torch import nn

# (out_channels, kernel, stride); the canonical 70x70 patch classifier stack
PATCHGAN_LAYERS = (
    (64, 4, 2),
    (128, 4, 2),
    (256, 4, 2),
    (512, 4, 1),
    (1, 4, 1),
)


def receptive_field(layers=PATCHGAN_LAYERS) -> int:
    """Input pixels seen by one output logit, from the layer stack alone."""
    field = 1
    for _, kernel, stride in reversed(layers):
        field = (field - 1) * stride + kernel
    return field


class PatchDiscriminator(nn.Module):
    """Conditional patch classifier: input is (conditioning, candidate) pair.

    Judges the cleaned image, not the mask, so the adversary scores how well
    solar structure is preserved. Output is a logit grid, one per patch.
    """

    def __init__(self, in_channels: int = 2):
        super().__init__()
        stages = []
        ch = in_channels
        for i, (out_ch, kernel, stride) in enumerate(PATCHGAN_LAYERS):
            last = i == len(PATCHGAN_LAYERS) - 1
            stages.append(nn.Conv2d(ch, out_ch, kernel, stride=stride, padding=1, bias=last or i == 0))
            if not last:
                if i > 0:
                    stages.append(nn.BatchNorm2d(out_ch))
                stages.append(nn.LeakyReLU(0.2, inplace=True))
            ch = out_ch
        self.body = nn.Sequential(*stages)

    def forward(self, conditioning, candidate):
        return self.body(torch.cat([conditioning, candidate], dim=1))


def build_discriminator(in_channels: int = 2) -> PatchDiscriminator:
    return PatchDiscriminator(in_channels)
