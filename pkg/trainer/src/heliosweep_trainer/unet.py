"""Encoder/decoder generator with skip connections."""

from __future__ import annotations

import torch
from torch import nn

from .config import InvalidBlockCount, OutputHead, TrainConfig


class _ConvBlock(nn.Module):
    """Two 3x3 conv + batchnorm + ReLU stages."""

    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, kernel_size=3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.body(x)


class UNetGenerator(nn.Module):
    """U-Net with n_blocks down/up-sampling stages and skip connections.

    Dropout sits in the innermost decoder stages (pix2pix convention) so the
    conditional-GAN setup can keep it active at test time.
    """

    def __init__(self, cfg: TrainConfig, in_channels: int = 1, dropout: float | None = None):
        super().__init__()
        if cfg.n_blocks not in (4, 5, 6):
            raise InvalidBlockCount(f"n_blocks must be 4, 5, or 6, got {cfg.n_blocks}")
        self.n_blocks = cfg.n_blocks
        self.head_kind = cfg.output_head
        if dropout is None:
            dropout = 0.5 if cfg.setup.value == "cgan" else 0.0

        features = cfg.base_features
        self.encoders = nn.ModuleList()
        ch = in_channels
        enc_channels = []
        for _ in range(cfg.n_blocks):
            self.encoders.append(_ConvBlock(ch, features))
            enc_channels.append(features)
            ch = features
            features *= 2
        self.pool = nn.MaxPool2d(2)
        self.bottleneck = _ConvBlock(ch, features)

        self.upconvs = nn.ModuleList()
        self.decoders = nn.ModuleList()
        self.dropouts = nn.ModuleList()
        for i, skip_ch in enumerate(reversed(enc_channels)):
            self.upconvs.append(nn.ConvTranspose2d(features, skip_ch, kernel_size=2, stride=2))
            self.decoders.append(_ConvBlock(skip_ch * 2, skip_ch))
            # dropout in the two innermost decoder stages
            self.dropouts.append(nn.Dropout2d(dropout) if (dropout > 0 and i < 2) else nn.Identity())
            features = skip_ch
        self.head = nn.Conv2d(features, 1, kernel_size=1)

    def forward(self, x):
        size = x.shape[-1]
        if size % (2 ** self.n_blocks) != 0 or x.shape[-2] % (2 ** self.n_blocks) != 0:
            raise ValueError(
                f"input size {tuple(x.shape[-2:])} must be divisible by 2^{self.n_blocks}"
            )
        skips = []
        for encoder in self.encoders:
            x = encoder(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottleneck(x)
        for upconv, decoder, drop, skip in zip(
            self.upconvs, self.decoders, self.dropouts, reversed(skips)
        ):
            x = upconv(x)
            x = decoder(torch.cat([skip, x], dim=1))
            x = drop(x)
        x = self.head(x)
        if self.head_kind is OutputHead.DIVISION_MASK:
            # bounded transmittance keeps the division path stable
            x = 0.5 * torch.tanh(x) + 0.5
        return x


def build_generator(cfg: TrainConfig) -> UNetGenerator:
    """Generator per the config; output shape equals input shape."""
    return UNetGenerator(cfg)
