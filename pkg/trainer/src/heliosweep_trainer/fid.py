"""Frechet distance between image sets in a fixed feature space.

Pretrained backbones are not downloadable in offline environments, so the
default feature extractor is a small convolutional network with frozen,
seed-derived weights: deterministic everywhere, and distribution shifts
(noise, blur, contrast) still move the score monotonically. Any callable
mapping a (N, 1, H, W) tensor to (N, D) features can be plugged in instead.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from scipy import linalg
from torch import nn
from torch.nn import functional as F

from .solc import KIND_IMAGE, read_solc

_FEATURE_DIM = 64
_INPUT_SIZE = 64
_WEIGHT_SEED = 2024  # fixed extractor identity


class TooFewSamples(ValueError):
    """Each side needs at least two images to fit a Gaussian."""


def _fixed_extractor() -> nn.Module:
    rng = np.random.default_rng(_WEIGHT_SEED)
    net = nn.Sequential(
        nn.Conv2d(1, 16, 3, stride=2, padding=1),
        nn.ReLU(),
        nn.Conv2d(16, 32, 3, stride=2, padding=1),
        nn.ReLU(),
        nn.Conv2d(32, _FEATURE_DIM, 3, stride=2, padding=1),
        nn.ReLU(),
        nn.AdaptiveAvgPool2d(1),
        nn.Flatten(),
    )
    with torch.no_grad():
        for param in net.parameters():
            values = rng.standard_normal(tuple(param.shape)) * 0.2
            param.copy_(torch.from_numpy(values).float())
    net.eval()
    for param in net.parameters():
        param.requires_grad_(False)
    return net


def _load_dir(directory) -> torch.Tensor:
    frames = []
    for path in sorted(Path(directory).glob("*.solc")):
        frame = read_solc(path)
        if frame.kind != KIND_IMAGE:
            continue
        frames.append(torch.from_numpy(frame.pixels).unsqueeze(0))
    if len(frames) < 2:
        raise TooFewSamples(f"{directory}: need at least 2 images, found {len(frames)}")
    batch = torch.stack(frames)
    return F.interpolate(batch, size=(_INPUT_SIZE, _INPUT_SIZE), mode="bilinear", align_corners=False)


def _gaussian_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = features.mean(axis=0)
    sigma = np.cov(features, rowvar=False)
    return mu, np.atleast_2d(sigma)


def frechet_distance(mu1, sigma1, mu2, sigma2) -> float:
    diff = mu1 - mu2
    covmean, _ = linalg.sqrtm(sigma1 @ sigma2, disp=False)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    value = float(diff @ diff + np.trace(sigma1) + np.trace(sigma2) - 2.0 * np.trace(covmean))
    return max(value, 0.0)


def fid(pred_dir, target_dir, extractor: nn.Module | None = None) -> float:
    """Frechet distance between the two directories' image distributions."""
    net = extractor if extractor is not None else _fixed_extractor()
    with torch.no_grad():
        pred_feats = net(_load_dir(pred_dir)).numpy().astype(np.float64)
        target_feats = net(_load_dir(target_dir)).numpy().astype(np.float64)
    mu1, s1 = _gaussian_stats(pred_feats)
    mu2, s2 = _gaussian_stats(target_feats)
    return frechet_distance(mu1, s1, mu2, s2)
