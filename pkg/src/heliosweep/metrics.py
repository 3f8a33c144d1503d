"""Image-quality metrics over in-disk pixels: RMSE, PSNR, SSIM.

Background pixels never influence a score: means and window statistics are
taken only where the disk geometry says the Sun is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ShapeMismatch
from .imagecore import SolarImage

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a: SolarImage, b: SolarImage) -> np.ndarray:
    if a.pixels.shape != b.pixels.shape:
        raise ShapeMismatch(f"shapes differ: {a.pixels.shape} vs {b.pixels.shape}")
    if not a.same_geometry(b):
        raise ShapeMismatch("disk geometries differ")
    inside = a.in_disk()
    if not inside.any():
        raise ShapeMismatch("images have no in-disk pixels")
    return inside


def rmse(a: SolarImage, b: SolarImage) -> float:
    """Root mean squared error over in-disk pixels."""
    inside = _check_pair(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.sqrt(np.mean(diff[inside] ** 2)))


def psnr(a: SolarImage, b: SolarImage, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the images agree exactly."""
    inside = _check_pair(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff[inside] ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_blur(arr: np.ndarray) -> np.ndarray:
    radius = SSIM_WINDOW // 2
    return ndimage.gaussian_filter(
        arr, SSIM_SIGMA, mode="reflect", truncate=radius / SSIM_SIGMA
    )


def ssim(
    a: SolarImage,
    b: SolarImage,
    peak: float = 1.0,
    k1: float = SSIM_K1,
    k2: float = SSIM_K2,
) -> float:
    """Mean local SSIM with an 11-tap Gaussian window (sigma 1.5).

    Only windows whose centers fall inside the disk contribute. Identical
    images score exactly 1.
    """
    inside = _check_pair(a, b)
    x = a.pixels.astype(np.float64)
    y = b.pixels.astype(np.float64)
    # windows centered near the limb must not read background values
    x[~inside] = 0.0
    y[~inside] = 0.0
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2

    mu_x = _gaussian_blur(x)
    mu_y = _gaussian_blur(y)
    # identical inputs give bit-identical statistics, hence a ratio of exactly 1
    var_x = _gaussian_blur(x * x) - mu_x * mu_x
    var_y = _gaussian_blur(y * y) - mu_y * mu_y
    cov = _gaussian_blur(x * y) - mu_x * mu_y

    numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    ssim_map = numerator / denominator
    return float(np.mean(ssim_map[inside]))


@dataclass(frozen=True)
class EvalRecord:
    """One cleaned-vs-target comparison."""

    psnr: float
    ssim: float
    rmse: float


def evaluate_pair(cleaned: SolarImage, target: SolarImage) -> EvalRecord:
    """Bundle the three metrics for one pair."""
    return EvalRecord(psnr=psnr(cleaned, target), ssim=ssim(cleaned, target), rmse=rmse(cleaned, target))


def summarize(values) -> tuple[float, float]:
    """(mean, population std) of a metric series; matches mean(std) reporting.

    An infinite PSNR sentinel makes the mean infinite and the std nan.
    """
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        return math.nan, math.nan
    with np.errstate(invalid="ignore"):
        return float(arr.mean()), float(arr.std())


def aggregate_records(records) -> dict[str, float]:
    """Mean and population std of each metric over a set of EvalRecords."""
    records = list(records)
    out: dict[str, float] = {}
    for name in ("psnr", "ssim", "rmse"):
        mean, std = summarize(getattr(r, name) for r in records)
        out[f"{name}_mean"] = mean
        out[f"{name}_std"] = std
    out["count"] = float(len(records))
    return out
