"""Apply shadow masks to images and invert cloudy/clean pairs into masks.

Three mask applications are supported: plain ratio (divide by transmittance),
stabilized division (divide by transmittance + epsilon), and residual
addition. All outputs are clipped to [0, 1] and zeroed outside the disk.
"""

from __future__ import annotations

import numpy as np

from .errors import KindMismatch, MisalignedPair, ZeroMaskPixel
from .imagecore import MaskKind, ShadowMask, SolarImage

DIVISION_EPSILON = 1e-5  # default stabilizer for the division path
CLEAN_FLOOR = 0.02  # clean pixels below this give no meaningful ratio


def _check_mask(img: SolarImage, mask: ShadowMask, kind: MaskKind) -> None:
    if mask.kind is not kind:
        raise KindMismatch(f"expected a {kind.name.lower()} mask, got {mask.kind.name.lower()}")
    if mask.pixels.shape != img.pixels.shape:
        raise MisalignedPair(
            f"mask shape {mask.pixels.shape} != image shape {img.pixels.shape}"
        )


def _finish(img: SolarImage, values: np.ndarray, inside: np.ndarray) -> SolarImage:
    cleaned = np.clip(values, 0.0, 1.0).astype(np.float32)
    cleaned[~inside] = 0.0
    return img.with_pixels(cleaned)


def apply_shadow_ratio(img: SolarImage, mask: ShadowMask) -> SolarImage:
    """Divide by the transmittance mask; the mask must be nonzero in-disk."""
    _check_mask(img, mask, MaskKind.TRANSMITTANCE)
    inside = img.in_disk()
    if (mask.pixels[inside] == 0.0).any():
        raise ZeroMaskPixel("transmittance mask has a zero inside the disk")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = img.pixels.astype(np.float64) / mask.pixels.astype(np.float64)
    out[~inside] = 0.0
    return _finish(img, out, inside)


def apply_division(
    img: SolarImage, mask: ShadowMask, epsilon: float = DIVISION_EPSILON
) -> SolarImage:
    """Divide by mask + epsilon; tolerates zeros anywhere in the mask."""
    _check_mask(img, mask, MaskKind.TRANSMITTANCE)
    inside = img.in_disk()
    out = img.pixels.astype(np.float64) / (mask.pixels.astype(np.float64) + epsilon)
    return _finish(img, out, inside)


def apply_residual(img: SolarImage, mask: ShadowMask) -> SolarImage:
    """Add back the intensity the clouds removed."""
    _check_mask(img, mask, MaskKind.RESIDUAL)
    inside = img.in_disk()
    # float32 all the way: with grid-aligned synthetic pairs this restores
    # the clean image bit-exactly
    out = img.pixels + mask.pixels
    return _finish(img, out, inside)


def derive_gt_mask(clean: SolarImage, cloudy: SolarImage, kind: MaskKind) -> ShadowMask:
    """Invert an aligned clean/cloudy pair into a ground-truth mask."""
    if not clean.same_geometry(cloudy):
        raise MisalignedPair("clean and cloudy images differ in shape or disk geometry")
    kind = MaskKind(kind)
    if kind is MaskKind.RESIDUAL:
        residual = np.maximum(clean.pixels - cloudy.pixels, 0.0).astype(np.float32)
        return ShadowMask(residual, MaskKind.RESIDUAL)
    inside = clean.in_disk()
    clean64 = clean.pixels.astype(np.float64)
    ratio = np.ones_like(clean64)
    usable = inside & (clean64 > CLEAN_FLOOR)
    ratio[usable] = cloudy.pixels.astype(np.float64)[usable] / clean64[usable]
    ratio = np.clip(ratio, 0.0, 1.0).astype(np.float32)
    return ShadowMask(ratio, MaskKind.TRANSMITTANCE)


def division_sensitivity(img_value: float, mask_value: float, epsilon: float = DIVISION_EPSILON) -> float:
    """|d/dm of img/(m + eps)| — how sharply the division path reacts to mask error."""
    return img_value / (mask_value + epsilon) ** 2
