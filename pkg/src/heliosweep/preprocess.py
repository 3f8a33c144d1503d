"""Disk detection, recentering, radius normalization, and background zeroing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateGeometry, NoDiskFound
from .imagecore import SolarImage, disk_mask, frame_center, quantize_intensity

DEFAULT_OUT_SIZE = 512
DEFAULT_RADIUS_FRACTION = 0.45
_MIN_DISK_FRACTION = 0.01  # of all frame pixels
_MIN_RADIUS_PX = 4.0


@dataclass(frozen=True)
class DiskGeometry:
    """Subpixel disk center (cx, cy) and radius in pixels."""

    cx: float
    cy: float
    radius: float


def detect_disk(img: SolarImage, threshold_quantile: float = 0.5) -> DiskGeometry:
    """Locate one bright disk on a dark background.

    Thresholds at the given quantile of the nonzero-intensity histogram,
    takes the centroid of above-threshold pixels as the center, and derives
    the radius from their count assuming a filled circle.
    """
    pixels = img.pixels
    nonzero = pixels[pixels > 0]
    if nonzero.size == 0:
        raise NoDiskFound("image has no nonzero pixels")
    threshold = float(np.quantile(nonzero, threshold_quantile))
    above = pixels >= threshold
    count = int(above.sum())
    if count < _MIN_DISK_FRACTION * pixels.size:
        raise NoDiskFound(
            f"only {count} of {pixels.size} pixels reach the detection threshold"
        )
    ys, xs = np.nonzero(above)
    cx = float(xs.mean())
    cy = float(ys.mean())
    radius = float(np.sqrt(count / np.pi))
    return DiskGeometry(cx, cy, radius)


def normalize_disk(
    img: SolarImage,
    geom: DiskGeometry,
    out_size: int = DEFAULT_OUT_SIZE,
    target_radius_fraction: float = DEFAULT_RADIUS_FRACTION,
) -> SolarImage:
    """Recenter the disk, scale it to the target radius, and zero the background.

    Bilinear resampling; output intensities stay in [0, 1] and are snapped to
    the dyadic grid so later residual arithmetic is exact. Resampling an
    already-normalized image with its stored geometry is an exact identity.
    """
    if geom.radius < _MIN_RADIUS_PX:
        raise DegenerateGeometry(f"disk radius {geom.radius:.2f}px is below {_MIN_RADIUS_PX}px")
    target_radius = target_radius_fraction * out_size / 2.0
    center = frame_center(out_size)
    scale = target_radius / geom.radius

    out_coords = np.arange(out_size, dtype=np.float64)
    x_in = geom.cx + (out_coords - center) / scale
    y_in = geom.cy + (out_coords - center) / scale
    yy, xx = np.meshgrid(y_in, x_in, indexing="ij")
    resampled = ndimage.map_coordinates(
        img.pixels.astype(np.float64), [yy, xx], order=1, mode="constant", cval=0.0
    )

    inside = disk_mask(out_size, out_size, (center, center), target_radius)
    resampled[~inside] = 0.0
    pixels = quantize_intensity(np.clip(resampled, 0.0, 1.0))
    return SolarImage(pixels, (center, center), target_radius, img.modality)


def preprocess(
    img: SolarImage,
    out_size: int = DEFAULT_OUT_SIZE,
    target_radius_fraction: float = DEFAULT_RADIUS_FRACTION,
    threshold_quantile: float = 0.5,
) -> SolarImage:
    """detect_disk followed by normalize_disk."""
    geom = detect_disk(img, threshold_quantile)
    return normalize_disk(img, geom, out_size, target_radius_fraction)
