"""Non-learning cloud removal baselines.

Two methods: transmittance normalization against a cloud-free temporal
neighbour (morphological low-pass then ratio), and two-stage median filtering
that isolates the large-scale cloud field while thresholding solar structures
out of it. Both filter a disk-extended copy of the frame (background replaced
by the nearest in-disk value) so the limb does not bleed zeros into windows;
on a cloud-free uniform disk both methods return the input exactly.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import EmptyDisk, KernelTooLarge, MisalignedDisks, NeighbourUnavailable
from .imagecore import MaskKind, ShadowMask, SolarImage, extend_disk

RATIO_GUARD = 1e-4  # floor on the neighbour's low-passed signal in the ratio
TRANSMITTANCE_FLOOR = 0.05  # caps amplification at 20x
STRUCT_RADIUS_DIVISOR = 16  # default element radius = disk_radius / 16
FULLER_K1 = 9
FULLER_STRUCTURE_THRESH = 0.08


def disk_footprint(radius: int) -> np.ndarray:
    """Boolean disk structuring element of the given pixel radius."""
    r = max(1, int(radius))
    span = np.arange(-r, r + 1)
    return (span[None, :] ** 2 + span[:, None] ** 2) <= r * r


def _require_aligned(a: SolarImage, b: SolarImage, tol: float = 0.5) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise MisalignedDisks(f"frame shapes differ: {a.pixels.shape} vs {b.pixels.shape}")
    if (
        abs(a.disk_center[0] - b.disk_center[0]) > tol
        or abs(a.disk_center[1] - b.disk_center[1]) > tol
        or abs(a.disk_radius - b.disk_radius) > tol
    ):
        raise MisalignedDisks("disk centers/radii differ by more than half a pixel")


def _mask_and_clip(img: SolarImage, cleaned64: np.ndarray, inside: np.ndarray) -> SolarImage:
    out = np.clip(cleaned64, 0.0, 1.0).astype(np.float32)
    out[~inside] = 0.0
    return img.with_pixels(out)


def feng_transmittance(
    cloudy: SolarImage,
    neighbour: SolarImage | None,
    struct_radius: int | None = None,
) -> tuple[ShadowMask, SolarImage]:
    """Estimate pixel-wise cloud transmittance from a cloud-free neighbour.

    Both frames are smoothed with a morphological closing-then-opening using
    a disk element (removes solar structures smaller than the element); the
    ratio of the smoothed frames, floored at TRANSMITTANCE_FLOOR, is the
    transmittance estimate, and the cloudy frame is divided by it.
    """
    if neighbour is None:
        raise NeighbourUnavailable("no cloud-free temporal neighbour supplied")
    _require_aligned(cloudy, neighbour)
    if struct_radius is None:
        struct_radius = max(1, round(cloudy.disk_radius / STRUCT_RADIUS_DIVISOR))
    footprint = disk_footprint(struct_radius)

    inside = cloudy.in_disk()
    low_cloudy = _morph_lowpass(extend_disk(cloudy), footprint)
    low_neighbour = _morph_lowpass(extend_disk(neighbour), footprint)

    ratio = low_cloudy / np.maximum(low_neighbour, RATIO_GUARD)
    transmittance = np.clip(ratio, TRANSMITTANCE_FLOOR, 1.0)
    # no reference signal means no evidence of shadow
    transmittance[low_neighbour < RATIO_GUARD] = 1.0
    transmittance[~inside] = 1.0

    cleaned64 = cloudy.pixels.astype(np.float64) / transmittance
    mask = ShadowMask(transmittance.astype(np.float32), MaskKind.TRANSMITTANCE)
    return mask, _mask_and_clip(cloudy, cleaned64, inside)


def _morph_lowpass(arr: np.ndarray, footprint: np.ndarray) -> np.ndarray:
    closed = ndimage.grey_closing(arr, footprint=footprint, mode="nearest")
    return ndimage.grey_opening(closed, footprint=footprint, mode="nearest")


def fuller_median(
    cloudy: SolarImage,
    k1: int = FULLER_K1,
    k2: int | None = None,
    structure_thresh: float = FULLER_STRUCTURE_THRESH,
) -> tuple[ShadowMask, SolarImage]:
    """Two-stage median filtering: suppress solar structures, then extract
    the smooth cloud field and normalize it into a transmittance mask.

    Stage 1 replaces pixels deviating from the k1-median by more than
    structure_thresh with that median; stage 2 median-filters with the large
    window k2 (default: an odd window near disk_radius / 4) and divides the
    result by its in-disk median.
    """
    inside = cloudy.in_disk()
    if not inside.any():
        raise EmptyDisk("image has no in-disk pixels")
    if k2 is None:
        k2 = max(2 * round(cloudy.disk_radius / 8) + 1, k1 + 2)
    if k1 % 2 == 0 or k2 % 2 == 0:
        raise ValueError(f"median windows must be odd, got k1={k1}, k2={k2}")
    if k1 >= k2:
        raise ValueError(f"stage-1 window must be smaller than stage 2 ({k1} >= {k2})")
    if k2 > 2 * cloudy.disk_radius:
        raise KernelTooLarge(f"k2={k2} exceeds the disk diameter {2 * cloudy.disk_radius:.0f}")

    extended = extend_disk(cloudy)
    median1 = ndimage.median_filter(extended, size=k1, mode="nearest")
    keep = np.abs(extended - median1) <= structure_thresh
    stage1 = np.where(keep, extended, median1)
    field = ndimage.median_filter(stage1, size=k2, mode="nearest")

    reference = float(np.median(field[inside]))
    if reference <= RATIO_GUARD:
        transmittance = np.ones_like(field)
    else:
        transmittance = np.clip(field / reference, TRANSMITTANCE_FLOOR, 1.0)
    transmittance[~inside] = 1.0

    cleaned64 = cloudy.pixels.astype(np.float64) / transmittance
    mask = ShadowMask(transmittance.astype(np.float32), MaskKind.TRANSMITTANCE)
    return mask, _mask_and_clip(cloudy, cleaned64, inside)
