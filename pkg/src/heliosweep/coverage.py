"""Cloud-contamination scoring from quadrant-intensity homogeneity."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import EmptyDisk
from .imagecore import SolarImage, read_container

DEFAULT_THRESHOLD = 0.05


def coverage_level(img: SolarImage) -> float:
    """Coefficient of variation of the four quadrant mean intensities.

    Quadrants split at the disk center, restricted to in-disk pixels. Zero
    for quadrant-symmetric images; darkening one quadrant raises the score;
    rescaling all intensities leaves it unchanged.
    """
    inside = img.in_disk()
    if not inside.any():
        raise EmptyDisk("no in-disk pixels to score")
    cx, cy = img.disk_center
    xs = np.arange(img.width)[None, :] < cx
    ys = np.arange(img.height)[:, None] < cy
    pixels = img.pixels.astype(np.float64)
    means = []
    for upper in (True, False):
        for left in (True, False):
            quadrant = inside & (xs == left) & (ys == upper)
            if not quadrant.any():
                raise EmptyDisk("a quadrant has no in-disk pixels")
            means.append(pixels[quadrant].mean())
    means = np.array(means)
    center = means.mean()
    spread = means.std()  # population std
    if center == 0.0:
        return 0.0 if spread == 0.0 else float("inf")
    return float(spread / center)


def triage(
    directory, threshold: float = DEFAULT_THRESHOLD
) -> tuple[list[Path], list[Path]]:
    """Partition the directory's SOLC images into (cloud-free, cloudy) paths."""
    cloudfree: list[Path] = []
    cloudy: list[Path] = []
    for path in sorted(Path(directory).glob("*.solc")):
        obj = read_container(path)
        if not isinstance(obj, SolarImage):
            continue
        if coverage_level(obj) <= threshold:
            cloudfree.append(path)
        else:
            cloudy.append(path)
    return cloudfree, cloudy
