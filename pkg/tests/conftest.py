"""Shared synthetic-image builders for the test suite."""

import numpy as np
import pytest

from heliosweep.imagecore import (
    SolarImage,
    disk_mask,
    frame_center,
    quantize_intensity,
)


def make_disk(size=256, radius=None, value=0.8, center=None):
    """Uniform disk on a zero background, grid-aligned values, exact geometry."""
    if radius is None:
        radius = 0.45 * size / 2.0
    if center is None:
        center = (frame_center(size), frame_center(size))
    inside = disk_mask(size, size, center, radius)
    pixels = np.zeros((size, size), dtype=np.float64)
    pixels[inside] = value
    return SolarImage(quantize_intensity(pixels), center, radius)


def apply_field(img: SolarImage, field: np.ndarray) -> SolarImage:
    """Multiply in-disk pixels by a [0, 1] field, staying grid-aligned."""
    inside = img.in_disk()
    out = img.pixels.astype(np.float64)
    out[inside] = out[inside] * field[inside]
    return img.with_pixels(quantize_intensity(out))


@pytest.fixture
def uniform_disk():
    return make_disk(size=256, value=0.8)
