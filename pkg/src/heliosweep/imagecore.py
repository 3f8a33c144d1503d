"""Core image/mask types, the SOLC container format, and 16-bit PNG I/O.

All pixel data is float32 in [0, 1], row-major. Images carry their disk
geometry (subpixel center, radius in pixels); a radius of 0 means the disk
has not been located yet. Both types are immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    BadMagic,
    InvariantViolation,
    IoFailure,
    NonFiniteValue,
    TruncatedPayload,
    UnsupportedBitDepth,
    UnsupportedColorType,
    UnsupportedVersion,
)

# Intensities are snapped to multiples of this step (2**-20) by the stages
# that must support bit-exact residual arithmetic: two grid values in [0, 1]
# always have an exactly representable float32 difference and sum.
INTENSITY_STEP = 2.0 ** -20

_MAGIC = b"SOLC"
_VERSION = b"\x00\x00\x00\x01"
_HEADER = struct.Struct("<IIIfffI")  # kind, width, height, cx, cy, radius, modality
HEADER_SIZE = 8 + _HEADER.size  # 36 bytes

_KIND_IMAGE = 0
_KIND_TRANSMITTANCE = 1
_KIND_RESIDUAL = 2

_PNG16_MAX = 65535


class Modality(IntEnum):
    CAII = 0
    HALPHA = 1
    UNSPECIFIED = 2


class MaskKind(IntEnum):
    TRANSMITTANCE = _KIND_TRANSMITTANCE
    RESIDUAL = _KIND_RESIDUAL


def quantize_intensity(values: np.ndarray) -> np.ndarray:
    """Round values onto the dyadic intensity grid, returning float32."""
    snapped = np.round(np.asarray(values, dtype=np.float64) / INTENSITY_STEP) * INTENSITY_STEP
    return snapped.astype(np.float32)


def disk_mask(height: int, width: int, center: tuple[float, float], radius: float) -> np.ndarray:
    """Boolean mask of pixels whose center lies inside the disk."""
    cx, cy = center
    xs = np.arange(width, dtype=np.float64) - cx
    ys = np.arange(height, dtype=np.float64) - cy
    return (xs[None, :] ** 2 + ys[:, None] ** 2) <= radius * radius


def extend_disk(img: "SolarImage") -> np.ndarray:
    """Replace background pixels by their nearest in-disk value (float64).

    Filters and patch coders work on this view so the zero background cannot
    bleed into windows that touch the limb.
    """
    from scipy import ndimage  # local import keeps basic I/O scipy-free

    inside = img.in_disk()
    if not inside.any():
        raise InvariantViolation("cannot disk-extend an image with no in-disk pixels")
    pixels = img.pixels.astype(np.float64)
    if inside.all():
        return pixels
    _, (iy, ix) = ndimage.distance_transform_edt(~inside, return_indices=True)
    return pixels[iy, ix]


def _as_pixels(values, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if arr.ndim != 2:
        raise InvariantViolation(f"{what} pixels must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvariantViolation(f"{what} contains non-finite pixels")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SolarImage:
    """Normalized grayscale full-disk image plus disk geometry metadata."""

    pixels: np.ndarray
    disk_center: tuple[float, float] = (0.0, 0.0)
    disk_radius: float = 0.0
    modality: Modality = Modality.UNSPECIFIED

    def __post_init__(self):
        arr = _as_pixels(self.pixels, "image")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise InvariantViolation("image pixels must lie in [0, 1]")
        object.__setattr__(self, "pixels", arr)
        object.__setattr__(self, "disk_center", (float(self.disk_center[0]), float(self.disk_center[1])))
        object.__setattr__(self, "disk_radius", float(self.disk_radius))
        object.__setattr__(self, "modality", Modality(self.modality))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def in_disk(self) -> np.ndarray:
        """Boolean mask of in-disk pixels (all False while radius is 0)."""
        return disk_mask(self.height, self.width, self.disk_center, self.disk_radius)

    def with_pixels(self, pixels: np.ndarray) -> "SolarImage":
        """Same geometry and modality, new pixel payload."""
        return SolarImage(pixels, self.disk_center, self.disk_radius, self.modality)

    def same_geometry(self, other: "SolarImage", tol: float = 1e-6) -> bool:
        return (
            self.pixels.shape == other.pixels.shape
            and abs(self.disk_center[0] - other.disk_center[0]) <= tol
            and abs(self.disk_center[1] - other.disk_center[1]) <= tol
            and abs(self.disk_radius - other.disk_radius) <= tol
        )


@dataclass(frozen=True)
class ShadowMask:
    """Predicted or ground-truth cloud mask.

    Transmittance masks hold the fraction of light passing through clouds
    (divide by them to clean); residual masks hold the intensity the clouds
    removed (add them back to clean).
    """

    pixels: np.ndarray
    kind: MaskKind = MaskKind.TRANSMITTANCE

    def __post_init__(self):
        arr = _as_pixels(self.pixels, "mask")
        kind = MaskKind(self.kind)
        if arr.size:
            if kind is MaskKind.TRANSMITTANCE and (arr.min() < 0.0 or arr.max() > 1.0):
                raise InvariantViolation("transmittance mask pixels must lie in [0, 1]")
            if kind is MaskKind.RESIDUAL and arr.min() < 0.0:
                raise InvariantViolation("residual mask pixels must be >= 0")
        object.__setattr__(self, "pixels", arr)
        object.__setattr__(self, "kind", kind)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


# --- SOLC container -----------------------------------------------------------


def write_container(obj: SolarImage | ShadowMask, path) -> None:
    """Serialize an image or mask to the SOLC binary container."""
    if isinstance(obj, SolarImage):
        kind = _KIND_IMAGE
        cx, cy = obj.disk_center
        radius = obj.disk_radius
        modality = int(obj.modality)
    elif isinstance(obj, ShadowMask):
        kind = int(obj.kind)
        cx = cy = radius = 0.0
        modality = 0
    else:
        raise InvariantViolation(f"cannot serialize {type(obj).__name__}")
    header = _MAGIC + _VERSION + _HEADER.pack(
        kind, obj.width, obj.height, cx, cy, radius, modality
    )
    payload = np.ascontiguousarray(obj.pixels, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_container(path) -> SolarImage | ShadowMask:
    """Decode a SOLC file back into the object write_container stored."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(blob) < 8:
        raise TruncatedPayload(f"{path}: file shorter than the 8-byte magic")
    if blob[:4] != _MAGIC:
        raise BadMagic(f"{path}: expected SOLC magic, got {blob[:4]!r}")
    if blob[4:8] != _VERSION:
        raise UnsupportedVersion(f"{path}: unsupported container version {blob[4:8]!r}")
    if len(blob) < HEADER_SIZE:
        raise TruncatedPayload(f"{path}: header truncated at {len(blob)} bytes")
    kind, width, height, cx, cy, radius, modality = _HEADER.unpack(blob[8:HEADER_SIZE])
    expected = HEADER_SIZE + width * height * 4
    if len(blob) != expected:
        raise TruncatedPayload(f"{path}: expected {expected} bytes, found {len(blob)}")
    pixels = np.frombuffer(blob[HEADER_SIZE:], dtype="<f4").reshape(height, width)
    if not np.isfinite(pixels).all():
        raise NonFiniteValue(f"{path}: payload contains non-finite values")
    if kind == _KIND_IMAGE:
        return SolarImage(pixels, (cx, cy), radius, Modality(modality))
    if kind in (_KIND_TRANSMITTANCE, _KIND_RESIDUAL):
        return ShadowMask(pixels, MaskKind(kind))
    raise InvariantViolation(f"{path}: unknown container kind {kind}")


# --- 16-bit grayscale PNG -----------------------------------------------------

_GRAY16_MODES = {"I;16", "I;16B", "I;16L", "I"}


def import_png16(path, modality: Modality = Modality.UNSPECIFIED) -> SolarImage:
    """Load a 16-bit single-channel grayscale PNG, mapping v -> v / 65535.

    The returned image has no disk geometry yet (radius 0); run disk
    detection and normalization before using it in metrics or cleaning.
    """
    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode in ("L", "P", "1"):
                raise UnsupportedBitDepth(f"{path}: {mode}-mode PNG is not 16-bit grayscale")
            if mode not in _GRAY16_MODES:
                raise UnsupportedColorType(f"{path}: mode {mode} is not single-channel grayscale")
            raw = np.asarray(im)
    except (OSError, SyntaxError) as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if raw.max(initial=0) > _PNG16_MAX or raw.min(initial=0) < 0:
        raise UnsupportedBitDepth(f"{path}: sample values exceed 16-bit range")
    pixels = (raw.astype(np.float64) / _PNG16_MAX).astype(np.float32)
    h, w = pixels.shape
    return SolarImage(pixels, ((w - 1) / 2.0, (h - 1) / 2.0), 0.0, modality)


def export_png16(img: SolarImage, path) -> None:
    """Quantize to 16 bits by round(v * 65535) and write a grayscale PNG.

    Disk geometry is not representable in PNG; use the SOLC container when
    geometry must survive the round trip.
    """
    quantized = np.round(img.pixels.astype(np.float64) * _PNG16_MAX).astype(np.uint16)
    try:
        Image.fromarray(quantized).save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def png16_roundtrip_bound() -> float:
    """Worst-case per-pixel error of export followed by import."""
    return 0.5 / _PNG16_MAX


def frame_center(size: int) -> float:
    """Pixel-grid coordinate of the center of a size-pixel frame."""
    return (size - 1) / 2.0


def full_frame_geometry(height: int, width: int) -> tuple[tuple[float, float], float]:
    """Geometry whose disk strictly contains every pixel (for frame-wide metrics)."""
    center = (frame_center(width), frame_center(height))
    radius = math.hypot(width, height)
    return center, radius
