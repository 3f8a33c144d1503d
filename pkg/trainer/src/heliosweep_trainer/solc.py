"""Reader/writer for the SOLC container format the benchmark toolkit speaks.

Layout (little-endian): 8-byte magic ``SOLC\\x00\\x00\\x00\\x01``, then
u32 kind (0 image / 1 transmittance mask / 2 residual mask), u32 width,
u32 height, f32 cx, f32 cy, f32 radius, u32 modality, then width*height
float32 pixels row-major. 36-byte header total.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"SOLC\x00\x00\x00\x01"
_HEADER = struct.Struct("<IIIfffI")
HEADER_SIZE = 8 + _HEADER.size

KIND_IMAGE = 0
KIND_TRANSMITTANCE = 1
KIND_RESIDUAL = 2


@dataclass(frozen=True)
class SolcFrame:
    """One decoded container: pixels plus kind and disk geometry."""

    pixels: np.ndarray
    kind: int
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    modality: int = 0

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def read_solc(path) -> SolcFrame:
    blob = Path(path).read_bytes()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: not a SOLC v1 container")
    kind, width, height, cx, cy, radius, modality = _HEADER.unpack(blob[8:HEADER_SIZE])
    expected = HEADER_SIZE + width * height * 4
    if len(blob) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(blob)}")
    pixels = np.frombuffer(blob[HEADER_SIZE:], dtype="<f4").reshape(height, width).copy()
    return SolcFrame(pixels, kind, (cx, cy), radius, modality)


def write_solc(frame: SolcFrame, path) -> None:
    pixels = np.ascontiguousarray(frame.pixels, dtype="<f4")
    if not np.isfinite(pixels).all():
        raise ValueError("refusing to write non-finite pixels")
    header = MAGIC + _HEADER.pack(
        frame.kind,
        pixels.shape[1],
        pixels.shape[0],
        frame.center[0],
        frame.center[1],
        frame.radius,
        frame.modality,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())
