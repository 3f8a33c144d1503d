"""Builds tiny SOLC datasets straight from the published container format."""

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from heliosweep_trainer.solc import (
    KIND_IMAGE,
    KIND_RESIDUAL,
    KIND_TRANSMITTANCE,
    SolcFrame,
    write_solc,
)


_GRID = 2.0**-20  # intensity grid the benchmark containers use


def _snap(values):
    return (np.round(np.asarray(values, dtype=np.float64) / _GRID) * _GRID).astype(np.float32)


def _disk_frame(size=64, value=0.8, radius_frac=0.42, rng=None):
    center = ((size - 1) / 2.0, (size - 1) / 2.0)
    radius = radius_frac * size
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    inside = (xs - center[0]) ** 2 + (ys - center[1]) ** 2 <= radius**2
    pixels = np.zeros((size, size), dtype=np.float64)
    texture = value if rng is None else value + 0.05 * rng.random((size, size))
    pixels[inside] = (np.full((size, size), texture) if np.isscalar(texture) else texture)[inside]
    return SolcFrame(_snap(np.clip(pixels, 0.0, 1.0)), KIND_IMAGE, center, radius)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def build_tiny_dataset(root: Path, n=6, size=64, splits=("train", "train", "train", "train", "val", "test")):
    """A manifest-backed dataset of clean/cloudy pairs with gt masks."""
    for sub in ("clean", "cloudy", "masks"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(5)
    lines = []
    for i in range(n):
        image_id = f"sun{i:02d}"
        clean = _disk_frame(size, value=0.75, rng=rng)
        ys, xs = np.mgrid[0:size, 0:size]
        shade = 0.3 * (0.5 + 0.5 * np.sin(2 * np.pi * (xs + 13 * i) / size))
        inside = clean.pixels > 0
        attenuation = np.where(inside, shade, 0.0)
        # grid-aligned cloudy keeps clean == cloudy + residual exact in f32
        cloudy_px = np.minimum(_snap(clean.pixels * (1.0 - attenuation)), clean.pixels)
        cloudy = SolcFrame(cloudy_px, KIND_IMAGE, clean.center, clean.radius)
        residual = SolcFrame(clean.pixels - cloudy_px, KIND_RESIDUAL)
        transmittance = SolcFrame(
            np.where(inside, 1.0 - attenuation, 1.0).astype(np.float32), KIND_TRANSMITTANCE
        )

        rel = {
            "clean": f"clean/{image_id}.solc",
            "cloudy": f"cloudy/{image_id}.solc",
            "residual_mask": f"masks/{image_id}_residual.solc",
            "transmittance_mask": f"masks/{image_id}_transmittance.solc",
            "recipe": f"masks/{image_id}_recipe.json",
        }
        write_solc(clean, root / rel["clean"])
        write_solc(cloudy, root / rel["cloudy"])
        write_solc(residual, root / rel["residual_mask"])
        write_solc(transmittance, root / rel["transmittance_mask"])
        (root / rel["recipe"]).write_text(json.dumps({"seed": i}) + "\n")

        lines.append(
            json.dumps(
                {
                    "image_id": image_id,
                    "split": splits[i % len(splits)],
                    **rel,
                    "recipe_seed": i,
                    "checksums": {key: _sha256(root / rel[key]) for key in rel},
                },
                sort_keys=True,
            )
        )
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


@pytest.fixture()
def tiny_manifest(tmp_path):
    return build_tiny_dataset(tmp_path / "ds")
