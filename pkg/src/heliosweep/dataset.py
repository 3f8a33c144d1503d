"""Build train/validation/test splits of shadow / shadow-free pairs.

Each clean image gets one synthetic composite (more with --repeats), both
ground-truth masks, and a JSON sidecar recording the full recipe. The
manifest is line-delimited JSON with a SHA-256 checksum per referenced file,
so later loads can prove nothing drifted.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cloudsim import CloudRecipe, TextureKind, composite, make_base_texture, sample_recipe
from .errors import CorruptEntry, EmptyInput, MissingFile
from .imagecore import SolarImage, read_container, write_container

SPLIT_NAMES = ("train", "val", "test")


def split_sizes(n: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    """Train/val sizes round to nearest; test takes the remainder."""
    if abs(sum(fractions) - 1.0) > 1e-6:
        raise ValueError(f"split fractions must sum to 1, got {fractions}")
    train = int(np.floor(n * fractions[0] + 0.5))
    val = int(np.floor(n * fractions[1] + 0.5))
    test = n - train - val
    if min(train, val, test) < 0:
        raise ValueError(f"fractions {fractions} give a negative split for n={n}")
    return train, val, test


def assign_splits(
    ids: list[str], fractions: tuple[float, float, float], seed: int
) -> dict[str, str]:
    """Deterministic id -> split-name map from a seeded shuffle of sorted ids."""
    ordered = sorted(ids)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    train, val, _ = split_sizes(len(ordered), fractions)
    assignment: dict[str, str] = {}
    for rank, idx in enumerate(perm):
        if rank < train:
            split = "train"
        elif rank < train + val:
            split = "val"
        else:
            split = "test"
        assignment[ordered[idx]] = split
    return assignment


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    split: str
    clean: str
    cloudy: str
    residual_mask: str
    transmittance_mask: str
    recipe: str
    recipe_seed: int
    checksums: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "image_id": self.image_id,
                "split": self.split,
                "clean": self.clean,
                "cloudy": self.cloudy,
                "residual_mask": self.residual_mask,
                "transmittance_mask": self.transmittance_mask,
                "recipe": self.recipe,
                "recipe_seed": self.recipe_seed,
                "checksums": self.checksums,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(line: str) -> "ManifestEntry":
        raw = json.loads(line)
        return ManifestEntry(
            image_id=raw["image_id"],
            split=raw["split"],
            clean=raw["clean"],
            cloudy=raw["cloudy"],
            residual_mask=raw["residual_mask"],
            transmittance_mask=raw["transmittance_mask"],
            recipe=raw["recipe"],
            recipe_seed=int(raw["recipe_seed"]),
            checksums=dict(raw["checksums"]),
        )


@dataclass(frozen=True)
class Manifest:
    root: Path
    entries: tuple[ManifestEntry, ...]

    def by_split(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def path(self, relative: str) -> Path:
        return self.root / relative

    def save(self, path: Path) -> None:
        lines = [entry.to_json() for entry in self.entries]
        Path(path).write_text("\n".join(lines) + "\n")


def _derived_seed(dataset_seed: int, image_id: str, purpose: str) -> int:
    """Stable 63-bit stream seed from (dataset seed, image id, purpose)."""
    token = f"{dataset_seed}:{image_id}:{purpose}".encode()
    return int.from_bytes(hashlib.sha256(token).digest()[:8], "little") >> 1


def build_dataset(
    clean_dir,
    out_dir,
    seed: int,
    split_fractions: tuple[float, float, float] = (0.561, 0.138, 0.301),
    texture_kind: TextureKind = TextureKind.FLUFFY,
    repeats: int = 1,
    a_max: float = 0.9,
) -> Manifest:
    """Composite one synthetic shadow per clean image and write the manifest.

    Deterministic: all randomness is derived from (seed, image id), so
    rebuilding with the same inputs reproduces every byte.
    """
    clean_paths = sorted(Path(clean_dir).glob("*.solc"))
    if not clean_paths:
        raise EmptyInput(f"no .solc images found in {clean_dir}")
    out = Path(out_dir)
    for sub in ("clean", "cloudy", "masks", "recipes"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    pair_ids: list[str] = []
    sources: dict[str, Path] = {}
    for path in clean_paths:
        for rep in range(repeats):
            pair_id = path.stem if rep == 0 else f"{path.stem}_r{rep}"
            pair_ids.append(pair_id)
            sources[pair_id] = path

    assignment = assign_splits(pair_ids, split_fractions, seed)

    entries: list[ManifestEntry] = []
    for pair_id in sorted(pair_ids):
        clean = read_container(sources[pair_id])
        if not isinstance(clean, SolarImage):
            raise EmptyInput(f"{sources[pair_id]} is not an image container")
        recipe_seed = _derived_seed(seed, pair_id, "recipe")
        texture_seed = _derived_seed(seed, pair_id, "texture")
        recipe = sample_recipe(recipe_seed, texture_kind)
        texture = make_base_texture(texture_kind, clean.width, texture_seed)
        cloudy, gt_residual, gt_transmittance = composite(clean, recipe, texture, a_max)

        rel = {
            "clean": f"clean/{pair_id}.solc",
            "cloudy": f"cloudy/{pair_id}.solc",
            "residual_mask": f"masks/{pair_id}_residual.solc",
            "transmittance_mask": f"masks/{pair_id}_transmittance.solc",
            "recipe": f"recipes/{pair_id}.json",
        }
        write_container(clean, out / rel["clean"])
        write_container(cloudy, out / rel["cloudy"])
        write_container(gt_residual, out / rel["residual_mask"])
        write_container(gt_transmittance, out / rel["transmittance_mask"])
        (out / rel["recipe"]).write_text(recipe.to_json() + "\n")

        checksums = {key: _sha256(out / rel[key]) for key in rel}
        entries.append(
            ManifestEntry(
                image_id=pair_id,
                split=assignment[pair_id],
                recipe_seed=recipe_seed,
                checksums=checksums,
                **rel,
            )
        )

    manifest = Manifest(out, tuple(entries))
    manifest.save(out / "manifest.jsonl")
    return manifest


def load_manifest(path) -> Manifest:
    """Parse a manifest and verify every referenced file exists and matches
    its recorded checksum."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest {path} does not exist")
    root = path.parent
    entries: list[ManifestEntry] = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        entry = ManifestEntry.from_json(line)
        for key, checksum in entry.checksums.items():
            rel = getattr(entry, key)
            target = root / rel
            if not target.exists():
                raise MissingFile(f"{entry.image_id}: missing {target}")
            if _sha256(target) != checksum:
                raise CorruptEntry(f"{entry.image_id}: checksum mismatch for {target}")
        entries.append(entry)
    return Manifest(root, tuple(entries))


def load_recipe(manifest: Manifest, entry: ManifestEntry) -> CloudRecipe:
    return CloudRecipe.from_json(manifest.path(entry.recipe).read_text())
