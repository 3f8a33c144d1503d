"""Procedural cloud textures and deterministic shadow compositing.

A composite attenuates a clean image multiplicatively: cloudy = clean * (1 - A)
with the attenuation A built by summing transparency-weighted, randomly
resized/flipped/placed duplicates of a base texture. Ground-truth masks come
out of the same arithmetic, so residual reconstruction is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import RecipeTextureMismatch
from .imagecore import MaskKind, ShadowMask, SolarImage, quantize_intensity

DEFAULT_A_MAX = 0.9
_NOISE_OCTAVES = 5
_NOISE_PERSISTENCE = 0.5

ALPHA_RANGE = (0.1, 0.4)
SCALE_RANGE = (0.5, 1.0)
DUPLICATE_RANGE = (2, 3)


class TextureKind(str, Enum):
    FLUFFY = "fluffy"
    STREAKED = "streaked"


# --- base textures ------------------------------------------------------------


def _fade(t: np.ndarray) -> np.ndarray:
    # smootherstep: 6t^5 - 15t^4 + 10t^3
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def _value_noise_1d(n: int, cell: float, rng: np.random.Generator) -> np.ndarray:
    lattice = rng.random(int(np.ceil(n / cell)) + 2)
    coords = np.arange(n, dtype=np.float64) / cell
    idx = np.floor(coords).astype(int)
    frac = _fade(coords - idx)
    return lattice[idx] * (1.0 - frac) + lattice[idx + 1] * frac


def _value_noise_2d(h: int, w: int, cell: float, rng: np.random.Generator) -> np.ndarray:
    gh = int(np.ceil(h / cell)) + 2
    gw = int(np.ceil(w / cell)) + 2
    lattice = rng.random((gh, gw))
    ys = np.arange(h, dtype=np.float64) / cell
    xs = np.arange(w, dtype=np.float64) / cell
    yi = np.floor(ys).astype(int)
    xi = np.floor(xs).astype(int)
    fy = _fade(ys - yi)[:, None]
    fx = _fade(xs - xi)[None, :]
    v00 = lattice[np.ix_(yi, xi)]
    v01 = lattice[np.ix_(yi, xi + 1)]
    v10 = lattice[np.ix_(yi + 1, xi)]
    v11 = lattice[np.ix_(yi + 1, xi + 1)]
    top = v00 + fx * (v01 - v00)
    bottom = v10 + fx * (v11 - v10)
    return top + fy * (bottom - top)


def _rescale_01(field: np.ndarray) -> np.ndarray:
    lo = field.min()
    hi = field.max()
    if hi <= lo:
        return np.zeros_like(field)
    return (field - lo) / (hi - lo)


def make_base_texture(
    kind: TextureKind,
    size: int,
    seed: int,
    octaves: int = _NOISE_OCTAVES,
    persistence: float = _NOISE_PERSISTENCE,
    shear: float = 0.0,
) -> np.ndarray:
    """Deterministic size x size cloud texture in [0, 1].

    Fluffy stacks 2-D value-noise octaves. Streaked stacks 1-D octaves along
    the scan (x) axis, constant down each column, optionally sheared by
    `shear` pixels of x-drift per y-pixel.
    """
    if size < 64:
        raise ValueError(f"texture size must be >= 64, got {size}")
    rng = np.random.default_rng(seed)
    kind = TextureKind(kind)
    if kind is TextureKind.FLUFFY:
        acc = np.zeros((size, size), dtype=np.float64)
        amplitude = 1.0
        cell = size / 4.0
        for _ in range(octaves):
            acc += amplitude * _value_noise_2d(size, size, cell, rng)
            amplitude *= persistence
            cell = max(cell / 2.0, 1.0)
        return _rescale_01(acc)

    acc = np.zeros(size, dtype=np.float64)
    amplitude = 1.0
    cell = size / 4.0
    for _ in range(octaves):
        acc += amplitude * _value_noise_1d(size, cell, rng)
        amplitude *= persistence
        cell = max(cell / 2.0, 1.0)
    line = _rescale_01(acc)
    if shear == 0.0:
        return np.tile(line, (size, 1))
    ys = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    xs = np.arange(size, dtype=np.float64)
    pos = (xs[None, :] + shear * ys[:, None]) % size
    idx = np.floor(pos).astype(int)
    frac = pos - idx
    nxt = (idx + 1) % size
    return line[idx] * (1.0 - frac) + line[nxt] * frac


# --- recipes ------------------------------------------------------------------


@dataclass(frozen=True)
class DuplicateSpec:
    """Placement of one texture duplicate inside a composite."""

    scale_x: float
    scale_y: float
    flip_x: bool
    flip_y: bool
    alpha: float
    offset_frac_x: float
    offset_frac_y: float


@dataclass(frozen=True)
class CloudRecipe:
    """Everything needed to rebuild one synthetic shadow, given the texture."""

    seed: int
    texture_kind: TextureKind
    duplicates: tuple[DuplicateSpec, ...]

    @property
    def n_duplicates(self) -> int:
        return len(self.duplicates)

    def to_json(self) -> str:
        payload = asdict(self)
        payload["texture_kind"] = self.texture_kind.value
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "CloudRecipe":
        payload = json.loads(text)
        dups = tuple(DuplicateSpec(**d) for d in payload["duplicates"])
        return CloudRecipe(int(payload["seed"]), TextureKind(payload["texture_kind"]), dups)


def sample_recipe(rng_seed: int, texture_kind: TextureKind = TextureKind.FLUFFY) -> CloudRecipe:
    """Draw a recipe with 2-3 duplicates, scales in [0.5, 1], flips around one
    or two axes, and transparencies in [0.1, 0.4]; deterministic per seed."""
    rng = np.random.default_rng(rng_seed)
    n = int(rng.integers(DUPLICATE_RANGE[0], DUPLICATE_RANGE[1] + 1))
    dups = []
    for _ in range(n):
        scale_x = float(rng.uniform(*SCALE_RANGE))
        scale_y = float(rng.uniform(*SCALE_RANGE))
        flip_x, flip_y = ((True, False), (False, True), (True, True))[int(rng.integers(0, 3))]
        alpha = float(rng.uniform(*ALPHA_RANGE))
        off_x = float(rng.random())
        off_y = float(rng.random())
        dups.append(DuplicateSpec(scale_x, scale_y, flip_x, flip_y, alpha, off_x, off_y))
    return CloudRecipe(int(rng_seed), TextureKind(texture_kind), tuple(dups))


# --- compositing --------------------------------------------------------------


@dataclass(frozen=True)
class CloudField:
    """Composite attenuation map A in [0, a_max], zero outside the disk."""

    attenuation: np.ndarray
    a_max: float

    @property
    def height(self) -> int:
        return self.attenuation.shape[0]

    @property
    def width(self) -> int:
        return self.attenuation.shape[1]


def _resize_bilinear(tex: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    in_h, in_w = tex.shape
    if (out_h, out_w) == (in_h, in_w):
        return tex
    ys = np.linspace(0.0, in_h - 1.0, out_h)
    xs = np.linspace(0.0, in_w - 1.0, out_w)
    yi = np.floor(ys).astype(int)
    xi = np.floor(xs).astype(int)
    yi1 = np.minimum(yi + 1, in_h - 1)
    xi1 = np.minimum(xi + 1, in_w - 1)
    fy = (ys - yi)[:, None]
    fx = (xs - xi)[None, :]
    v00 = tex[np.ix_(yi, xi)]
    v01 = tex[np.ix_(yi, xi1)]
    v10 = tex[np.ix_(yi1, xi)]
    v11 = tex[np.ix_(yi1, xi1)]
    top = v00 + fx * (v01 - v00)
    bottom = v10 + fx * (v11 - v10)
    return top + fy * (bottom - top)


def build_cloud_field(
    shape: tuple[int, int],
    recipe: CloudRecipe,
    base_texture: np.ndarray,
    in_disk: np.ndarray,
    a_max: float = DEFAULT_A_MAX,
) -> CloudField:
    """Sum the recipe's transparency-weighted duplicates into one attenuation map."""
    h, w = shape
    tex = np.asarray(base_texture, dtype=np.float64)
    if tex.shape[0] < h or tex.shape[1] < w:
        raise RecipeTextureMismatch(
            f"texture {tex.shape} is smaller than the {h}x{w} crop it must cover"
        )
    acc = np.zeros(shape, dtype=np.float64)
    for dup in recipe.duplicates:
        t = tex
        if dup.flip_x:
            t = t[:, ::-1]
        if dup.flip_y:
            t = t[::-1, :]
        sh = max(1, int(round(t.shape[0] * dup.scale_y)))
        sw = max(1, int(round(t.shape[1] * dup.scale_x)))
        t = _resize_bilinear(t, sh, sw)
        oy = int(dup.offset_frac_y * sh) % sh
        ox = int(dup.offset_frac_x * sw) % sw
        rows = (np.arange(h) + oy) % sh
        cols = (np.arange(w) + ox) % sw
        acc += dup.alpha * t[np.ix_(rows, cols)]
    attenuation = np.clip(acc, 0.0, a_max)
    attenuation[~in_disk] = 0.0
    return CloudField(attenuation, a_max)


def composite(
    clean: SolarImage,
    recipe: CloudRecipe,
    base_texture: np.ndarray,
    a_max: float = DEFAULT_A_MAX,
) -> tuple[SolarImage, ShadowMask, ShadowMask]:
    """Overlay the synthetic shadow onto a preprocessed clean image.

    Returns (cloudy, gt_residual, gt_transmittance). The cloudy frame is
    snapped to the intensity grid, so cloudy + gt_residual == clean holds
    bit-exactly; gt_transmittance is 1 - A inside the disk and 1 outside.
    """
    if clean.disk_radius <= 0:
        raise ValueError("composite requires a preprocessed image with disk geometry")
    in_disk = clean.in_disk()
    field = build_cloud_field(clean.pixels.shape, recipe, base_texture, in_disk, a_max)
    transmit64 = 1.0 - field.attenuation

    clean32 = clean.pixels
    cloudy32 = quantize_intensity(clean32.astype(np.float64) * transmit64)
    # grid-aligned clean and transmittance <= 1 make this a no-op; it only
    # guards hand-built images whose values are off the intensity grid
    cloudy32 = np.minimum(cloudy32, clean32)
    residual32 = clean32 - cloudy32

    transmit32 = transmit64.astype(np.float32)
    transmit32[~in_disk] = 1.0

    cloudy = clean.with_pixels(cloudy32)
    gt_residual = ShadowMask(residual32, MaskKind.RESIDUAL)
    gt_transmittance = ShadowMask(transmit32, MaskKind.TRANSMITTANCE)
    return cloudy, gt_residual, gt_transmittance
