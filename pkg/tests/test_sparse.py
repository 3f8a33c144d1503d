"""OMP pursuit, dictionary learning, and sparse shadow removal."""

import numpy as np
import pytest

from heliosweep.errors import TooFewPatches
from heliosweep.imagecore import SolarImage, disk_mask, frame_center, quantize_intensity
from heliosweep.sparse import (
    PatchDictionary,
    SparseCleanParams,
    atom_frequency,
    extract_patches,
    learn_dictionary,
    omp_encode,
    omp_encode_batch,
    remove_shadow_sparse,
)

from conftest import apply_field, make_disk


def _orthonormal_dictionary(dim=64, n_atoms=64, seed=0):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((dim, n_atoms)))
    return q


# --- OMP -----------------------------------------------------------------------


def test_omp_single_atom_identity():
    atoms = _orthonormal_dictionary()
    dictionary = PatchDictionary(atoms, 8, 4, True)
    patch = 2.0 * atoms[:, 5]
    coeffs = omp_encode(patch, dictionary, sparsity=1)
    assert coeffs[5] == pytest.approx(2.0, abs=1e-10)
    assert np.count_nonzero(coeffs) == 1


def test_omp_zero_patch():
    atoms = _orthonormal_dictionary()
    dictionary = PatchDictionary(atoms, 8, 4, True)
    coeffs = omp_encode(np.zeros(64), dictionary, sparsity=4)
    assert np.count_nonzero(coeffs) == 0


def test_omp_exact_recovery_orthonormal():
    atoms = _orthonormal_dictionary(seed=3)
    rng = np.random.default_rng(4)
    true = np.zeros((32, 64))
    for row in true:
        idx = rng.choice(64, size=3, replace=False)
        row[idx] = rng.standard_normal(3) * 2.0
    patches = true @ atoms.T
    coeffs = omp_encode_batch(patches, atoms, sparsity=3)
    assert np.max(np.abs(coeffs - true)) < 1e-10


def test_omp_sparsity_budget():
    rng = np.random.default_rng(9)
    atoms = _orthonormal_dictionary(seed=9)
    patches = rng.standard_normal((16, 64))
    for t in (1, 3, 8):
        coeffs = omp_encode_batch(patches, atoms, sparsity=t)
        assert np.max(np.count_nonzero(coeffs, axis=1)) <= t


def test_omp_residual_nonincreasing_with_budget():
    rng = np.random.default_rng(11)
    atoms = _orthonormal_dictionary(seed=11)
    patches = rng.standard_normal((8, 64))
    last = np.inf
    for t in (1, 2, 4, 8, 16):
        coeffs = omp_encode_batch(patches, atoms, sparsity=t)
        residual = float(np.linalg.norm(patches - coeffs @ atoms.T))
        assert residual <= last + 1e-9
        last = residual


# --- dictionary learning ---------------------------------------------------------


def _three_generator_image(size=160, amplitude=(0.15, 0.1)):
    """Every 8x8 window is a combination of {constant, cos, sin} columns."""
    xs = np.arange(size)
    wave = 2.0 * np.pi * xs / 8.0
    row = 0.5 + amplitude[0] * np.cos(wave) + amplitude[1] * np.sin(wave)
    pixels = np.tile(row, (size, 1))
    center = (frame_center(size), frame_center(size))
    radius = 0.44 * size
    inside = disk_mask(size, size, center, radius)
    pixels[~inside] = 0.0
    return SolarImage(pixels.astype(np.float32), center, radius)


def test_learn_dictionary_planted_span():
    img = _three_generator_image()
    dictionary = learn_dictionary(
        img, patch_size=8, n_atoms=8, sparsity=3, n_iters=20, seed=1, mean_removed=False
    )
    assert dictionary.training_rmse[-1] < 1e-4


def test_learn_dictionary_monotone_error():
    img = make_disk(160, value=0.8)
    noisy = img.with_pixels(
        quantize_intensity(
            np.clip(
                img.pixels.astype(np.float64)
                + 0.05 * np.random.default_rng(0).standard_normal(img.pixels.shape),
                0.0,
                1.0,
            )
        )
    )
    dictionary = learn_dictionary(noisy, patch_size=8, n_atoms=24, sparsity=4, n_iters=20, seed=2)
    trace = np.array(dictionary.training_rmse)
    assert len(trace) == 20
    assert np.all(np.diff(trace) <= 1e-9)


def test_learn_dictionary_deterministic():
    img = _three_generator_image()
    a = learn_dictionary(img, patch_size=8, n_atoms=8, sparsity=3, n_iters=5, seed=7)
    b = learn_dictionary(img, patch_size=8, n_atoms=8, sparsity=3, n_iters=5, seed=7)
    assert np.array_equal(a.atoms, b.atoms)


def test_learn_dictionary_too_few_patches():
    img = make_disk(96)
    with pytest.raises(TooFewPatches):
        learn_dictionary(img, patch_size=8, n_atoms=4096, sparsity=4, n_iters=2)


def test_dictionary_unit_columns():
    img = _three_generator_image()
    dictionary = learn_dictionary(img, patch_size=8, n_atoms=8, sparsity=3, n_iters=3, seed=0)
    norms = np.linalg.norm(dictionary.atoms, axis=0)
    assert np.max(np.abs(norms - 1.0)) < 1e-6


# --- shadow removal ---------------------------------------------------------------


_TEST_PARAMS = SparseCleanParams(n_atoms=64, sparsity=6, n_iters=8, seed=0)


def test_sparse_uniform_disk_identity():
    img = make_disk(192, value=0.8)
    cleaned, _ = remove_shadow_sparse(img, _TEST_PARAMS)
    inside = img.in_disk()
    assert np.max(np.abs(cleaned.pixels[inside] - img.pixels[inside])) < 1e-3


def test_sparse_ramp_shadow_recovery():
    img = make_disk(192, value=0.8)
    size = img.width
    cx = img.disk_center[0]
    # transmittance ramps 1 -> 0.6 over the right 40% of the disk, so the
    # unshaded majority anchors the reference illumination
    start = cx + 0.2 * img.disk_radius
    end = cx + img.disk_radius
    xs = np.arange(size, dtype=np.float64)
    ramp = np.clip((xs - start) / (end - start), 0.0, 1.0)
    field = np.tile(1.0 - 0.4 * ramp, (size, 1))
    shadowed = apply_field(img, field)

    cleaned, _ = remove_shadow_sparse(shadowed, _TEST_PARAMS)
    inner = disk_mask(size, size, img.disk_center, 0.8 * img.disk_radius)
    assert np.max(np.abs(cleaned.pixels[inner] - 0.8)) < 3e-2


def test_sparse_checker_contrast_preserved():
    img = make_disk(192, value=0.6)
    size = img.width
    yy, xx = np.mgrid[0:size, 0:size]
    checker = ((xx + yy) % 2).astype(np.float64) * 0.2 - 0.1  # +-0.1 at 2px period
    pixels = img.pixels.astype(np.float64)
    inside = img.in_disk()
    pixels[inside] += checker[inside]
    checkered = img.with_pixels(quantize_intensity(pixels))

    cleaned, _ = remove_shadow_sparse(checkered, _TEST_PARAMS)
    inner = disk_mask(size, size, img.disk_center, 0.7 * img.disk_radius)
    original_contrast = checkered.pixels[inner].max() - checkered.pixels[inner].min()
    cleaned_contrast = cleaned.pixels[inner].max() - cleaned.pixels[inner].min()
    assert abs(cleaned_contrast - original_contrast) <= 0.1 * original_contrast


def test_sparse_decomposition_additivity():
    img = _three_generator_image()
    params = SparseCleanParams(n_atoms=16, sparsity=4, n_iters=6, seed=3)
    dictionary = learn_dictionary(
        img,
        patch_size=params.patch_size,
        n_atoms=params.n_atoms,
        sparsity=params.sparsity,
        n_iters=params.n_iters,
        seed=params.seed,
    )
    patches, _ = extract_patches(img.pixels, params.patch_size, params.stride)
    means = patches.mean(axis=1, keepdims=True)
    centered = patches - means
    coeffs = omp_encode_batch(centered, dictionary.atoms, params.sparsity)

    freq = atom_frequency(dictionary.atoms, params.patch_size)
    shadow = freq < params.freq_cut
    geo_part = coeffs[:, ~shadow] @ dictionary.atoms[:, ~shadow].T
    shadow_part = coeffs[:, shadow] @ dictionary.atoms[:, shadow].T
    residual = centered - coeffs @ dictionary.atoms.T
    rebuilt = means + shadow_part + geo_part + residual
    assert np.max(np.abs(rebuilt - patches)) < 1e-10


def test_atom_frequency_ordering():
    p = 8
    flat = np.ones((p, p)) / p  # DC atom
    checker = np.fromfunction(lambda y, x: (-1.0) ** (x + y), (p, p))
    checker /= np.linalg.norm(checker)
    atoms = np.stack([flat.ravel(), checker.ravel()], axis=1)
    freq = atom_frequency(atoms, p)
    assert freq[0] < 0.05
    assert freq[1] > 0.9
