"""Secondary acceptance gate: trainer-side criteria plus benchmark interop.

Run with `pytest tests/test_acceptance_secondary.py -v -s` for one PASS line
per criterion. The interop tests drive the benchmark toolkit through its CLI
and file formats only.
"""

import json
import shutil
import subprocess

import numpy as np
import pytest
import torch

from heliosweep_trainer.config import OutputHead, TrainConfig
from heliosweep_trainer.fid import fid
from heliosweep_trainer.patchgan import PATCHGAN_LAYERS, receptive_field
from heliosweep_trainer.solc import KIND_IMAGE, SolcFrame, read_solc, write_solc
from heliosweep_trainer.training import (
    _load_tensor_pairs,
    compose_cleaned,
    export_predictions,
    read_manifest_pairs,
    train,
)
from heliosweep_trainer.unet import build_generator

from conftest import build_tiny_dataset


def _report(name: str) -> None:
    print(f"[PASS] {name}")


def test_overfit_smoke_and_division_head_range(tmp_path):
    """Residual-head FS model overfits 4 pairs to RMSE < 0.01 in 200 epochs."""
    manifest = build_tiny_dataset(tmp_path / "ds", n=4, splits=("train",) * 4)
    cfg = TrainConfig(
        n_blocks=4,
        base_features=16,
        epochs=200,
        batch_size=4,
        seed=0,
        fs_lr=1e-3,
        output_head=OutputHead.RESIDUAL_MASK,
    )
    result = train(cfg, manifest, tmp_path / "run")
    records = [p for p in read_manifest_pairs(manifest) if p.split == "train"]
    cloudy, clean, _ = _load_tensor_pairs(records)
    result.generator.eval()
    with torch.no_grad():
        cleaned = compose_cleaned(cloudy, result.generator(cloudy), cfg)
    train_rmse = float(torch.sqrt(torch.mean((cleaned - clean) ** 2)))
    assert train_rmse < 0.01

    div = build_generator(TrainConfig(n_blocks=4, base_features=8, output_head=OutputHead.DIVISION_MASK))
    with torch.no_grad():
        raw = div(torch.randn(3, 1, 64, 64) * 4.0)
    assert float(raw.min()) >= 0.0 and float(raw.max()) <= 1.0
    _report(
        f"overfit smoke: train RMSE {train_rmse:.4f} < 0.01 after 200 epochs; "
        f"division-head raw range [{float(raw.min()):.3f}, {float(raw.max()):.3f}] within [0, 1]"
    )


def test_patchgan_receptive_field():
    """Layer-stack arithmetic gives exactly a 70x70 receptive field."""
    field = receptive_field(PATCHGAN_LAYERS)
    assert field == 70
    _report(f"patchgan receptive field: {field}x{field}")


@pytest.mark.skipif(shutil.which("heliosweep") is None, reason="benchmark CLI not installed")
def test_exports_flow_through_benchmark_harness(tmp_path):
    """Trainer exports validate and score end-to-end in the benchmark CLI."""
    manifest = build_tiny_dataset(
        tmp_path / "ds", n=6, splits=("train", "train", "train", "val", "test", "test")
    )

    # a real (briefly trained) export must be consumable with zero errors
    cfg = TrainConfig(n_blocks=4, base_features=8, epochs=2, batch_size=3, seed=0)
    result = train(cfg, manifest, tmp_path / "run")
    mask_dir = tmp_path / "masks"
    export_predictions(result, manifest, mask_dir)

    bench = tmp_path / "bench"
    proc = subprocess.run(
        ["heliosweep", "bench", "--manifest", str(manifest),
         "--methods", f"mask:{mask_dir}", "--out", str(bench)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((bench / "summary.json").read_text())
    entry = summary[f"mask:{mask_dir.name}"]
    assert entry["scored"] == 2 and entry["failures"] == 0

    # ground-truth-equivalent exports must score RMSE 0 end to end
    oracle_dir = tmp_path / "oracle" / "run_seed0"
    oracle_dir.mkdir(parents=True)
    root = manifest.parent
    for line in manifest.read_text().splitlines():
        raw = json.loads(line)
        if raw["split"] != "test":
            continue
        gt = read_solc(root / raw["residual_mask"])
        write_solc(gt, oracle_dir / f"{raw['image_id']}.solc")
    bench2 = tmp_path / "bench_oracle"
    proc2 = subprocess.run(
        ["heliosweep", "bench", "--manifest", str(manifest),
         "--methods", f"mask:{tmp_path / 'oracle'}", "--out", str(bench2)],
        capture_output=True, text=True,
    )
    assert proc2.returncode == 0, proc2.stderr
    summary2 = json.loads((bench2 / "summary.json").read_text())
    oracle_entry = summary2["mask:oracle"]
    assert oracle_entry["rmse"]["mean"] == 0.0
    _report(
        f"harness interop: {entry['scored']} trainer exports scored with 0 validation errors; "
        f"gt-equivalent exports RMSE {oracle_entry['rmse']['mean']} end-to-end"
    )


def test_fid_criteria(tmp_path):
    """FID near zero on identical sets and strictly larger under noise."""
    build_tiny_dataset(tmp_path / "ds", n=6)
    clean = tmp_path / "ds" / "clean"
    identical = fid(clean, clean)
    assert identical < 1e-3

    noisy_dir = tmp_path / "noisy"
    noisy_dir.mkdir()
    rng = np.random.default_rng(1)
    for path in sorted(clean.glob("*.solc")):
        frame = read_solc(path)
        noisy = np.clip(frame.pixels + rng.normal(0, 0.2, frame.pixels.shape), 0, 1)
        write_solc(
            SolcFrame(noisy.astype(np.float32), KIND_IMAGE, frame.center, frame.radius),
            noisy_dir / path.name,
        )
    shifted = fid(noisy_dir, clean)
    assert shifted > identical
    _report(f"fid: identical sets {identical:.2e} < 1e-3; with noise {shifted:.4f} (increased)")
