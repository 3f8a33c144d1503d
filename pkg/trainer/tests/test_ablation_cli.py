"""Depth-ablation driver and the command-line entry point."""

import json
import shutil

import pytest

from heliosweep_trainer.ablation import run_depth_ablation
from heliosweep_trainer.cli import main
from heliosweep_trainer.config import TrainConfig

from conftest import build_tiny_dataset

needs_bench = pytest.mark.skipif(
    shutil.which("heliosweep") is None, reason="benchmark CLI not installed"
)


@needs_bench
def test_depth_ablation_table(tmp_path):
    manifest = build_tiny_dataset(
        tmp_path / "ds", n=6, splits=("train", "train", "train", "val", "test", "test")
    )
    base = TrainConfig(n_blocks=4, base_features=8, epochs=1, batch_size=3)
    table = run_depth_ablation(base, manifest, tmp_path / "abl", blocks=(4, 5, 6), seeds=(0, 1))
    lines = table.read_text().splitlines()
    assert lines[0] == "n_blocks,psnr_mean,psnr_std,ssim_mean,ssim_std,rmse_mean,rmse_std"
    assert [line.split(",")[0] for line in lines[1:]] == ["4", "5", "6"]
    # two seeds per depth feed the mean(std) aggregation
    for line in lines[1:]:
        fields = line.split(",")
        assert len(fields) == 7
        float(fields[5]), float(fields[6])


def test_cli_train_and_export(tmp_path, capsys):
    manifest = build_tiny_dataset(
        tmp_path / "ds", n=6, splits=("train", "train", "train", "val", "test", "test")
    )
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {"n_blocks": 4, "base_features": 8, "epochs": 2, "batch_size": 3, "seed": 1}
        )
    )
    export = tmp_path / "exports"
    code = main(
        ["--config", str(cfg_path), "--manifest", str(manifest),
         "--out", str(tmp_path / "run"), "--export-masks", str(export)]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "best epoch" in out
    assert len(list((export / "run_seed1").glob("*.solc"))) == 2
    assert (tmp_path / "run" / "loss_curve.csv").exists()


def test_cli_fid(tmp_path, capsys):
    build_tiny_dataset(tmp_path / "ds", n=4)
    clean = tmp_path / "ds" / "clean"
    code = main(["--manifest", "unused", "--fid", str(clean), str(clean)])
    assert code == 0
    assert "fid: 0.0" in capsys.readouterr().out


def test_cli_rejects_bad_config(tmp_path, capsys):
    manifest = build_tiny_dataset(tmp_path / "ds", n=4)
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"n_blocks": 9}))
    code = main(["--config", str(cfg_path), "--manifest", str(manifest)])
    assert code == 1
    assert "InvalidBlockCount" in capsys.readouterr().err
