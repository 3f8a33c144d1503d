"""Benchmark orchestration: determinism, failure accounting, panels."""

import numpy as np
import pytest
from PIL import Image

from heliosweep.dataset import build_dataset
from heliosweep.errors import MissingMaskRun, ShapeMismatch, UnknownMethod
from heliosweep.harness import render_panel, run_benchmark
from heliosweep.imagecore import read_container, write_container
from heliosweep.metrics import summarize

from conftest import make_disk


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench")
    clean_dir = root / "clean"
    clean_dir.mkdir()
    for i in range(20):
        write_container(make_disk(96, value=0.72 + 0.005 * i), clean_dir / f"sun{i:02d}.solc")
    manifest = build_dataset(
        clean_dir, root / "ds", seed=21, split_fractions=(0.0, 0.0, 1.0)
    )
    return root, manifest


def test_gt_residual_oracle_is_perfect(small_dataset, tmp_path):
    _, manifest = small_dataset
    report = run_benchmark(manifest, ["gt-residual"], tmp_path / "out")
    result = report.methods["gt-residual"]
    assert result.rmse_mean == 0.0
    assert result.failures == 0
    assert result.n_scored == 20


def test_failure_accounting_with_withheld_neighbours(small_dataset, tmp_path):
    _, manifest = small_dataset
    entries = manifest.by_split("test")
    neighbours = {e.image_id: manifest.path(e.clean) for e in entries[3:]}
    report = run_benchmark(
        manifest, ["feng"], tmp_path / "out", neighbours=neighbours
    )
    result = report.methods["feng"]
    assert result.failures == 3
    assert result.n_scored == 17


def test_reports_byte_identical(small_dataset, tmp_path):
    _, manifest = small_dataset
    run_benchmark(manifest, ["gt-residual", "gt-division", "identity"], tmp_path / "a")
    run_benchmark(manifest, ["gt-residual", "gt-division", "identity"], tmp_path / "b")
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_identical_mask_runs_zero_std(small_dataset, tmp_path):
    root, manifest = small_dataset
    mask_root = tmp_path / "maskruns"
    for run in ("run0", "run1"):
        run_dir = mask_root / run
        run_dir.mkdir(parents=True)
        for entry in manifest.by_split("test"):
            mask = read_container(manifest.path(entry.residual_mask))
            write_container(mask, run_dir / f"{entry.image_id}.solc")
    report = run_benchmark(manifest, [f"mask:{mask_root}"], tmp_path / "out")
    result = report.methods[f"mask:{mask_root.name}"]
    assert result.n_runs == 2
    assert result.rmse_std == 0.0
    assert result.ssim_std == 0.0
    assert result.rmse_mean == 0.0


def test_unknown_method_rejected(small_dataset, tmp_path):
    _, manifest = small_dataset
    with pytest.raises(UnknownMethod):
        run_benchmark(manifest, ["warp-drive"], tmp_path / "out")


def test_missing_mask_run_rejected(small_dataset, tmp_path):
    _, manifest = small_dataset
    with pytest.raises(MissingMaskRun):
        run_benchmark(manifest, [f"mask:{tmp_path / 'nowhere'}"], tmp_path / "out")


def test_summary_matches_recomputed_csv(small_dataset, tmp_path):
    _, manifest = small_dataset
    report = run_benchmark(manifest, ["identity"], tmp_path / "out")
    lines = (tmp_path / "out" / "report.csv").read_text().splitlines()[1:]
    rmses = [float(line.split(",")[5]) for line in lines]
    mean, std = summarize([float(np.mean(rmses))])
    assert report.methods["identity"].rmse_mean == pytest.approx(mean, abs=1e-12)
    assert report.methods["identity"].rmse_std == pytest.approx(std, abs=1e-12)


def test_render_panel_grid_arithmetic(tmp_path):
    images = [make_disk(64, value=0.5 + 0.05 * i) for i in range(6)]
    out = tmp_path / "panel.png"
    render_panel(images, [f"m{i}" for i in range(6)], out)
    with Image.open(out) as im:
        assert im.size == (3 * 64, 2 * (64 + 20))


def test_render_panel_single_image(tmp_path):
    out = tmp_path / "one.png"
    render_panel([make_disk(64)], ["only"], out)
    with Image.open(out) as im:
        assert im.size == (64, 64 + 20)


def test_render_panel_shape_mismatch(tmp_path):
    with pytest.raises(ShapeMismatch):
        render_panel([make_disk(64), make_disk(96)], ["a", "b"], tmp_path / "x.png")


def test_bench_writes_panels(small_dataset, tmp_path):
    _, manifest = small_dataset
    run_benchmark(manifest, ["gt-residual"], tmp_path / "out", panels=2)
    panels = sorted((tmp_path / "out" / "panels").glob("*.png"))
    assert len(panels) == 2
