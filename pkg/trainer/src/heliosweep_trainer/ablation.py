"""Depth ablation: train at 4/5/6 blocks across seeds and tabulate mean(std).

Scoring stays the benchmark harness's job: each (depth, seed) run exports a
mask run-directory, the `heliosweep bench` CLI scores them per depth, and
this module only reshapes the resulting summary.json into one CSV.
"""

from __future__ import annotations

import dataclasses
import json
import subprocess
import sys
from pathlib import Path

from .config import TrainConfig
from .training import export_predictions, train


def run_depth_ablation(
    base_cfg: TrainConfig,
    manifest_path,
    out_dir,
    blocks=(4, 5, 6),
    seeds=(0, 1),
    bench_command: str = "heliosweep",
) -> Path:
    """Train every (n_blocks, seed) pair and write ablation.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["n_blocks,psnr_mean,psnr_std,ssim_mean,ssim_std,rmse_mean,rmse_std"]

    for n_blocks in blocks:
        mask_root = out / f"masks_b{n_blocks}"
        for seed in seeds:
            cfg = dataclasses.replace(base_cfg, n_blocks=n_blocks, seed=seed)
            result = train(cfg, manifest_path, out / f"train_b{n_blocks}_s{seed}")
            export_predictions(result, manifest_path, mask_root)

        bench_dir = out / f"bench_b{n_blocks}"
        subprocess.run(
            [
                bench_command,
                "bench",
                "--manifest",
                str(manifest_path),
                "--methods",
                f"mask:{mask_root}",
                "--out",
                str(bench_dir),
            ],
            check=True,
            stdout=subprocess.DEVNULL,
            stderr=sys.stderr,
        )
        summary = json.loads((bench_dir / "summary.json").read_text())
        stats = summary[f"mask:{mask_root.name}"]
        rows.append(
            f"{n_blocks},{stats['psnr']['mean']!r},{stats['psnr']['std']!r},"
            f"{stats['ssim']['mean']!r},{stats['ssim']['std']!r},"
            f"{stats['rmse']['mean']!r},{stats['rmse']['std']!r}"
        )

    table = out / "ablation.csv"
    table.write_text("\n".join(rows) + "\n")
    return table
