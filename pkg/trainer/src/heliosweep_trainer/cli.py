"""Command-line interface: heliosweep-train."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .ablation import run_depth_ablation
from .config import DivergedLoss, InvalidBlockCount, TrainConfig
from .fid import TooFewSamples, fid
from .training import export_predictions, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heliosweep-train",
        description="Train cloud-shadow mask predictors against a heliosweep manifest",
    )
    parser.add_argument("--config", help="TrainConfig JSON file (defaults used if omitted)")
    parser.add_argument("--manifest", required=True, help="manifest.jsonl from the dataset builder")
    parser.add_argument("--out", default="train_out", help="checkpoint/loss-curve directory")
    parser.add_argument("--export-masks", default="", help="export test-split predictions here")
    parser.add_argument("--ablate-blocks", action="store_true", help="run the 4/5/6-block ablation")
    parser.add_argument("--ablate-seeds", default="0,1", help="comma-separated seeds for the ablation")
    parser.add_argument("--fid", nargs=2, metavar=("PRED_DIR", "TARGET_DIR"), help="score two image directories")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.fid:
            value = fid(args.fid[0], args.fid[1])
            print(f"fid: {value:.6f}")
            return 0

        cfg = TrainConfig.load(args.config) if args.config else TrainConfig()
        if args.ablate_blocks:
            seeds = tuple(int(s) for s in args.ablate_seeds.split(","))
            table = run_depth_ablation(cfg, args.manifest, args.out, seeds=seeds)
            print(f"ablation table -> {table}")
            return 0

        result = train(cfg, args.manifest, args.out)
        print(
            f"trained {cfg.setup.value}/{cfg.output_head.value} "
            f"({cfg.n_blocks} blocks): best epoch {result.best_epoch}, "
            f"loss {result.best_loss:.5f}, curves -> {result.curve_path}"
        )
        if args.export_masks:
            run_dir = export_predictions(result, args.manifest, args.export_masks)
            print(f"exported test-split predictions -> {run_dir}")
        return 0
    except (InvalidBlockCount, DivergedLoss, TooFewSamples, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
