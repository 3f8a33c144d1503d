"""Command-line interface: heliosweep <subcommand>."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .classical import feng_transmittance, fuller_median
from .cloudsim import TextureKind, composite, make_base_texture, sample_recipe
from .coverage import coverage_level, triage
from .dataset import build_dataset, load_manifest
from .errors import HeliosweepError, KindMismatch
from .harness import run_benchmark
from .imagecore import (
    MaskKind,
    Modality,
    ShadowMask,
    SolarImage,
    export_png16,
    import_png16,
    read_container,
    write_container,
)
from .maskops import apply_division, apply_residual, apply_shadow_ratio
from .metrics import evaluate_pair
from .preprocess import detect_disk, normalize_disk
from .sparse import SparseCleanParams, remove_shadow_sparse


def _load_image(path: Path) -> SolarImage:
    if path.suffix.lower() == ".png":
        return import_png16(path)
    obj = read_container(path)
    if not isinstance(obj, SolarImage):
        raise KindMismatch(f"{path} holds a mask, not an image")
    return obj


def _cmd_preprocess(args) -> int:
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = sorted(list(in_dir.glob("*.png")) + list(in_dir.glob("*.solc")))
    if not paths:
        print(f"no input images in {in_dir}", file=sys.stderr)
        return 1
    for path in paths:
        img = _load_image(path)
        geom = detect_disk(img, args.quantile)
        normalized = normalize_disk(img, geom, args.size, args.radius_frac)
        write_container(normalized, out_dir / f"{path.stem}.solc")
        print(f"{path.name}: disk ({geom.cx:.1f}, {geom.cy:.1f}) r={geom.radius:.1f}px")
    return 0


def _cmd_synth(args) -> int:
    clean_dir = Path(args.clean)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = TextureKind(args.texture)
    paths = sorted(clean_dir.glob("*.solc"))[: args.count or None]
    if not paths:
        print(f"no .solc images in {clean_dir}", file=sys.stderr)
        return 1
    for idx, path in enumerate(paths):
        clean = _load_image(path)
        recipe = sample_recipe(args.seed + idx, kind)
        texture = make_base_texture(kind, clean.width, args.seed + idx)
        cloudy, residual, transmittance = composite(clean, recipe, texture, args.a_max)
        write_container(cloudy, out_dir / f"{path.stem}_cloudy.solc")
        write_container(residual, out_dir / f"{path.stem}_residual.solc")
        write_container(transmittance, out_dir / f"{path.stem}_transmittance.solc")
        (out_dir / f"{path.stem}_recipe.json").write_text(recipe.to_json() + "\n")
        print(f"{path.stem}: {recipe.n_duplicates} duplicates, kind {kind.value}")
    return 0


def _cmd_coverage(args) -> int:
    cloudfree, cloudy = triage(args.in_dir, args.threshold)
    if args.report:
        with open(args.report, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "coverage", "class"])
            for group, name in ((cloudfree, "cloudfree"), (cloudy, "cloudy")):
                for path in group:
                    img = read_container(path)
                    writer.writerow([str(path), f"{coverage_level(img):.6f}", name])
    print(f"cloud-free: {len(cloudfree)}  cloudy: {len(cloudy)}")
    return 0


def _cmd_clean(args) -> int:
    cloudy = _load_image(Path(args.in_path))
    if args.method == "feng":
        neighbour = _load_image(Path(args.neighbour)) if args.neighbour else None
        mask, cleaned = feng_transmittance(cloudy, neighbour, args.struct_radius)
    elif args.method == "fuller":
        k2 = None if str(args.k2).lower() == "auto" else int(args.k2)
        mask, cleaned = fuller_median(cloudy, args.k1, k2, args.structure_thresh)
    elif args.method == "sparse":
        params = SparseCleanParams(
            patch_size=args.patch,
            n_atoms=args.atoms,
            sparsity=args.sparsity,
            seed=args.seed,
        )
        cleaned, mask = remove_shadow_sparse(cloudy, params)
    else:
        print(f"unknown method {args.method}", file=sys.stderr)
        return 2
    write_container(cleaned, args.out)
    if args.mask_out:
        write_container(mask, args.mask_out)
    print(f"cleaned -> {args.out}")
    return 0


def _cmd_apply(args) -> int:
    img = _load_image(Path(args.in_path))
    mask = read_container(args.mask)
    if not isinstance(mask, ShadowMask):
        raise KindMismatch(f"{args.mask} holds an image, not a mask")
    if args.eq == "ratio":
        cleaned = apply_shadow_ratio(img, mask)
    elif args.eq == "division":
        cleaned = apply_division(img, mask, args.epsilon)
    else:
        cleaned = apply_residual(img, mask)
    write_container(cleaned, args.out)
    print(f"applied {args.eq} -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    pred_dir = Path(args.pred)
    target_dir = Path(args.target)
    rows = []
    for pred_path in sorted(pred_dir.glob("*.solc")):
        target_path = target_dir / pred_path.name
        if not target_path.exists():
            continue
        record = evaluate_pair(_load_image(pred_path), _load_image(target_path))
        rows.append((pred_path.stem, record))
    with open(args.report, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "method", "psnr_db", "ssim", "rmse"])
        for image_id, record in rows:
            writer.writerow([image_id, args.method, repr(record.psnr), repr(record.ssim), repr(record.rmse)])
    print(f"scored {len(rows)} pairs -> {args.report}")
    return 0


def _cmd_dataset(args) -> int:
    fractions = tuple(float(f) for f in args.splits.split(","))
    manifest = build_dataset(
        args.clean,
        args.out,
        args.seed,
        fractions,  # type: ignore[arg-type]
        TextureKind(args.texture),
        repeats=args.repeats,
    )
    counts = {name: len(manifest.by_split(name)) for name in ("train", "val", "test")}
    print(f"built {len(manifest.entries)} pairs: {counts}")
    return 0


def _cmd_bench(args) -> int:
    manifest = load_manifest(args.manifest)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    report = run_benchmark(manifest, methods, args.out, split=args.split, panels=args.panels)
    for name, result in sorted(report.methods.items()):
        print(
            f"{name}: rmse {result.rmse_mean:.5f}({result.rmse_std:.5f}) "
            f"psnr {result.psnr_mean:.2f} ssim {result.ssim_mean:.4f} "
            f"failures {result.failures}"
        )
    return 0


def _cmd_export(args) -> int:
    img = _load_image(Path(args.in_path))
    export_png16(img, args.out)
    print(f"exported -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heliosweep", description=__doc__)
    parser.add_argument("--version", action="version", version=f"heliosweep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="detect, center, and normalize solar disks")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--radius-frac", type=float, default=0.45)
    p.add_argument("--quantile", type=float, default=0.5)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("synth", help="composite synthetic cloud shadows")
    p.add_argument("--clean", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--texture", choices=["fluffy", "streaked"], default="fluffy")
    p.add_argument("--count", type=int, default=0, help="0 = all")
    p.add_argument("--a-max", type=float, default=0.9)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("coverage", help="triage images by cloud coverage level")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--report", default="")
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("clean", help="remove shadows from one image")
    p.add_argument("--method", choices=["feng", "fuller", "sparse"], required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mask-out", default="")
    p.add_argument("--neighbour", default="")
    p.add_argument("--struct-radius", type=int, default=None)
    p.add_argument("--k1", type=int, default=9)
    p.add_argument("--k2", default="auto")
    p.add_argument("--structure-thresh", type=float, default=0.08)
    p.add_argument("--patch", type=int, default=8)
    p.add_argument("--atoms", type=int, default=256)
    p.add_argument("--sparsity", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_clean)

    p = sub.add_parser("apply", help="apply a shadow mask")
    p.add_argument("--eq", choices=["ratio", "division", "residual"], required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser("eval", help="score predicted images against targets")
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--method", default="external")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("dataset", help="build a paired synthetic dataset with splits")
    p.add_argument("--clean", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--splits", default="0.561,0.138,0.301")
    p.add_argument("--texture", choices=["fluffy", "streaked"], default="fluffy")
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("bench", help="run the benchmark harness")
    p.add_argument("--manifest", required=True)
    p.add_argument("--methods", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--panels", type=int, default=0)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("export", help="export an image to 16-bit PNG")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HeliosweepError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
