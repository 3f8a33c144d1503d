"""End-to-end benchmark orchestration.

Cleans every test-split image with each configured method, scores the result
against the clean target, excludes failure cases from aggregates while
reporting their count, and writes a per-image CSV, a summary JSON, and
optional side-by-side comparison panels. Reruns with identical inputs
reproduce report.csv byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .classical import feng_transmittance, fuller_median
from .dataset import Manifest, ManifestEntry
from .errors import (
    MissingMaskRun,
    NeighbourUnavailable,
    ShapeMismatch,
    UnknownMethod,
)
from .imagecore import MaskKind, ShadowMask, SolarImage, read_container
from .maskops import DIVISION_EPSILON, apply_division, apply_residual
from .metrics import EvalRecord, evaluate_pair, summarize
from .sparse import SparseCleanParams, remove_shadow_sparse

_LABEL_STRIP = 20
_BUILTIN_METHODS = ("feng", "fuller", "sparse", "gt-residual", "gt-division", "identity")


@dataclass(frozen=True)
class MethodResult:
    """Aggregates for one method over all runs, failures excluded."""

    method: str
    n_runs: int
    n_scored: int
    failures: int
    psnr_mean: float
    psnr_std: float
    ssim_mean: float
    ssim_std: float
    rmse_mean: float
    rmse_std: float


@dataclass
class EvalReport:
    per_image: list[tuple[str, str, str, EvalRecord]] = field(default_factory=list)
    methods: dict[str, MethodResult] = field(default_factory=dict)

    def csv_lines(self) -> list[str]:
        lines = ["image_id,method,run,psnr_db,ssim,rmse"]
        ordered = sorted(self.per_image, key=lambda row: (row[1], row[2], row[0]))
        for image_id, method, run, record in ordered:
            lines.append(
                f"{image_id},{method},{run},{record.psnr!r},{record.ssim!r},{record.rmse!r}"
            )
        return lines

    def summary_payload(self) -> dict:
        out = {}
        for name in sorted(self.methods):
            m = self.methods[name]
            out[name] = {
                "runs": m.n_runs,
                "scored": m.n_scored,
                "failures": m.failures,
                "psnr": {"mean": m.psnr_mean, "std": m.psnr_std},
                "ssim": {"mean": m.ssim_mean, "std": m.ssim_std},
                "rmse": {"mean": m.rmse_mean, "std": m.rmse_std},
            }
        return out


def _clean_with_method(
    method: str,
    entry: ManifestEntry,
    manifest: Manifest,
    neighbours: dict[str, Path],
    sparse_params: SparseCleanParams,
) -> SolarImage:
    cloudy = read_container(manifest.path(entry.cloudy))
    if method == "identity":
        return cloudy
    if method == "feng":
        neighbour_path = neighbours.get(entry.image_id)
        if neighbour_path is None:
            raise NeighbourUnavailable(f"no neighbour configured for {entry.image_id}")
        neighbour = read_container(neighbour_path)
        _, cleaned = feng_transmittance(cloudy, neighbour)
        return cleaned
    if method == "fuller":
        _, cleaned = fuller_median(cloudy)
        return cleaned
    if method == "sparse":
        cleaned, _ = remove_shadow_sparse(cloudy, sparse_params)
        return cleaned
    if method == "gt-residual":
        mask = read_container(manifest.path(entry.residual_mask))
        return apply_residual(cloudy, mask)
    if method == "gt-division":
        mask = read_container(manifest.path(entry.transmittance_mask))
        return apply_division(cloudy, mask, DIVISION_EPSILON)
    raise UnknownMethod(f"unsupported method {method!r}")


def _mask_runs(mask_dir: Path) -> list[tuple[str, Path]]:
    if not mask_dir.is_dir():
        raise MissingMaskRun(f"mask directory {mask_dir} does not exist")
    subdirs = sorted(p for p in mask_dir.iterdir() if p.is_dir())
    if subdirs:
        return [(p.name, p) for p in subdirs]
    return [(mask_dir.name, mask_dir)]


def _clean_with_mask_file(cloudy: SolarImage, mask_path: Path) -> SolarImage:
    if not mask_path.exists():
        raise MissingMaskRun(f"missing mask file {mask_path}")
    obj = read_container(mask_path)
    if isinstance(obj, SolarImage):
        # trainer predicted the cleaned frame directly
        return cloudy.with_pixels(obj.pixels)
    assert isinstance(obj, ShadowMask)
    if obj.kind is MaskKind.RESIDUAL:
        return apply_residual(cloudy, obj)
    return apply_division(cloudy, obj, DIVISION_EPSILON)


def run_benchmark(
    manifest: Manifest,
    methods: list[str],
    out_dir,
    neighbours: dict[str, Path] | None = None,
    split: str = "test",
    sparse_params: SparseCleanParams = SparseCleanParams(),
    panels: int = 0,
) -> EvalReport:
    """Score each method on the manifest's chosen split.

    `neighbours` maps image_id to a clean-neighbour SOLC path for the feng
    method; by default every image's own clean counterpart is used, and
    entries removed from the map are counted as failures. Methods of the
    form ``mask:DIR`` read predicted masks from DIR (one subdirectory per
    run, files named <image_id>.solc).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = manifest.by_split(split) or list(manifest.entries)
    entries = sorted(entries, key=lambda e: e.image_id)
    if neighbours is None:
        neighbours = {e.image_id: manifest.path(e.clean) for e in entries}

    for method in methods:
        if not (method in _BUILTIN_METHODS or method.startswith("mask:")):
            raise UnknownMethod(f"unsupported method {method!r}")

    report = EvalReport()
    panel_ids = {e.image_id for e in entries[:panels]} if panels else set()
    rendered: dict[str, dict[str, SolarImage]] = {}

    for method in methods:
        label = method
        if method.startswith("mask:"):
            runs = _mask_runs(Path(method[len("mask:") :]))
            label = f"mask:{Path(method[len('mask:'):]).name}"
        else:
            runs = [("run0", None)]

        failures = 0
        per_run_records: list[list[EvalRecord]] = []
        for run_name, run_dir in runs:
            records: list[EvalRecord] = []
            for entry in entries:
                target = read_container(manifest.path(entry.clean))
                try:
                    if run_dir is None:
                        cleaned = _clean_with_method(
                            method, entry, manifest, neighbours, sparse_params
                        )
                    else:
                        cloudy = read_container(manifest.path(entry.cloudy))
                        cleaned = _clean_with_mask_file(cloudy, run_dir / f"{entry.image_id}.solc")
                except NeighbourUnavailable:
                    failures += 1
                    continue
                record = evaluate_pair(cleaned, target)
                records.append(record)
                report.per_image.append((entry.image_id, label, run_name, record))
                if entry.image_id in panel_ids:
                    rendered.setdefault(entry.image_id, {})[label] = cleaned
            per_run_records.append(records)

        report.methods[label] = _aggregate_method(label, per_run_records, failures)

    _write_reports(report, out)
    if panels:
        _write_panels(manifest, entries[:panels], rendered, out / "panels")
    return report


def _aggregate_method(
    label: str, per_run_records: list[list[EvalRecord]], failures: int
) -> MethodResult:
    run_means = {
        name: [
            float(np.mean([getattr(r, name) for r in records])) if records else math.nan
            for records in per_run_records
        ]
        for name in ("psnr", "ssim", "rmse")
    }
    psnr_mean, psnr_std = summarize(run_means["psnr"])
    ssim_mean, ssim_std = summarize(run_means["ssim"])
    rmse_mean, rmse_std = summarize(run_means["rmse"])
    return MethodResult(
        method=label,
        n_runs=len(per_run_records),
        n_scored=sum(len(records) for records in per_run_records),
        failures=failures,
        psnr_mean=psnr_mean,
        psnr_std=psnr_std,
        ssim_mean=ssim_mean,
        ssim_std=ssim_std,
        rmse_mean=rmse_mean,
        rmse_std=rmse_std,
    )


def _write_reports(report: EvalReport, out: Path) -> None:
    (out / "report.csv").write_text("\n".join(report.csv_lines()) + "\n")
    (out / "summary.json").write_text(
        json.dumps(report.summary_payload(), indent=2, sort_keys=True) + "\n"
    )


# --- panels ---------------------------------------------------------------------


def render_panel(images: list, labels: list[str], out_png) -> None:
    """Tile equally-sized grayscale frames with caption strips into one PNG."""
    arrays = [img.pixels if isinstance(img, SolarImage) else np.asarray(img) for img in images]
    if len(arrays) != len(labels):
        raise ShapeMismatch(f"{len(arrays)} images but {len(labels)} labels")
    if not arrays:
        raise ShapeMismatch("no images to render")
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise ShapeMismatch("panel images must share one shape")

    n = len(arrays)
    cols = math.ceil(math.sqrt(n)) if n > 2 else n
    rows = math.ceil(n / cols)
    h, w = shape
    tile_h = h + _LABEL_STRIP
    canvas = Image.new("L", (cols * w, rows * tile_h), color=0)
    draw = ImageDraw.Draw(canvas)
    for idx, (arr, label) in enumerate(zip(arrays, labels)):
        r, c = divmod(idx, cols)
        x0 = c * w
        y0 = r * tile_h
        frame = Image.fromarray((np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8))
        canvas.paste(frame, (x0, y0 + _LABEL_STRIP))
        draw.text((x0 + 4, y0 + 4), label, fill=255)
    canvas.save(out_png, format="PNG")


def _write_panels(
    manifest: Manifest,
    entries: list[ManifestEntry],
    rendered: dict[str, dict[str, SolarImage]],
    panel_dir: Path,
) -> None:
    panel_dir.mkdir(parents=True, exist_ok=True)
    for entry in entries:
        methods = rendered.get(entry.image_id)
        if not methods:
            continue
        cloudy = read_container(manifest.path(entry.cloudy))
        target = read_container(manifest.path(entry.clean))
        images = [cloudy] + list(methods.values()) + [target]
        labels = ["cloudy"] + list(methods.keys()) + ["target"]
        render_panel(images, labels, panel_dir / f"{entry.image_id}.png")
