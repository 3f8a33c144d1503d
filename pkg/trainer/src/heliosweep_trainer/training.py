"""Training loops and mask export.

Two setups: fully supervised L1 on the cleaned frame, and a pix2pix-style
conditional GAN whose discriminator judges the cleaned frame. Mask heads
convert to the cleaned frame (divide by mask + epsilon, or add the mask)
before the loss. Checkpoints are selected by best validation loss (FS) or
best generator training loss (C-GAN); C-GAN inference keeps dropout active
and batch statistics live.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .config import DivergedLoss, OutputHead, Setup, TrainConfig
from .patchgan import build_discriminator
from .solc import (
    KIND_IMAGE,
    KIND_RESIDUAL,
    KIND_TRANSMITTANCE,
    SolcFrame,
    read_solc,
    write_solc,
)
from .unet import build_generator


@dataclass(frozen=True)
class PairRecord:
    image_id: str
    split: str
    cloudy: Path
    clean: Path


def read_manifest_pairs(manifest_path) -> list[PairRecord]:
    """Parse the benchmark manifest (line-delimited JSON) into pair records."""
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    pairs = []
    for line in manifest_path.read_text().splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        pairs.append(
            PairRecord(
                image_id=raw["image_id"],
                split=raw["split"],
                cloudy=root / raw["cloudy"],
                clean=root / raw["clean"],
            )
        )
    return pairs


def _load_tensor_pairs(records: list[PairRecord]) -> tuple[torch.Tensor, torch.Tensor, list[SolcFrame]]:
    cloudy, clean, frames = [], [], []
    for rec in records:
        cframe = read_solc(rec.cloudy)
        tframe = read_solc(rec.clean)
        cloudy.append(torch.from_numpy(cframe.pixels).unsqueeze(0))
        clean.append(torch.from_numpy(tframe.pixels).unsqueeze(0))
        frames.append(cframe)
    return torch.stack(cloudy), torch.stack(clean), frames


def compose_cleaned(cloudy: torch.Tensor, prediction: torch.Tensor, cfg: TrainConfig) -> torch.Tensor:
    """Turn the network output into a cleaned frame, per the output head."""
    if cfg.output_head is OutputHead.DIRECT:
        return prediction
    if cfg.output_head is OutputHead.DIVISION_MASK:
        return cloudy / (prediction + cfg.division_epsilon)
    return cloudy + prediction


def l1_loss(target: torch.Tensor, cleaned: torch.Tensor) -> torch.Tensor:
    """Mean absolute pixel difference."""
    return torch.mean(torch.abs(target - cleaned))


def _guard_finite(value: torch.Tensor, what: str, epoch: int) -> None:
    if not torch.isfinite(value):
        raise DivergedLoss(f"{what} became {value.item()} at epoch {epoch}")


def _random_crops(cloudy, clean, size, rng):
    if size <= 0 or cloudy.shape[-1] <= size:
        return cloudy, clean
    h, w = cloudy.shape[-2:]
    out_c, out_t = [], []
    for i in range(cloudy.shape[0]):
        y = int(rng.integers(0, h - size + 1))
        x = int(rng.integers(0, w - size + 1))
        out_c.append(cloudy[i, :, y : y + size, x : x + size])
        out_t.append(clean[i, :, y : y + size, x : x + size])
    return torch.stack(out_c), torch.stack(out_t)


@dataclass
class TrainResult:
    generator: nn.Module
    best_epoch: int
    best_loss: float
    curve_path: Path
    config: TrainConfig


def train(cfg: TrainConfig, manifest_path, out_dir) -> TrainResult:
    """Train per the config and write checkpoint + loss curves under out_dir.

    Loss curves land in loss_curve.csv (epoch, train_loss, val_loss); the
    checkpoint is the epoch with the best selection loss.
    """
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    pairs = read_manifest_pairs(manifest_path)
    train_records = [p for p in pairs if p.split == "train"] or pairs
    val_records = [p for p in pairs if p.split == "val"] or train_records
    if cfg.max_pairs:
        train_records = train_records[: cfg.max_pairs]
        val_records = val_records[: cfg.max_pairs]

    cloudy_all, clean_all, _ = _load_tensor_pairs(train_records)
    val_cloudy, val_clean, _ = _load_tensor_pairs(val_records)

    generator = build_generator(cfg)
    discriminator = build_discriminator() if cfg.setup is Setup.CGAN else None
    if cfg.setup is Setup.CGAN:
        opt_g = torch.optim.Adam(generator.parameters(), lr=cfg.gan_lr, betas=(cfg.gan_beta1, 0.999))
        opt_d = torch.optim.Adam(discriminator.parameters(), lr=cfg.gan_lr, betas=(cfg.gan_beta1, 0.999))
        bce = nn.BCEWithLogitsLoss()
    else:
        opt_g = torch.optim.Adam(generator.parameters(), lr=cfg.fs_lr)
        opt_d = None
        bce = None

    n = cloudy_all.shape[0]
    best_loss = float("inf")
    best_epoch = -1
    best_state = None
    curve_rows = ["epoch,train_loss,val_loss"]

    for epoch in range(cfg.epochs):
        generator.train()
        if discriminator is not None:
            discriminator.train()
        order = rng.permutation(n)
        epoch_losses = []
        starts = list(range(0, n, cfg.batch_size))
        # a singleton batch breaks batchnorm at a 1x1 bottleneck; fold it
        # into the previous batch instead
        if len(starts) > 1 and n - starts[-1] == 1:
            starts.pop()
        for pos, start in enumerate(starts):
            stop = starts[pos + 1] if pos + 1 < len(starts) else n
            idx = order[start:stop]
            cloudy, clean = _random_crops(cloudy_all[idx], clean_all[idx], cfg.crop_size, rng)

            prediction = generator(cloudy)
            cleaned = compose_cleaned(cloudy, prediction, cfg)
            pixel_loss = l1_loss(clean, cleaned)

            if cfg.setup is Setup.CGAN:
                # discriminator step on (cloudy, clean) vs (cloudy, cleaned)
                opt_d.zero_grad()
                real_logits = discriminator(cloudy, clean)
                fake_logits = discriminator(cloudy, cleaned.detach())
                loss_d = 0.5 * (
                    bce(real_logits, torch.ones_like(real_logits))
                    + bce(fake_logits, torch.zeros_like(fake_logits))
                )
                _guard_finite(loss_d, "discriminator loss", epoch)
                loss_d.backward()
                opt_d.step()

                opt_g.zero_grad()
                adv_logits = discriminator(cloudy, cleaned)
                loss_g = bce(adv_logits, torch.ones_like(adv_logits)) + cfg.l1_weight * pixel_loss
            else:
                opt_g.zero_grad()
                loss_g = pixel_loss
            _guard_finite(loss_g, "generator loss", epoch)
            loss_g.backward()
            opt_g.step()
            epoch_losses.append(float(loss_g.detach()))

        train_loss = float(np.mean(epoch_losses))
        val_loss = _validation_loss(generator, val_cloudy, val_clean, cfg)
        curve_rows.append(f"{epoch},{train_loss!r},{val_loss!r}")

        # model selection: validation loss for FS, generator training loss for C-GAN
        selector = train_loss if cfg.setup is Setup.CGAN else val_loss
        if selector < best_loss:
            best_loss = selector
            best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in generator.state_dict().items()}

    if best_state is not None:
        generator.load_state_dict(best_state)
    curve_path = out / "loss_curve.csv"
    curve_path.write_text("\n".join(curve_rows) + "\n")
    torch.save(
        {"config": cfg.to_json(), "state_dict": generator.state_dict(), "best_epoch": best_epoch},
        out / "checkpoint.pt",
    )
    return TrainResult(generator, best_epoch, best_loss, curve_path, cfg)


def _validation_loss(generator, cloudy, clean, cfg: TrainConfig) -> float:
    generator.eval()
    losses = []
    with torch.no_grad():
        for start in range(0, cloudy.shape[0], cfg.batch_size):
            c = cloudy[start : start + cfg.batch_size]
            t = clean[start : start + cfg.batch_size]
            cleaned = compose_cleaned(c, generator(c), cfg)
            losses.append(float(l1_loss(t, cleaned)))
    generator.train()
    return float(np.mean(losses))


def export_predictions(
    result: TrainResult, manifest_path, export_dir, split: str = "test"
) -> Path:
    """Predict masks/frames for a split and write SOLC files the benchmark
    harness can consume: <export_dir>/run_seed<seed>/<image_id>.solc."""
    cfg = result.config
    run_dir = Path(export_dir) / f"run_seed{cfg.seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    records = [p for p in read_manifest_pairs(manifest_path) if p.split == split]

    generator = result.generator
    if cfg.setup is Setup.CGAN:
        # keep dropout live and use batch statistics at inference
        generator.train()
    else:
        generator.eval()

    for start in range(0, len(records), cfg.batch_size):
        chunk = records[start : start + cfg.batch_size]
        cloudy, _, frames = _load_tensor_pairs(chunk)
        if cfg.setup is Setup.CGAN and cloudy.shape[0] == 1:
            # batch-statistics mode needs >1 sample; duplicate and keep one
            cloudy = torch.cat([cloudy, cloudy], dim=0)
        with torch.no_grad():
            prediction = generator(cloudy)
        for rec, frame, pred in zip(chunk, frames, prediction):
            arr = pred[0].numpy().astype(np.float32)
            if cfg.output_head is OutputHead.RESIDUAL_MASK:
                out_frame = SolcFrame(np.maximum(arr, 0.0), KIND_RESIDUAL)
            elif cfg.output_head is OutputHead.DIVISION_MASK:
                out_frame = SolcFrame(np.clip(arr, 0.0, 1.0), KIND_TRANSMITTANCE)
            else:
                out_frame = SolcFrame(
                    np.clip(arr, 0.0, 1.0), KIND_IMAGE, frame.center, frame.radius, frame.modality
                )
            write_solc(out_frame, run_dir / f"{rec.image_id}.solc")
    return run_dir
