"""Training configuration."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum


class OutputHead(str, Enum):
    DIRECT = "direct"              # predict the cleaned frame, linear activation
    DIVISION_MASK = "division_mask"  # transmittance mask, 0.5*tanh + 0.5 activation
    RESIDUAL_MASK = "residual_mask"  # additive mask, linear activation


class Setup(str, Enum):
    FS = "fs"      # fully supervised L1
    CGAN = "cgan"  # pix2pix-style conditional GAN


class InvalidBlockCount(ValueError):
    """Generator depth outside the supported 4-6 range."""


class DivergedLoss(RuntimeError):
    """Training loss became non-finite."""


@dataclass
class TrainConfig:
    n_blocks: int = 6
    output_head: OutputHead = OutputHead.RESIDUAL_MASK
    setup: Setup = Setup.FS
    batch_size: int = 3
    epochs: int = 100
    seed: int = 0
    base_features: int = 32
    fs_lr: float = 1e-4
    gan_lr: float = 2e-4
    gan_beta1: float = 0.5
    l1_weight: float = 100.0  # adversarial-vs-L1 balance for the C-GAN
    division_epsilon: float = 1e-5
    crop_size: int = 0  # 0 = train on full frames
    max_pairs: int = 0  # 0 = use every training pair

    def __post_init__(self):
        self.output_head = OutputHead(self.output_head)
        self.setup = Setup(self.setup)
        if self.n_blocks not in (4, 5, 6):
            raise InvalidBlockCount(f"n_blocks must be 4, 5, or 6, got {self.n_blocks}")

    def to_json(self) -> str:
        payload = asdict(self)
        payload["output_head"] = self.output_head.value
        payload["setup"] = self.setup.value
        return json.dumps(payload, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "TrainConfig":
        return TrainConfig(**json.loads(text))

    @staticmethod
    def load(path) -> "TrainConfig":
        with open(path) as fh:
            return TrainConfig.from_json(fh.read())
