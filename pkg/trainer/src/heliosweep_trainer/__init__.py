"""heliosweep-trainer: U-Net / C-GAN mask predictors for the shadow benchmark."""

__version__ = "0.1.0"

from .config import DivergedLoss, InvalidBlockCount, OutputHead, Setup, TrainConfig
from .unet import UNetGenerator, build_generator
from .patchgan import PATCHGAN_LAYERS, PatchDiscriminator, build_discriminator, receptive_field
from .training import (
    TrainResult,
    compose_cleaned,
    export_predictions,
    l1_loss,
    read_manifest_pairs,
    train,
)
from .ablation import run_depth_ablation
from .fid import TooFewSamples, fid, frechet_distance
from .solc import SolcFrame, read_solc, write_solc

__all__ = [name for name in dir() if not name.startswith("_")]
