"""heliosweep: synthesize, remove, and score cloud shadows on solar images."""

__version__ = "0.1.0"

from .imagecore import (
    INTENSITY_STEP,
    MaskKind,
    Modality,
    ShadowMask,
    SolarImage,
    disk_mask,
    export_png16,
    import_png16,
    quantize_intensity,
    read_container,
    write_container,
)
from .preprocess import DiskGeometry, detect_disk, normalize_disk, preprocess
from .cloudsim import (
    CloudField,
    CloudRecipe,
    DuplicateSpec,
    TextureKind,
    build_cloud_field,
    composite,
    make_base_texture,
    sample_recipe,
)
from .coverage import coverage_level, triage
from .classical import feng_transmittance, fuller_median
from .sparse import (
    PatchDictionary,
    SparseCleanParams,
    learn_dictionary,
    omp_encode,
    omp_encode_batch,
    remove_shadow_sparse,
)
from .maskops import (
    DIVISION_EPSILON,
    apply_division,
    apply_residual,
    apply_shadow_ratio,
    derive_gt_mask,
)
from .metrics import EvalRecord, evaluate_pair, psnr, rmse, ssim, summarize
from .dataset import Manifest, ManifestEntry, assign_splits, build_dataset, load_manifest, split_sizes
from .harness import EvalReport, render_panel, run_benchmark

__all__ = [name for name in dir() if not name.startswith("_")]
