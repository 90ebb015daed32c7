"""Art-image restoration toolkit: degrade, train specialists, restore, score."""

from .degrade import (
    DistortionSpec,
    DistortionType,
    PairManifest,
    PairManifestRecord,
    apply_distortion,
    load_manifest,
    random_texture,
    synthesize_dataset,
)
from .denoiser import (
    DenoiserModel,
    assemble_input,
    build_denoiser,
    depth_to_space,
    fold_batchnorm,
    forward,
    load_model,
    save_model,
    space_to_depth,
)
from .dispatch import DenoiserRegistry
from .image import Image, augment, crop_patch, load_image, resize, save_image
from .metrics import (
    QualityScore,
    evaluate_manifest,
    mse,
    psnr,
    report_datasets,
    ssim,
)
from .training import TrainConfig, TrainReport, sample_batch, train

__version__ = "0.1.0"

__all__ = [
    "DistortionSpec",
    "DistortionType",
    "PairManifest",
    "PairManifestRecord",
    "apply_distortion",
    "load_manifest",
    "random_texture",
    "synthesize_dataset",
    "DenoiserModel",
    "assemble_input",
    "build_denoiser",
    "depth_to_space",
    "fold_batchnorm",
    "forward",
    "load_model",
    "save_model",
    "space_to_depth",
    "DenoiserRegistry",
    "Image",
    "augment",
    "crop_patch",
    "load_image",
    "resize",
    "save_image",
    "QualityScore",
    "evaluate_manifest",
    "mse",
    "psnr",
    "report_datasets",
    "ssim",
    "TrainConfig",
    "TrainReport",
    "sample_batch",
    "train",
    "__version__",
]
