"""Patch-based training loop for specialist denoisers.

Each optimizer step samples aligned clean/distorted patch pairs from the
manifest's train split, applies the same random crop and dihedral
augmentation to both sides, and regresses the clean sub-images under an
MSE loss. Learning follows three phases: the initial rate, a reduced rate
once validation loss plateaus, and a final fine-tune at a tiny rate after
batch normalization is folded away. The best-validation-PSNR snapshot is
returned, never anything worse than the initialized model.

Random streams are derived per (epoch, batch index), so a fixed config and
manifest reproduce the run exactly.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, nn
from .degrade import DistortionType, PairManifest, PairManifestRecord, derive_seed
from .denoiser import (
    DenoiserModel,
    _level_plane,
    build_denoiser,
    clone_model,
    fold_batchnorm,
    forward,
    net_backward,
    net_forward,
    parameters,
    space_to_depth_batch,
)
from .errors import DivergenceError, EmptyTrainSetError, NonFiniteError
from .image import Image, augment, crop_patch, load_image

PHASE_INITIAL = "initial"
PHASE_REDUCED = "reduced"
PHASE_FINETUNE = "finetune"

# Consecutive exploded/non-finite epochs tolerated before giving up.
_DIVERGENCE_PATIENCE = 3
_EXPLOSION_FACTOR = 10.0


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    patch_size: int = 128
    batch_size: int = 128
    lr_initial: float = 1e-3
    lr_reduced: float = 1e-4
    lr_finetune: float = 1e-6
    plateau_epochs: int = 5
    plateau_min_improvement: float = 1e-3
    finetune_epochs: int = 50
    patches_per_epoch: int | None = None
    epochs_max: int = 100
    seed: int = 0
    val_fraction: float = 0.1
    log_every: int = 1

    def __post_init__(self):
        if self.patch_size < 2 or self.patch_size % 2:
            raise ValueError(f"patch_size must be even and >= 2, got {self.patch_size}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr_initial > self.lr_reduced > self.lr_finetune > 0:
            raise ValueError("learning rates must strictly decrease across phases")
        if self.plateau_epochs < 1:
            raise ValueError("plateau_epochs must be >= 1")
        if self.epochs_max < 0:
            raise ValueError("epochs_max must be >= 0")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")


@dataclass
class Batch:
    """Aligned patch pairs plus the provenance needed to audit them."""

    noisy: np.ndarray  # (N, C, P, P)
    clean: np.ndarray  # (N, C, P, P)
    levels: np.ndarray  # (N,) in [0, 1]
    record_indices: list[int]
    tops: list[int]
    lefts: list[int]
    modes: list[int]


@dataclass
class EpochRecord:
    epoch: int
    phase: str
    lr: float
    train_loss: float
    val_loss: float
    val_psnr: float


@dataclass
class TrainReport:
    epochs: list[EpochRecord] = field(default_factory=list)
    wall_clock: float = 0.0
    best_epoch: int = 0
    best_val_psnr: float = float("-inf")
    best_checkpoint: Path | None = None


def write_report_csv(report: TrainReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "phase", "lr", "train_loss", "val_loss", "val_psnr"])
        for rec in report.epochs:
            writer.writerow(
                [
                    rec.epoch,
                    rec.phase,
                    f"{rec.lr:.8g}",
                    f"{rec.train_loss:.8g}",
                    f"{rec.val_loss:.8g}",
                    f"{rec.val_psnr:.6f}",
                ]
            )


def _filtered(manifest: PairManifest, split: str, dtype: DistortionType | None):
    return manifest.select(split=split, dtype=dtype)


def sample_batch(
    manifest: PairManifest,
    dtype: DistortionType | None,
    cfg: TrainConfig,
    rng: np.random.Generator,
    records: list[PairManifestRecord] | None = None,
    loader=load_image,
) -> Batch:
    """Draw one batch of aligned patch pairs from the train split.

    The same crop window and augmentation mode are applied to the clean
    and distorted image of each pair, and the pair's severity level rides
    along for the network's extra input channel.
    """
    if records is None:
        records = _filtered(manifest, "train", dtype)
    if not records:
        name = dtype.name.lower() if dtype is not None else "any type"
        raise EmptyTrainSetError(f"no train-split pairs for {name}")
    p = cfg.patch_size
    noisy, clean, levels = [], [], []
    idxs, tops, lefts, modes = [], [], [], []
    for _ in range(cfg.batch_size):
        ri = int(rng.integers(len(records)))
        rec = records[ri]
        dirty = loader(manifest.distorted_path(rec))
        pure = loader(manifest.clean_path(rec))
        if dirty.shape != pure.shape:
            raise EmptyTrainSetError(
                f"pair shape mismatch for {rec.distorted}: {dirty.shape} vs {pure.shape}"
            )
        if dirty.height < p or dirty.width < p:
            raise EmptyTrainSetError(
                f"image {rec.distorted} is smaller than the {p}px patch size"
            )
        top = int(rng.integers(dirty.height - p + 1))
        left = int(rng.integers(dirty.width - p + 1))
        mode = int(rng.integers(8))
        noisy.append(augment(crop_patch(dirty, top, left, p), mode).data.transpose(2, 0, 1))
        clean.append(augment(crop_patch(pure, top, left, p), mode).data.transpose(2, 0, 1))
        levels.append(rec.spec.normalized_level)
        idxs.append(ri)
        tops.append(top)
        lefts.append(left)
        modes.append(mode)
    return Batch(
        noisy=np.stack(noisy),
        clean=np.stack(clean),
        levels=np.asarray(levels, dtype=np.float32),
        record_indices=idxs,
        tops=tops,
        lefts=lefts,
        modes=modes,
    )


class _CachedLoader:
    """Keeps decoded images around; datasets here are desk-scale."""

    def __init__(self):
        self._cache: dict[Path, Image] = {}

    def __call__(self, path: Path) -> Image:
        path = Path(path)
        img = self._cache.get(path)
        if img is None:
            img = load_image(path)
            self._cache[path] = img
        return img


def _validate_model_loss(
    model: DenoiserModel, manifest: PairManifest, records, loader
) -> tuple[float, float]:
    """Mean sub-image-space loss and pixel-space PSNR over the val pairs.

    A model whose parameters have gone non-finite scores ``(nan, -inf)``
    instead of raising, so the divergence guard can deal with it.
    """
    try:
        return _validate_raw(model, manifest, records, loader)
    except NonFiniteError:
        return float("nan"), float("-inf")


def _validate_raw(model, manifest, records, loader) -> tuple[float, float]:
    losses, psnrs = [], []
    for rec in records:
        dirty = loader(manifest.distorted_path(rec))
        pure = loader(manifest.clean_path(rec))
        x = _level_plane(
            space_to_depth_batch(dirty.data.transpose(2, 0, 1)[None]),
            np.asarray([rec.spec.normalized_level], dtype=np.float32),
        )
        target = space_to_depth_batch(pure.data.transpose(2, 0, 1)[None])
        pred = net_forward(model, x, mode="eval")
        loss, _ = nn.mse_loss(pred, target)
        losses.append(loss)
        restored = forward(model, dirty, rec.spec.normalized_level)
        psnrs.append(metrics.psnr(pure, restored))
    return float(np.mean(losses)), float(np.mean(psnrs))


def train(
    manifest: PairManifest,
    dtype: DistortionType | None,
    cfg: TrainConfig,
    num_layers: int = 17,
    hidden_channels: int = 64,
    kernel: int = 3,
    model: DenoiserModel | None = None,
) -> tuple[DenoiserModel, TrainReport]:
    """Train a specialist for ``dtype`` (or a wildcard model when ``None``).

    Raises :class:`EmptyTrainSetError` when the manifest has no usable
    train pairs and :class:`DivergenceError` when the loss goes non-finite
    or explodes past 10x its initial value for several epochs running.
    """
    started = time.monotonic()
    train_recs = _filtered(manifest, "train", dtype)
    if not train_recs:
        name = dtype.name.lower() if dtype is not None else "any type"
        raise EmptyTrainSetError(f"no train-split pairs for {name}")
    val_recs = _filtered(manifest, "val", dtype)
    if not val_recs:
        # No val split in the manifest: carve a deterministic slice off the
        # train records instead.
        n_val = max(1, int(math.floor(len(train_recs) * cfg.val_fraction)))
        if n_val >= len(train_recs):
            raise EmptyTrainSetError("too few pairs to form train and val sets")
        val_recs = train_recs[-n_val:]
        train_recs = train_recs[:-n_val]

    loader = _CachedLoader()
    first_clean = loader(manifest.clean_path(train_recs[0]))
    if model is None:
        model = build_denoiser(
            dtype,
            image_channels=first_clean.channels,
            num_layers=num_layers,
            hidden_channels=hidden_channels,
            kernel=kernel,
            seed=cfg.seed,
        )
    if cfg.patch_size < 2 * model.kernel:
        raise ValueError(
            f"patch_size {cfg.patch_size} too small for kernel {model.kernel}"
        )

    report = TrainReport()
    val_loss, val_psnr = _validate_model_loss(model, manifest, val_recs, loader)
    best_model = clone_model(model)
    best_psnr = val_psnr
    report.best_val_psnr = val_psnr
    if cfg.epochs_max == 0:
        report.wall_clock = time.monotonic() - started
        return best_model, report

    patches_per_epoch = cfg.patches_per_epoch or 4 * len(train_recs)
    steps_per_epoch = max(1, math.ceil(patches_per_epoch / cfg.batch_size))

    params = parameters(model)
    state = nn.adam_init(params, lr=cfg.lr_initial)
    phase = PHASE_INITIAL
    best_phase_loss = val_loss
    plateau_count = 0
    finetune_left = 0
    reference_loss: float | None = None
    bad_epochs = 0

    for epoch in range(1, cfg.epochs_max + 1):
        epoch_losses = []
        exploded = False
        for step_ix in range(steps_per_epoch):
            rng = np.random.default_rng(derive_seed(cfg.seed, epoch, step_ix))
            batch = sample_batch(manifest, dtype, cfg, rng, records=train_recs, loader=loader)
            x = _level_plane(space_to_depth_batch(batch.noisy), batch.levels)
            target = space_to_depth_batch(batch.clean)
            try:
                pred, cache = net_forward(model, x, mode="train", want_cache=True)
                loss, grad = nn.mse_loss(pred, target)
                grads = net_backward(model, cache, grad)
                nn.adam_step(params, grads, state)
            except NonFiniteError:
                exploded = True
                break
            epoch_losses.append(loss)

        train_loss = float(np.mean(epoch_losses)) if epoch_losses else float("nan")
        if reference_loss is None and math.isfinite(train_loss):
            reference_loss = train_loss

        if exploded or not math.isfinite(train_loss) or (
            reference_loss is not None and train_loss > _EXPLOSION_FACTOR * reference_loss
        ):
            bad_epochs += 1
            if bad_epochs >= _DIVERGENCE_PATIENCE:
                raise DivergenceError(
                    f"training loss diverged for {bad_epochs} consecutive epochs"
                )
        else:
            bad_epochs = 0

        if exploded or not math.isfinite(train_loss):
            report.epochs.append(
                EpochRecord(epoch, phase, state.lr, float("nan"), float("nan"), float("-inf"))
            )
            continue

        val_loss, val_psnr = _validate_model_loss(model, manifest, val_recs, loader)
        report.epochs.append(
            EpochRecord(epoch, phase, state.lr, train_loss, val_loss, val_psnr)
        )

        if math.isfinite(val_psnr) and val_psnr > best_psnr:
            best_psnr = val_psnr
            best_model = clone_model(model)
            report.best_epoch = epoch
            report.best_val_psnr = val_psnr

        # Plateau bookkeeping drives the phase schedule.
        if val_loss < best_phase_loss * (1.0 - cfg.plateau_min_improvement):
            best_phase_loss = val_loss
            plateau_count = 0
        else:
            plateau_count += 1

        if phase == PHASE_FINETUNE:
            finetune_left -= 1
            if finetune_left <= 0:
                break
        elif plateau_count >= cfg.plateau_epochs:
            plateau_count = 0
            best_phase_loss = val_loss
            if phase == PHASE_INITIAL:
                phase = PHASE_REDUCED
                state.lr = cfg.lr_reduced
            else:
                phase = PHASE_FINETUNE
                model = fold_batchnorm(model)
                params = parameters(model)
                state = nn.adam_init(params, lr=cfg.lr_finetune)
                finetune_left = cfg.finetune_epochs

    report.wall_clock = time.monotonic() - started
    return best_model, report
