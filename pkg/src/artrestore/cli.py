"""Command-line interface: synth, train, restore, eval, report.

Every command is deterministic under --seed. Errors print one diagnostic
line on stderr and exit with a class-specific code:

    2  usage / bad flags          6  training diverged
    3  file I/O or parse failure  7  no specialist for a type
    4  no loadable input images   8  missing restored file
    5  empty train set            9  empty score list
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import metrics
from .degrade import (
    MANIFEST_NAME,
    DistortionSpec,
    DistortionType,
    load_manifest,
    synthesize_dataset,
)
from .dispatch import DenoiserRegistry
from .errors import (
    ArtRestoreError,
    DivergenceError,
    EmptyInputError,
    EmptyScoresError,
    EmptyTrainSetError,
    ManifestParseError,
    MissingRestoredFileError,
    NoSpecialistError,
)
from .image import load_image, save_image
from .denoiser import save_model
from .training import TrainConfig, train, write_report_csv

THREADS_ENV = "DDCNN_THREADS"

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_EMPTY_INPUT = 4
EXIT_EMPTY_TRAIN = 5
EXIT_DIVERGENCE = 6
EXIT_NO_SPECIALIST = 7
EXIT_MISSING_RESTORED = 8
EXIT_EMPTY_SCORES = 9

# Scaled-down profile: small network and patches so a full run fits on a
# laptop CPU in minutes.
DESK_PROFILE = {"channels": 16, "layers": 6, "patch": 32, "batch": 16}

_TYPE_NAMES = [t.name.lower() for t in DistortionType]


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _seed_arg(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _type_list(text: str) -> list[DistortionType]:
    out = []
    for name in text.split(","):
        name = name.strip()
        if name not in _TYPE_NAMES:
            raise argparse.ArgumentTypeError(
                f"unknown distortion type {name!r}; valid: {', '.join(_TYPE_NAMES)}"
            )
        out.append(DistortionType.from_name(name))
    return out


def _level_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        value = int(part)
        if not 1 <= value <= 5:
            raise argparse.ArgumentTypeError(f"levels must be in 1..5, got {part}")
        out.append(value)
    return out


def _split_arg(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3 or any(p < 0 for p in parts) or abs(sum(parts) - 1.0) > 1e-9:
        raise argparse.ArgumentTypeError(
            "split must be three non-negative fractions summing to 1, e.g. 0.8,0.1,0.1"
        )
    return parts[0], parts[1], parts[2]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artrestore",
        description="Synthesize deteriorated art datasets, train specialist "
        "denoisers, restore images, and report PSNR/SSIM quality.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a distorted dataset with a manifest")
    p.add_argument("--input-dir", required=True, help="directory of clean images")
    p.add_argument("--output-dir", required=True, help="dataset destination")
    p.add_argument("--per-image", type=_positive_int, default=50,
                   help="distorted variants per clean image (default 50)")
    p.add_argument("--seed", type=_seed_arg, default=0, help="dataset seed (default 0)")
    p.add_argument("--types", type=_type_list, default=None,
                   help="comma-separated distortion types (default: all 12)")
    p.add_argument("--levels", type=_level_list, default=None,
                   help="comma-separated severity levels 1..5 (default: all)")
    p.add_argument("--split", type=_split_arg, default=(0.8, 0.1, 0.1),
                   help="train,val,test fractions (default 0.8,0.1,0.1)")
    p.add_argument("--canonical-size", type=_positive_int, default=None,
                   help="center-crop square and resize inputs to this side length")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker threads (default: {THREADS_ENV} or machine parallelism)")

    p = sub.add_parser("train", help="train one specialist denoiser")
    p.add_argument("--manifest", required=True, help="path to manifest.jsonl")
    p.add_argument("--dtype", required=True, choices=_TYPE_NAMES + ["all"],
                   help="distortion specialization ('all' trains across every type)")
    p.add_argument("--out", required=True, help="checkpoint destination (.ddc)")
    p.add_argument("--patch", type=_positive_int, default=None, help="patch size (default 128)")
    p.add_argument("--batch", type=_positive_int, default=None, help="mini-batch size (default 128)")
    p.add_argument("--lr", type=float, default=1e-3,
                   help="initial learning rate; later phases use lr/10 and lr/1000")
    p.add_argument("--epochs-max", type=int, default=None, help="epoch budget (default 100)")
    p.add_argument("--channels", type=_positive_int, default=None,
                   help="hidden feature maps (default 64)")
    p.add_argument("--layers", type=_positive_int, default=None,
                   help="convolution layers (default 17)")
    p.add_argument("--kernel", type=_positive_int, default=3, help="kernel size (default 3)")
    p.add_argument("--seed", type=_seed_arg, default=0, help="training seed (default 0)")
    p.add_argument("--patches-per-epoch", type=_positive_int, default=None,
                   help="patches sampled per epoch (default: 4x train pairs)")
    p.add_argument("--desk", action="store_true",
                   help="desk-scale profile: 16 channels, 6 layers, patch 32, batch 16")

    p = sub.add_parser("restore", help="restore distorted images via the registry")
    p.add_argument("--registry", required=True, help="registry.json mapping types to checkpoints")
    p.add_argument("--output", required=True, help="directory for restored PNGs")
    p.add_argument("--manifest", default=None,
                   help="restore the manifest's test split using per-record specs")
    p.add_argument("--input", default=None, help="image file or directory (single-spec mode)")
    p.add_argument("--dtype", choices=_TYPE_NAMES, default=None,
                   help="distortion type of the input (single-spec mode)")
    p.add_argument("--level", type=int, choices=[1, 2, 3, 4, 5], default=None,
                   help="severity level of the input (single-spec mode)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker threads (default: {THREADS_ENV} or machine parallelism)")

    p = sub.add_parser("eval", help="score restored images against manifest ground truth")
    p.add_argument("--manifest", required=True, help="path to manifest.jsonl")
    p.add_argument("--restored-dir", required=True, help="directory of restored PNGs")
    p.add_argument("--out", required=True, help="scores CSV destination")
    p.add_argument("--max", type=float, default=1.0,
                   help="peak signal value: 1.0 for unit domain, 255 for 8-bit (default 1.0)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker threads (default: {THREADS_ENV} or machine parallelism)")

    p = sub.add_parser("report", help="emit histogram/line/scatter tables from scores")
    p.add_argument("--scores", required=True, help="scores CSV from the eval command")
    p.add_argument("--out-dir", required=True, help="directory for report CSVs")
    p.add_argument("--svg", action="store_true", help="also render deterministic SVG plots")
    return parser


def _resolve_threads(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        value = int(env)  # intentionally strict: a bad env var is a config error
        if value < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env}")
        return value
    return os.cpu_count() or 1


def _cmd_synth(args) -> int:
    threads = _resolve_threads(args.threads)
    manifest = synthesize_dataset(
        args.input_dir,
        args.output_dir,
        per_image=args.per_image,
        seed=args.seed,
        split_fractions=args.split,
        types=args.types,
        levels=args.levels,
        canonical_size=args.canonical_size,
        threads=threads,
    )
    print(f"{len(manifest.records)} pairs written to {Path(args.output_dir) / MANIFEST_NAME}")
    return 0


def _cmd_train(args) -> int:
    manifest = load_manifest(args.manifest)
    dtype = None if args.dtype == "all" else DistortionType.from_name(args.dtype)
    base = DESK_PROFILE if args.desk else {"channels": 64, "layers": 17, "patch": 128, "batch": 128}
    channels = args.channels if args.channels is not None else base["channels"]
    layers = args.layers if args.layers is not None else base["layers"]
    patch = args.patch if args.patch is not None else base["patch"]
    batch = args.batch if args.batch is not None else base["batch"]
    cfg = TrainConfig(
        patch_size=patch,
        batch_size=batch,
        lr_initial=args.lr,
        lr_reduced=args.lr / 10.0,
        lr_finetune=args.lr / 1000.0,
        patches_per_epoch=args.patches_per_epoch,
        epochs_max=args.epochs_max if args.epochs_max is not None else 100,
        seed=args.seed,
    )
    model, report = train(
        manifest, dtype, cfg, num_layers=layers, hidden_channels=channels, kernel=args.kernel
    )
    out = Path(args.out)
    if out.parent != Path("") and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    report.best_checkpoint = out
    csv_path = out.with_name(out.stem + "_train.csv")
    write_report_csv(report, csv_path)
    shown = report.best_val_psnr
    print(
        f"checkpoint {out} written after {len(report.epochs)} epochs; "
        f"best val PSNR {shown:.2f} dB ({csv_path})"
    )
    return 0


def _cmd_restore(args) -> int:
    registry = DenoiserRegistry.load(args.registry)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs: list[tuple[Path, DistortionSpec]] = []
    if args.manifest is not None:
        manifest = load_manifest(args.manifest)
        for rec in manifest.select(split="test"):
            jobs.append((manifest.distorted_path(rec), rec.spec))
    else:
        if args.input is None or args.dtype is None or args.level is None:
            raise UsageError("either --manifest or all of --input/--dtype/--level are required")
        spec = DistortionSpec(DistortionType.from_name(args.dtype), args.level, seed=0)
        input_path = Path(args.input)
        if input_path.is_dir():
            files = sorted(p for p in input_path.iterdir() if p.suffix.lower() == ".png")
        else:
            files = [input_path]
        jobs = [(p, spec) for p in files]

    for src, spec in jobs:
        restored = registry.restore(load_image(src), spec)
        save_image(restored, out_dir / src.name)
    print(f"{len(jobs)} images restored to {out_dir}")
    return 0


def _cmd_eval(args) -> int:
    threads = _resolve_threads(args.threads)
    manifest = load_manifest(args.manifest)
    scores = metrics.evaluate_manifest(
        manifest, args.restored_dir, max_value=args.max, threads=threads
    )
    metrics.write_scores_csv(scores, args.out)
    if scores:
        mean_psnr = sum(s.psnr_db for s in scores) / len(scores)
        mean_ssim = sum(s.ssim for s in scores) / len(scores)
        print(
            f"{len(scores)} pairs scored: mean PSNR {mean_psnr:.2f} dB, "
            f"mean SSIM {mean_ssim:.4f} ({args.out})"
        )
    else:
        print(f"no test-split records to score ({args.out})")
    return 0


def _cmd_report(args) -> int:
    scores = metrics.load_scores_csv(args.scores)
    data = metrics.report_datasets(scores)
    out_dir = Path(args.out_dir)
    paths = metrics.write_report_csvs(data, out_dir)
    if args.svg:
        paths += metrics.render_report_svgs(data, out_dir)
    print(f"{len(paths)} report files written to {out_dir}")
    return 0


class UsageError(ValueError):
    pass


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "restore": _cmd_restore,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_INPUT
    except EmptyTrainSetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_TRAIN
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except NoSpecialistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SPECIALIST
    except MissingRestoredFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_RESTORED
    except EmptyScoresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_SCORES
    except ManifestParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, ArtRestoreError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
