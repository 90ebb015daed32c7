"""Image quality metrics (MSE, PSNR, SSIM) and report table generation.

PSNR of identical images is the ``inf`` sentinel, written literally as
``inf`` in CSV output. SSIM is the Gaussian-weighted 11x11 sliding-window
form (sigma 1.5, constants ``(0.01 L)^2`` and ``(0.03 L)^2``); color
images score as the mean over channels. Report datasets feed the three
standard plots: a 1-dB-binned PSNR histogram, a per-image line series, and
a PSNR-versus-SSIM scatter.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .degrade import PairManifest
from .errors import (
    EmptyScoresError,
    ImageTooSmallError,
    MissingRestoredFileError,
    ShapeMismatchError,
)
from .image import Image, load_image

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def mse(gt: Image, d: Image) -> float:
    """Mean squared difference over all H*W*C samples."""
    if gt.shape != d.shape:
        raise ShapeMismatchError(f"image shapes differ: {gt.shape} vs {d.shape}")
    diff = gt.data.astype(np.float64) - d.data.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(gt: Image, d: Image, max_value: float = 1.0) -> float:
    """10*log10(max^2 / MSE) in dB; ``inf`` when the images are identical.

    ``max_value`` sets the scoring domain: samples are rescaled from
    [0, 1] to [0, max_value] and the MSE taken there, so a consistent
    choice (1.0 or 255) yields the same decibels.
    """
    if max_value <= 0:
        raise ValueError(f"max_value must be positive, got {max_value}")
    err = mse(gt, d) * max_value * max_value
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10((max_value * max_value) / err)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    t = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


_WINDOW = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)


def _local_mean(a: np.ndarray) -> np.ndarray:
    """Gaussian-weighted local mean over valid window positions."""
    views = np.lib.stride_tricks.sliding_window_view(a, (SSIM_WINDOW, SSIM_WINDOW))
    return np.einsum("hwij,ij->hw", views, _WINDOW)


def ssim(gt: Image, d: Image, max_value: float = 1.0) -> float:
    """Structural similarity in [-1, 1]; 1 means identical."""
    if gt.shape != d.shape:
        raise ShapeMismatchError(f"image shapes differ: {gt.shape} vs {d.shape}")
    if min(gt.height, gt.width) < SSIM_WINDOW:
        raise ImageTooSmallError(
            f"ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {gt.height}x{gt.width}"
        )
    c1 = (0.01 * max_value) ** 2
    c2 = (0.03 * max_value) ** 2
    scores = []
    for ch in range(gt.channels):
        x = gt.data[:, :, ch].astype(np.float64) * max_value
        y = d.data[:, :, ch].astype(np.float64) * max_value
        mu_x = _local_mean(x)
        mu_y = _local_mean(y)
        var_x = _local_mean(x * x) - mu_x * mu_x
        var_y = _local_mean(y * y) - mu_y * mu_y
        cov = _local_mean(x * y) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
        den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


@dataclass(frozen=True)
class QualityScore:
    image_id: str
    psnr_db: float
    ssim: float
    mse: float


def evaluate_manifest(
    manifest: PairManifest,
    restored_dir: str | Path,
    max_value: float = 1.0,
    threads: int = 1,
) -> list[QualityScore]:
    """Score every test-split record against its restored counterpart.

    The restored file must carry the distorted file's name inside
    ``restored_dir``. Results keep manifest order.
    """
    restored_dir = Path(restored_dir)
    records = manifest.select(split="test")
    jobs = []
    for rec in records:
        restored = restored_dir / Path(rec.distorted).name
        if not restored.exists():
            raise MissingRestoredFileError(
                f"no restored file for record {rec.distorted!r}: expected {restored}"
            )
        jobs.append((rec, restored))

    def score(job) -> QualityScore:
        rec, restored_path = job
        gt = load_image(manifest.clean_path(rec))
        restored = load_image(restored_path)
        return QualityScore(
            image_id=Path(rec.distorted).stem,
            psnr_db=psnr(gt, restored, max_value),
            ssim=ssim(gt, restored, max_value),
            mse=mse(gt, restored),
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(score, jobs))
    return [score(job) for job in jobs]


def write_scores_csv(scores: list[QualityScore], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "psnr_db", "ssim", "mse"])
        for s in scores:
            writer.writerow([s.image_id, _fmt(s.psnr_db), f"{s.ssim:.6f}", f"{s.mse:.8g}"])


def load_scores_csv(path: str | Path) -> list[QualityScore]:
    scores = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            scores.append(
                QualityScore(
                    image_id=row["image_id"],
                    psnr_db=float(row["psnr_db"]),
                    ssim=float(row["ssim"]),
                    mse=float(row.get("mse") or "nan"),
                )
            )
    return scores


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.6f}"


@dataclass
class ReportData:
    """The three plot datasets plus the count of excluded infinite scores."""

    histogram: list[tuple[float, float, int]]  # (bin_low, bin_high, count)
    line: list[tuple[int, str, float]]  # (index, image_id, psnr_db)
    scatter: list[tuple[float, float]]  # (psnr_db, ssim)
    infinite_count: int


def report_datasets(scores: list[QualityScore]) -> ReportData:
    """Histogram / line / scatter tables from a score list.

    Histogram bins are 1 dB wide, aligned to integer dB boundaries, and
    span the finite data range. Infinite PSNR sentinels are excluded from
    the histogram and scatter but counted separately; the line series keeps
    every score in input order.
    """
    if not scores:
        raise EmptyScoresError("no scores to report on")
    finite = [s for s in scores if math.isfinite(s.psnr_db)]
    infinite_count = len(scores) - len(finite)

    histogram: list[tuple[float, float, int]] = []
    if finite:
        values = np.asarray([s.psnr_db for s in finite])
        lo = math.floor(values.min())
        hi = math.floor(values.max()) + 1
        counts = np.zeros(hi - lo, dtype=int)
        for v in values:
            counts[min(int(math.floor(v)) - lo, hi - lo - 1)] += 1
        histogram = [(float(lo + i), float(lo + i + 1), int(c)) for i, c in enumerate(counts)]

    line = [(i, s.image_id, s.psnr_db) for i, s in enumerate(scores)]
    scatter = [(s.psnr_db, s.ssim) for s in finite]
    return ReportData(histogram=histogram, line=line, scatter=scatter, infinite_count=infinite_count)


def write_report_csvs(data: ReportData, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    path = out_dir / "histogram.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "count"])
        for low, high, count in data.histogram:
            writer.writerow([f"{low:.1f}", f"{high:.1f}", count])
    paths.append(path)

    path = out_dir / "line.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "image_id", "psnr_db"])
        for index, image_id, value in data.line:
            writer.writerow([index, image_id, _fmt(value)])
    paths.append(path)

    path = out_dir / "scatter.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["psnr_db", "ssim"])
        for p, s in data.scatter:
            writer.writerow([_fmt(p), f"{s:.6f}"])
    paths.append(path)
    return paths


# --- SVG rendering -------------------------------------------------------------
# Hand-rolled so output is byte-deterministic for fixed input.

_SVG_W, _SVG_H, _MARGIN = 640, 400, 50


def _svg_open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2:.0f}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{_MARGIN}" y1="{_SVG_H - _MARGIN}" x2="{_SVG_W - _MARGIN}" '
        f'y2="{_SVG_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_SVG_H - _MARGIN}" stroke="black"/>',
    ]


def _scale(v, lo, hi, out_lo, out_hi):
    if hi == lo:
        return (out_lo + out_hi) / 2.0
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)


def render_report_svgs(data: ReportData, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    lines = _svg_open("PSNR histogram")
    if data.histogram:
        max_count = max(c for _, _, c in data.histogram) or 1
        lo = data.histogram[0][0]
        hi = data.histogram[-1][1]
        for low, high, count in data.histogram:
            x0 = _scale(low, lo, hi, _MARGIN, _SVG_W - _MARGIN)
            x1 = _scale(high, lo, hi, _MARGIN, _SVG_W - _MARGIN)
            top = _scale(count, 0, max_count, _SVG_H - _MARGIN, _MARGIN)
            lines.append(
                f'<rect x="{x0:.2f}" y="{top:.2f}" width="{x1 - x0:.2f}" '
                f'height="{_SVG_H - _MARGIN - top:.2f}" fill="steelblue" stroke="black"/>'
            )
    lines.append("</svg>")
    path = out_dir / "histogram.svg"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths.append(path)

    lines = _svg_open("PSNR per test image")
    finite_line = [(i, v) for i, _, v in data.line if math.isfinite(v)]
    if finite_line:
        xs = [i for i, _ in finite_line]
        vs = [v for _, v in finite_line]
        pts = " ".join(
            f"{_scale(i, min(xs), max(xs), _MARGIN, _SVG_W - _MARGIN):.2f},"
            f"{_scale(v, min(vs), max(vs), _SVG_H - _MARGIN, _MARGIN):.2f}"
            for i, v in finite_line
        )
        lines.append(f'<polyline points="{pts}" fill="none" stroke="firebrick"/>')
    lines.append("</svg>")
    path = out_dir / "line.svg"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths.append(path)

    lines = _svg_open("PSNR vs SSIM")
    if data.scatter:
        ps = [p for p, _ in data.scatter]
        ss = [s for _, s in data.scatter]
        for p, s in data.scatter:
            cx = _scale(p, min(ps), max(ps), _MARGIN, _SVG_W - _MARGIN)
            cy = _scale(s, min(ss), max(ss), _SVG_H - _MARGIN, _MARGIN)
            lines.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="seagreen"/>')
    lines.append("</svg>")
    path = out_dir / "scatter.svg"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    paths.append(path)
    return paths
