"""Synthetic deterioration operators and paired-dataset synthesis.

Twelve operator families model how art images decay: additive and
multiplicative noise, two blur kinds, global fades and overlays, geometric
swirls, drawn scratches, water staining, pixelation, darkening, and torn
bands. Every operator is a pure function of ``(image, spec)``: the spec's
seed fully determines the output, and each operator's neutral parameter
(zero noise, unit block, and so on) reproduces the input bit-exactly.

A dataset synthesis pass walks a directory of clean images, emits the
requested number of distorted variants per image, and records everything in
a line-delimited JSON manifest with train/val/test splits assigned per
clean image so no source leaks across splits.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import EmptyInputError, InvalidSpecError, ManifestParseError
from .image import SAMPLE_DTYPE, Image, center_crop_square, load_image, resize, save_image

_U64 = (1 << 64) - 1


class DistortionType(IntEnum):
    """The 12 deterioration families, with stable ids used on disk."""

    GAUSSIAN_NOISE = 0
    SPECKLE_NOISE = 1
    GAUSSIAN_BLUR = 2
    MOTION_BLUR = 3
    FADE = 4
    WHITE_OVERLAY = 5
    SWIRL = 6
    SCRATCH = 7
    WATER_DISCOLOUR = 8
    PIXELATE = 9
    DARKEN = 10
    TEAR = 11

    @classmethod
    def from_name(cls, name: str) -> "DistortionType":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            valid = ", ".join(t.name.lower() for t in cls)
            raise InvalidSpecError(f"unknown distortion type {name!r}; valid: {valid}") from None


# Severity ladder. Levels 1..5 span barely-visible to heavy damage; every
# value can be overridden per spec. Widths/lengths in pixels, the rest are
# unitless factors on the [0,1] sample domain.
_LEVELS: dict[DistortionType, tuple[dict, ...]] = {
    DistortionType.GAUSSIAN_NOISE: tuple({"sigma": s / 255.0} for s in (5, 10, 25, 40, 60)),
    DistortionType.SPECKLE_NOISE: tuple({"sigma": s / 255.0} for s in (5, 10, 25, 40, 60)),
    DistortionType.GAUSSIAN_BLUR: tuple({"sigma": s} for s in (0.5, 1.0, 2.0, 3.0, 5.0)),
    DistortionType.MOTION_BLUR: tuple({"length": n} for n in (3, 5, 9, 15, 21)),
    DistortionType.FADE: tuple({"alpha": a} for a in (0.1, 0.2, 0.35, 0.5, 0.7)),
    DistortionType.WHITE_OVERLAY: tuple({"alpha": a} for a in (0.1, 0.2, 0.35, 0.5, 0.7)),
    DistortionType.SWIRL: tuple({"strength": s} for s in (0.5, 1.0, 2.0, 3.0, 4.0)),
    DistortionType.SCRATCH: tuple(
        {"count": k, "width_min": 1.0, "width_max": 2.0, "value": 0.95} for k in (1, 2, 4, 7, 10)
    ),
    DistortionType.WATER_DISCOLOUR: tuple(
        {"beta": b, "cells": 8} for b in (0.05, 0.1, 0.2, 0.3, 0.45)
    ),
    DistortionType.PIXELATE: tuple({"block": b} for b in (2, 4, 8, 16, 32)),
    DistortionType.DARKEN: tuple({"gamma": g} for g in (0.9, 0.75, 0.6, 0.45, 0.3)),
    DistortionType.TEAR: tuple(
        {"count": j, "width": w} for j, w in zip((1, 1, 2, 3, 4), (2, 4, 8, 12, 16))
    ),
}

# Optional per-type keys that are drawn from the seed unless overridden.
_OPTIONAL_KEYS: dict[DistortionType, set[str]] = {
    DistortionType.MOTION_BLUR: {"theta"},
    DistortionType.SWIRL: {"radius"},
}


def default_params(dtype: DistortionType, level: int) -> dict:
    """Resolved parameter dict for a (type, level) pair from the ladder."""
    if not 1 <= level <= 5:
        raise InvalidSpecError(f"severity level must be in 1..5, got {level}")
    return dict(_LEVELS[dtype][level - 1])


@dataclass(frozen=True)
class DistortionSpec:
    """Fully determines one deterioration: type, severity, seed, parameters.

    ``params`` defaults to the level-table entry for ``(dtype, level)``;
    explicit entries override individual values.
    """

    dtype: DistortionType
    level: int
    seed: int
    params: dict = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not isinstance(self.dtype, DistortionType):
            raise InvalidSpecError(f"dtype must be a DistortionType, got {self.dtype!r}")
        if not isinstance(self.level, (int, np.integer)) or not 1 <= self.level <= 5:
            raise InvalidSpecError(f"severity level must be in 1..5, got {self.level}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed <= _U64:
            raise InvalidSpecError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        resolved = default_params(self.dtype, self.level)
        if self.params is not None:
            allowed = set(resolved) | _OPTIONAL_KEYS.get(self.dtype, set())
            unknown = set(self.params) - allowed
            if unknown:
                raise InvalidSpecError(
                    f"unknown parameter(s) {sorted(unknown)} for {self.dtype.name.lower()}"
                )
            resolved.update(self.params)
        _validate_params(self.dtype, resolved)
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "params", resolved)

    @property
    def normalized_level(self) -> float:
        """Severity mapped to [0, 1]: (level - 1) / 4."""
        return (self.level - 1) / 4.0


def _validate_params(dtype: DistortionType, p: dict) -> None:
    def need(key, low=0.0, high=None, integral=False):
        v = p[key]
        if integral and int(v) != v:
            raise InvalidSpecError(f"{dtype.name.lower()}: {key} must be integral, got {v}")
        if v < low or (high is not None and v > high):
            raise InvalidSpecError(f"{dtype.name.lower()}: {key}={v} out of range")

    if dtype in (DistortionType.GAUSSIAN_NOISE, DistortionType.SPECKLE_NOISE):
        need("sigma")
    elif dtype == DistortionType.GAUSSIAN_BLUR:
        need("sigma")
    elif dtype == DistortionType.MOTION_BLUR:
        need("length", low=1, integral=True)
    elif dtype in (DistortionType.FADE, DistortionType.WHITE_OVERLAY):
        need("alpha", 0.0, 1.0)
    elif dtype == DistortionType.SWIRL:
        need("strength")
    elif dtype == DistortionType.SCRATCH:
        need("count", low=0, integral=True)
        need("value", 0.0, 1.0)
    elif dtype == DistortionType.WATER_DISCOLOUR:
        need("beta")
        need("cells", low=2, integral=True)
    elif dtype == DistortionType.PIXELATE:
        need("block", low=1, integral=True)
    elif dtype == DistortionType.DARKEN:
        need("gamma", 0.0, 1.0)
    elif dtype == DistortionType.TEAR:
        need("count", low=0, integral=True)
        need("width", low=1)


# --- kernels ---------------------------------------------------------------

def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian with radius ceil(3*sigma); sums to 1."""
    radius = int(np.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def motion_kernel(length: int, theta: float) -> np.ndarray:
    """Normalized line kernel of the given pixel length and angle."""
    k = np.zeros((length, length), dtype=np.float64)
    if length == 1:
        k[0, 0] = 1.0
        return k
    c = (length - 1) / 2.0
    ts = np.linspace(-c, c, num=8 * length)
    xs = c + ts * np.cos(theta)
    ys = c + ts * np.sin(theta)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    fx = xs - x0
    fy = ys - y0
    for dy, dx, wgt in (
        (0, 0, (1 - fy) * (1 - fx)),
        (0, 1, (1 - fy) * fx),
        (1, 0, fy * (1 - fx)),
        (1, 1, fy * fx),
    ):
        yy = np.clip(y0 + dy, 0, length - 1)
        xx = np.clip(x0 + dx, 0, length - 1)
        np.add.at(k, (yy, xx), wgt)
    k /= k.sum()
    return k


def _correlate2d(data: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Per-channel 2-D correlation with edge-replicate padding."""
    kh, kw = kernel.shape
    pt, pl = kh // 2, kw // 2
    pb, pr = kh - 1 - pt, kw - 1 - pl
    padded = np.pad(data, ((pt, pb), (pl, pr), (0, 0)), mode="edge").astype(np.float64)
    h, w = data.shape[:2]
    out = np.zeros(data.shape, dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            kv = kernel[i, j]
            if kv != 0.0:
                out += kv * padded[i : i + h, j : j + w]
    return out


# --- operators -------------------------------------------------------------
# Each takes (data float32 HxWxC, rng, params) and returns float array data;
# the dispatcher clamps to [0,1] and casts. Neutral parameters short-circuit
# to an exact copy so identity is bit-exact.

def _op_gaussian_noise(d, rng, p):
    if p["sigma"] == 0.0:
        return d.copy()
    return d + rng.normal(0.0, p["sigma"], d.shape)


def _op_speckle_noise(d, rng, p):
    if p["sigma"] == 0.0:
        return d.copy()
    return d + d * rng.normal(0.0, p["sigma"], d.shape)


def _op_gaussian_blur(d, rng, p):
    if p["sigma"] == 0.0:
        return d.copy()
    return _correlate2d(d, gaussian_kernel(p["sigma"]))


def _op_motion_blur(d, rng, p):
    length = int(p["length"])
    if length == 1:
        return d.copy()
    theta = p.get("theta")
    if theta is None:
        theta = rng.uniform(0.0, np.pi)
    return _correlate2d(d, motion_kernel(length, theta))


def _op_fade(d, rng, p):
    a = p["alpha"]
    if a == 0.0:
        return d.copy()
    mean = d.astype(np.float64).mean(axis=(0, 1))
    return (1.0 - a) * d + a * mean


def _op_white_overlay(d, rng, p):
    a = p["alpha"]
    if a == 0.0:
        return d.copy()
    return (1.0 - a) * d + a


def _op_swirl(d, rng, p):
    strength = p["strength"]
    if strength == 0.0:
        return d.copy()
    h, w = d.shape[:2]
    radius = p.get("radius")
    if radius is None:
        radius = min(h, w) / 2.0
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    dy, dx = yy - cy, xx - cx
    r = np.hypot(dy, dx)
    angle = strength * np.clip(1.0 - r / radius, 0.0, 1.0)
    cos_a, sin_a = np.cos(angle), np.sin(angle)
    src_y = cy + sin_a * dx + cos_a * dy
    src_x = cx + cos_a * dx - sin_a * dy
    return _bilinear_sample(d, src_y, src_x)


def _bilinear_sample(d: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample HxWxC data at float coordinates, clamped at the borders."""
    h, w = d.shape[:2]
    ys = np.clip(ys, 0.0, h - 1)
    xs = np.clip(xs, 0.0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[..., None]
    fx = (xs - x0)[..., None]
    d64 = d.astype(np.float64)
    top = d64[y0, x0] * (1 - fx) + d64[y0, x1] * fx
    bot = d64[y1, x0] * (1 - fx) + d64[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def _op_scratch(d, rng, p):
    count = int(p["count"])
    if count == 0:
        return d.copy()
    h, w = d.shape[:2]
    out = d.astype(np.float64).copy()
    value = p["value"]
    for _ in range(count):
        y0, y1 = rng.uniform(0, h - 1, 2)
        x0, x1 = rng.uniform(0, w - 1, 2)
        width = rng.uniform(p["width_min"], p["width_max"])
        _draw_segment(out, y0, x0, y1, x1, width, value)
    return out


def _draw_segment(out, y0, x0, y1, x1, width, value):
    """Anti-aliased line into ``out``: coverage from distance to segment."""
    h, w = out.shape[:2]
    margin = width / 2.0 + 1.0
    lo_y = max(0, int(np.floor(min(y0, y1) - margin)))
    hi_y = min(h, int(np.ceil(max(y0, y1) + margin)) + 1)
    lo_x = max(0, int(np.floor(min(x0, x1) - margin)))
    hi_x = min(w, int(np.ceil(max(x0, x1) + margin)) + 1)
    if lo_y >= hi_y or lo_x >= hi_x:
        return
    yy, xx = np.meshgrid(
        np.arange(lo_y, hi_y, dtype=np.float64),
        np.arange(lo_x, hi_x, dtype=np.float64),
        indexing="ij",
    )
    vy, vx = y1 - y0, x1 - x0
    seg_sq = vy * vy + vx * vx
    if seg_sq == 0.0:
        t = np.zeros_like(yy)
    else:
        t = np.clip(((yy - y0) * vy + (xx - x0) * vx) / seg_sq, 0.0, 1.0)
    dist = np.hypot(yy - (y0 + t * vy), xx - (x0 + t * vx))
    cover = np.clip(width / 2.0 + 0.5 - dist, 0.0, 1.0)[..., None]
    region = out[lo_y:hi_y, lo_x:hi_x]
    region *= 1.0 - cover
    region += cover * value


def _op_water_discolour(d, rng, p):
    beta = p["beta"]
    if beta == 0.0:
        return d.copy()
    h, w = d.shape[:2]
    cells = int(p["cells"])
    grid = rng.uniform(-1.0, 1.0, (cells, cells)).astype(SAMPLE_DTYPE)
    coarse = Image.from_array(grid * 0.5 + 0.5)
    fine = resize(coarse, h, w).data[:, :, 0].astype(np.float64) * 2.0 - 1.0
    return d * (1.0 + beta * fine[..., None])


def _op_pixelate(d, rng, p):
    b = int(p["block"])
    if b == 1:
        return d.copy()
    h, w = d.shape[:2]
    row_starts = np.arange(0, h, b)
    col_starts = np.arange(0, w, b)
    sums = np.add.reduceat(np.add.reduceat(d.astype(np.float64), row_starts, axis=0), col_starts, axis=1)
    row_sizes = np.diff(np.append(row_starts, h))
    col_sizes = np.diff(np.append(col_starts, w))
    means = sums / (row_sizes[:, None, None] * col_sizes[None, :, None])
    return np.repeat(np.repeat(means, row_sizes, axis=0), col_sizes, axis=1)


def _op_darken(d, rng, p):
    g = p["gamma"]
    if g == 1.0:
        return d.copy()
    return g * d


def _op_tear(d, rng, p):
    count = int(p["count"])
    if count == 0:
        return d.copy()
    h, w = d.shape[:2]
    out = d.copy()
    half = p["width"] / 2.0
    for _ in range(count):
        vertical = rng.uniform() < 0.5
        span, across = (h, w) if vertical else (w, h)
        n_pts = max(2, span // 8 + 1)
        anchors = np.linspace(0.0, span - 1, n_pts)
        start = rng.uniform(0.15 * across, 0.85 * across)
        drift = np.cumsum(rng.uniform(-0.06 * across, 0.06 * across, n_pts))
        centers = np.interp(np.arange(span), anchors, np.clip(start + drift, 0, across - 1))
        coords = np.arange(across, dtype=np.float64)
        mask = np.abs(coords[None, :] - centers[:, None]) <= half
        if vertical:
            out[mask] = 1.0
        else:
            out[mask.T] = 1.0
    return out


_OPERATORS = {
    DistortionType.GAUSSIAN_NOISE: _op_gaussian_noise,
    DistortionType.SPECKLE_NOISE: _op_speckle_noise,
    DistortionType.GAUSSIAN_BLUR: _op_gaussian_blur,
    DistortionType.MOTION_BLUR: _op_motion_blur,
    DistortionType.FADE: _op_fade,
    DistortionType.WHITE_OVERLAY: _op_white_overlay,
    DistortionType.SWIRL: _op_swirl,
    DistortionType.SCRATCH: _op_scratch,
    DistortionType.WATER_DISCOLOUR: _op_water_discolour,
    DistortionType.PIXELATE: _op_pixelate,
    DistortionType.DARKEN: _op_darken,
    DistortionType.TEAR: _op_tear,
}


def apply_distortion(img: Image, spec: DistortionSpec) -> Image:
    """Apply one deterioration. Pure and deterministic under the spec seed."""
    rng = np.random.default_rng(spec.seed)
    out = _OPERATORS[spec.dtype](img.data, rng, spec.params)
    return Image(np.clip(out, 0.0, 1.0).astype(SAMPLE_DTYPE))


# --- seeding ---------------------------------------------------------------

def splitmix64(x: int) -> int:
    """One step of the splitmix64 sequence; the standard finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & _U64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _U64
    return x ^ (x >> 31)


def derive_seed(base: int, *indices: int) -> int:
    """Independent child seed from a base seed and an index path."""
    s = splitmix64(base & _U64)
    for ix in indices:
        s = splitmix64(s ^ (ix & _U64))
    return s


# --- manifest ----------------------------------------------------------------

@dataclass(frozen=True)
class PairManifestRecord:
    """One clean/distorted pair: paths are relative to the manifest root."""

    clean: str
    distorted: str
    spec: DistortionSpec
    split: str


@dataclass
class PairManifest:
    """Record list plus the directory its relative paths resolve against."""

    root: Path
    records: list[PairManifestRecord]

    def clean_path(self, rec: PairManifestRecord) -> Path:
        return self.root / rec.clean

    def distorted_path(self, rec: PairManifestRecord) -> Path:
        return self.root / rec.distorted

    def select(self, split: str | None = None, dtype: DistortionType | None = None):
        out = []
        for rec in self.records:
            if split is not None and rec.split != split:
                continue
            if dtype is not None and rec.spec.dtype != dtype:
                continue
            out.append(rec)
        return out

    def __len__(self) -> int:
        return len(self.records)


MANIFEST_NAME = "manifest.jsonl"
_SPLITS = ("train", "val", "test")


def _record_to_json(rec: PairManifestRecord) -> str:
    obj = {
        "clean": rec.clean,
        "distorted": rec.distorted,
        "dtype": int(rec.spec.dtype),
        "level": rec.spec.level,
        "seed": str(rec.spec.seed),
        "params": rec.spec.params,
        "split": rec.split,
    }
    return json.dumps(obj, separators=(",", ":"))


def write_manifest(manifest: PairManifest, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in manifest.records:
            fh.write(_record_to_json(rec) + "\n")


def load_manifest(path: str | Path) -> PairManifest:
    """Parse a line-delimited manifest; file paths resolve lazily."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such manifest: {path}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                dtype = DistortionType(int(obj["dtype"]))
                spec = DistortionSpec(
                    dtype=dtype,
                    level=int(obj["level"]),
                    seed=int(obj["seed"]),
                    params=obj.get("params"),
                )
                split = obj["split"]
                if split not in _SPLITS:
                    raise ValueError(f"unknown split {split!r}")
                records.append(
                    PairManifestRecord(str(obj["clean"]), str(obj["distorted"]), spec, split)
                )
            except (ValueError, KeyError, TypeError, InvalidSpecError) as exc:
                raise ManifestParseError(f"{path}, line {lineno}: {exc}") from exc
    return PairManifest(root=path.parent, records=records)


# --- synthesis ----------------------------------------------------------------

_INPUT_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


def synthesize_dataset(
    input_dir: str | Path,
    output_dir: str | Path,
    per_image: int = 50,
    seed: int = 0,
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    types: list[DistortionType] | None = None,
    levels: list[int] | None = None,
    canonical_size: int | None = None,
    threads: int = 1,
) -> PairManifest:
    """Generate ``per_image`` distorted variants of every clean image.

    Variant specs cycle round-robin over the requested (type, level) grid,
    types fastest, so ``per_image == len(types)`` hits each type exactly
    once. Per-variant seeds derive from ``(seed, image index, variant
    index)``, making two runs with the same inputs byte-identical. Splits
    are assigned per clean image. When ``canonical_size`` is set, inputs
    are center-cropped square and resized before use.
    """
    input_dir = Path(input_dir)
    output_dir = Path(output_dir)
    if per_image < 1:
        raise ValueError(f"per_image must be >= 1, got {per_image}")
    if abs(sum(split_fractions) - 1.0) > 1e-9 or any(f < 0 for f in split_fractions):
        raise ValueError(f"split fractions must be non-negative and sum to 1: {split_fractions}")
    types = list(types) if types else list(DistortionType)
    levels = list(levels) if levels else [1, 2, 3, 4, 5]
    for lv in levels:
        if not 1 <= lv <= 5:
            raise InvalidSpecError(f"severity level must be in 1..5, got {lv}")

    files = sorted(p for p in input_dir.iterdir() if p.suffix.lower() in _INPUT_SUFFIXES)
    if not files:
        raise EmptyInputError(f"no loadable images in {input_dir}")

    cleans = []
    for f in files:
        img = load_image(f)
        if canonical_size is not None:
            img = resize(center_crop_square(img), canonical_size, canonical_size)
        cleans.append(img)

    n = len(cleans)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(n * split_fractions[0]))
    n_val = int(np.floor(n * split_fractions[1]))
    splits = [""] * n
    for pos, idx in enumerate(order):
        if pos < n_train:
            splits[idx] = "train"
        elif pos < n_train + n_val:
            splits[idx] = "val"
        else:
            splits[idx] = "test"

    (output_dir / "clean").mkdir(parents=True, exist_ok=True)
    (output_dir / "distorted").mkdir(parents=True, exist_ok=True)

    clean_rels = []
    for i, (f, img) in enumerate(zip(files, cleans)):
        rel = f"clean/{i:04d}_{f.stem}.png"
        save_image(img, output_dir / rel)
        clean_rels.append(rel)

    def make_variant(i: int, v: int) -> PairManifestRecord:
        dtype = types[v % len(types)]
        level = levels[(v // len(types)) % len(levels)]
        spec = DistortionSpec(dtype, level, derive_seed(seed, i, v))
        distorted = apply_distortion(cleans[i], spec)
        rel = f"distorted/{i:04d}_{files[i].stem}_v{v:03d}_{dtype.name.lower()}_l{level}.png"
        save_image(distorted, output_dir / rel)
        return PairManifestRecord(clean_rels[i], rel, spec, splits[i])

    jobs = [(i, v) for i in range(n) for v in range(per_image)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda iv: make_variant(*iv), jobs))
    else:
        records = [make_variant(i, v) for i, v in jobs]

    manifest = PairManifest(root=output_dir, records=records)
    write_manifest(manifest, output_dir / MANIFEST_NAME)
    return manifest


# --- procedural textures -----------------------------------------------------

def random_texture(height: int, width: int, channels: int = 3, seed: int = 0) -> Image:
    """Seeded smooth multi-scale texture; a stand-in corpus for experiments.

    Layers bilinearly upsampled random grids at several frequencies with a
    random linear gradient, then adds mild per-channel tinting, so outputs
    have enough structure to be worth denoising.
    """
    rng = np.random.default_rng(seed)
    base = np.zeros((height, width), dtype=np.float64)
    for cells, amp in ((2, 1.0), (4, 0.55), (8, 0.3), (16, 0.15)):
        if cells > min(height, width):
            break
        grid = rng.uniform(-1.0, 1.0, (cells, cells)).astype(SAMPLE_DTYPE)
        field = resize(Image.from_array(grid * 0.5 + 0.5), height, width)
        base += amp * (field.data[:, :, 0].astype(np.float64) * 2.0 - 1.0)
    gy, gx = rng.uniform(-1.0, 1.0, 2)
    yy, xx = np.meshgrid(
        np.linspace(-0.5, 0.5, height), np.linspace(-0.5, 0.5, width), indexing="ij"
    )
    base += 0.4 * (gy * yy + gx * xx)
    lo, hi = base.min(), base.max()
    if hi > lo:
        base = (base - lo) / (hi - lo)
    base = 0.1 + 0.8 * base
    if channels == 1:
        return Image.from_array(base)
    out = np.empty((height, width, 3), dtype=np.float64)
    for c in range(3):
        cells = 4
        grid = rng.uniform(-1.0, 1.0, (cells, cells)).astype(SAMPLE_DTYPE)
        tint = resize(Image.from_array(grid * 0.5 + 0.5), height, width)
        out[:, :, c] = base + 0.12 * (tint.data[:, :, 0].astype(np.float64) * 2.0 - 1.0)
    return Image.from_array(out)
