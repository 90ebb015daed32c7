"""Image values, PNG I/O, and the geometric primitives shared by the pipeline.

An :class:`Image` is an ``H x W x C`` float32 raster with samples in
``[0, 1]``. Files are 8-bit; quantization happens only at the file
boundary. All operations here are pure: they return new images and never
mutate their inputs, so values can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .errors import (
    CorruptDataError,
    InvalidDimensionsError,
    InvalidModeError,
    OutOfBoundsError,
    UnsupportedFormatError,
)

SAMPLE_DTYPE = np.float32

# PIL modes accepted directly or via lossless-enough conversion. 16-bit and
# float modes are rejected: the file contract is 8 bits per channel.
_DIRECT_MODES = {"L": 1, "RGB": 3}
_CONVERT_MODES = {"1": "L", "LA": "L", "P": "RGB", "RGBA": "RGB", "CMYK": "RGB", "YCbCr": "RGB"}


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable ``(height, width, channels)`` raster, float32 in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if not isinstance(d, np.ndarray) or d.ndim != 3:
            raise ValueError("image data must be a (H, W, C) array")
        if d.shape[2] not in (1, 3):
            raise ValueError(f"channel count must be 1 or 3, got {d.shape[2]}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("image must have at least one pixel")
        if d.dtype != SAMPLE_DTYPE:
            d = d.astype(SAMPLE_DTYPE)
        if not d.flags.c_contiguous:
            d = np.ascontiguousarray(d)
        if not np.isfinite(d).all():
            raise ValueError("image samples must be finite")
        if d.min() < 0.0 or d.max() > 1.0:
            raise ValueError("image samples must lie in [0, 1]")
        object.__setattr__(self, "data", d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image":
        """Build an image from any float array, clamping into [0, 1].

        2-D input is treated as single-channel.
        """
        a = np.asarray(arr, dtype=SAMPLE_DTYPE)
        if a.ndim == 2:
            a = a[:, :, None]
        return cls(np.clip(a, 0.0, 1.0))


def load_image(path: str | Path) -> Image:
    """Load an 8-bit raster file into [0, 1] floats (byte / 255)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image file: {path}")
    try:
        pil = PILImage.open(path)
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"not a supported raster file: {path}") from exc
    with pil:
        mode = pil.mode
        if mode in _CONVERT_MODES:
            pil = pil.convert(_CONVERT_MODES[mode])
            mode = pil.mode
        if mode not in _DIRECT_MODES:
            raise UnsupportedFormatError(f"unsupported pixel mode {mode!r} in {path}")
        try:
            arr = np.asarray(pil, dtype=np.uint8)
        except OSError as exc:
            raise CorruptDataError(f"could not decode pixel data of {path}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Image(arr.astype(SAMPLE_DTYPE) / 255.0)


def quantize(img: Image) -> np.ndarray:
    """8-bit quantization used on save: round-half-away-from-zero of s*255."""
    scaled = np.clip(img.data, 0.0, 1.0).astype(np.float64) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def save_image(img: Image, path: str | Path) -> None:
    """Write an 8-bit PNG. The parent directory must already exist."""
    path = Path(path)
    bytes_ = quantize(img)
    if img.channels == 1:
        pil = PILImage.fromarray(bytes_[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(bytes_, mode="RGB")
    pil.save(path, format="PNG")


def resize(img: Image, out_h: int, out_w: int) -> Image:
    """Bilinear resize with half-pixel-centered sampling.

    Resizing to the source dimensions is an exact identity.
    """
    if out_h < 1 or out_w < 1:
        raise InvalidDimensionsError(f"output dimensions must be >= 1, got {out_h}x{out_w}")
    h, w = img.height, img.width
    if (out_h, out_w) == (h, w):
        return Image(img.data.copy())

    def axis_coords(n_in: int, n_out: int):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        i0 = np.floor(src).astype(np.intp)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, src - i0

    r0, r1, fy = axis_coords(h, out_h)
    c0, c1, fx = axis_coords(w, out_w)
    d = img.data.astype(np.float64)
    rows = d[r0] * (1.0 - fy)[:, None, None] + d[r1] * fy[:, None, None]
    out = rows[:, c0] * (1.0 - fx)[None, :, None] + rows[:, c1] * fx[None, :, None]
    return Image(np.clip(out, 0.0, 1.0).astype(SAMPLE_DTYPE))


def crop_patch(img: Image, top: int, left: int, size: int) -> Image:
    """Copy out a ``size x size`` window; raises if it leaves the image."""
    if size < 1:
        raise OutOfBoundsError(f"patch size must be >= 1, got {size}")
    if top < 0 or left < 0 or top + size > img.height or left + size > img.width:
        raise OutOfBoundsError(
            f"crop ({top},{left},{size}) outside {img.height}x{img.width} image"
        )
    return Image(img.data[top : top + size, left : left + size].copy())


def center_crop_square(img: Image) -> Image:
    """Largest centered square crop; used to canonicalize ingested art."""
    side = min(img.height, img.width)
    top = (img.height - side) // 2
    left = (img.width - side) // 2
    return crop_patch(img, top, left, side)


def augment(img: Image, mode: int) -> Image:
    """Apply one of the 8 dihedral transforms (pixel permutation only).

    Modes 0..3 rotate counter-clockwise by ``mode * 90`` degrees; modes
    4..7 additionally flip left-right after the rotation.
    """
    if not isinstance(mode, (int, np.integer)) or not 0 <= mode <= 7:
        raise InvalidModeError(f"augmentation mode must be in 0..7, got {mode}")
    d = np.rot90(img.data, k=mode % 4)
    if mode >= 4:
        d = np.fliplr(d)
    return Image(np.ascontiguousarray(d))
