"""Specialist denoiser: reversible 2x downsampling around a conv stack.

An input image is rearranged into four half-resolution sub-images, a
constant severity channel is appended, and a stack of size-preserving
convolutions regresses the clean sub-images directly (no residual
prediction). The inverse rearrangement reassembles the full-resolution
restoration. Middle layers carry batch normalization that can be folded
into the neighbouring convolutions for inference.

Checkpoints are self-describing binary files (magic ``DDCN``, JSON header,
float32 little-endian parameters, CRC-32 trailer) with extension ``.ddc``.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import nn
from .degrade import DistortionType, derive_seed
from .errors import (
    AlreadyFoldedError,
    BadChannelCountError,
    CheckpointError,
    ChecksumError,
    FormatVersionError,
    OddDimensionsError,
    ShapeMismatchError,
    UnpopulatedStatsError,
)
from .image import SAMPLE_DTYPE, Image

FORMAT_VERSION = 1
CHECKPOINT_MAGIC = b"DDCN"
CHECKPOINT_SUFFIX = ".ddc"

# Fixed sub-image extraction order: (row offset, col offset) pairs, each
# carrying the image's channels in order.
_OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))


# --- pixel shuffle -----------------------------------------------------------

def space_to_depth_batch(x: np.ndarray) -> np.ndarray:
    """(N, C, H, W) -> (N, 4C, H/2, W/2) by the fixed offset order."""
    if x.ndim != 4:
        raise ShapeMismatchError(f"expected a 4-D tensor, got shape {x.shape}")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise OddDimensionsError(f"height and width must be even, got {h}x{w}")
    r = x.reshape(n, c, h // 2, 2, w // 2, 2)
    return np.ascontiguousarray(r.transpose(0, 3, 5, 1, 2, 4)).reshape(n, 4 * c, h // 2, w // 2)


def depth_to_space_batch(t: np.ndarray) -> np.ndarray:
    """(N, 4C, H/2, W/2) -> (N, C, H, W); exact inverse of the above."""
    if t.ndim != 4:
        raise ShapeMismatchError(f"expected a 4-D tensor, got shape {t.shape}")
    n, c4, h2, w2 = t.shape
    if c4 % 4:
        raise BadChannelCountError(f"channel count must be divisible by 4, got {c4}")
    c = c4 // 4
    r = t.reshape(n, 2, 2, c, h2, w2)
    return np.ascontiguousarray(r.transpose(0, 3, 4, 1, 5, 2)).reshape(n, c, 2 * h2, 2 * w2)


def space_to_depth(img: Image) -> np.ndarray:
    """Rearrange an even-sized image into a (1, 4C, H/2, W/2) tensor."""
    x = img.data.transpose(2, 0, 1)[None]
    return np.ascontiguousarray(space_to_depth_batch(x), dtype=SAMPLE_DTYPE)


def depth_to_space(t: np.ndarray) -> Image:
    """Inverse rearrangement back to an image, clamped into [0, 1]."""
    x = depth_to_space_batch(t)
    if x.shape[0] != 1:
        raise ShapeMismatchError(f"expected batch size 1, got {x.shape[0]}")
    data = x[0].transpose(1, 2, 0)
    return Image(np.clip(data, 0.0, 1.0).astype(SAMPLE_DTYPE))


def assemble_input(img: Image, level: float) -> np.ndarray:
    """Sub-images plus one constant severity channel: (1, 4C+1, H/2, W/2)."""
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"severity level must lie in [0, 1], got {level}")
    t = space_to_depth(img)
    lvl = np.full((1, 1, t.shape[2], t.shape[3]), level, dtype=t.dtype)
    return np.concatenate([t, lvl], axis=1)


def _level_plane(batch: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Append per-sample severity channels to a (N, 4C, h, w) tensor."""
    n, _, h, w = batch.shape
    lvl = np.broadcast_to(
        np.asarray(levels, dtype=batch.dtype).reshape(n, 1, 1, 1), (n, 1, h, w)
    )
    return np.concatenate([batch, lvl], axis=1)


# --- model -------------------------------------------------------------------

@dataclass
class LayerBlock:
    conv: nn.ConvLayer
    bn: nn.BatchNormLayer | None
    relu: bool


@dataclass
class DenoiserModel:
    """Ordered conv stack plus the distortion type it specializes in.

    ``dtype`` is ``None`` for a wildcard model trained across all types.
    """

    dtype: DistortionType | None
    blocks: list[LayerBlock]
    kernel: int
    channels_hidden: int
    image_channels: int
    bn_folded: bool = False
    version: int = FORMAT_VERSION

    def __post_init__(self):
        if len(self.blocks) < 2:
            raise ValueError("model needs at least two layers")
        first, last = self.blocks[0], self.blocks[-1]
        if first.bn is not None or not first.relu:
            raise ValueError("first layer must be conv+relu without normalization")
        if last.bn is not None or last.relu:
            raise ValueError("last layer must be a bare convolution")
        for blk in self.blocks[1:-1]:
            if not blk.relu:
                raise ValueError("middle layers must end in relu")
            if (blk.bn is None) != self.bn_folded:
                raise ValueError("middle layers must carry normalization unless folded")

    @property
    def channels_in(self) -> int:
        return 4 * self.image_channels + 1

    @property
    def channels_out(self) -> int:
        return 4 * self.image_channels

    @property
    def num_layers(self) -> int:
        return len(self.blocks)


def build_denoiser(
    dtype: DistortionType | None,
    image_channels: int = 3,
    num_layers: int = 17,
    hidden_channels: int = 64,
    kernel: int = 3,
    seed: int = 0,
) -> DenoiserModel:
    """Fresh model: orthogonal conv weights, zero biases, identity norms."""
    if image_channels not in (1, 3):
        raise ValueError(f"image_channels must be 1 or 3, got {image_channels}")
    if num_layers < 2:
        raise ValueError(f"need at least 2 layers, got {num_layers}")
    if kernel < 1:
        raise ValueError(f"kernel must be >= 1, got {kernel}")
    c_in = 4 * image_channels + 1
    c_out = 4 * image_channels
    blocks = []
    for i in range(num_layers):
        ci = c_in if i == 0 else hidden_channels
        co = c_out if i == num_layers - 1 else hidden_channels
        conv = nn.ConvLayer(
            weights=nn.orthogonal_init((co, ci, kernel, kernel), seed=derive_seed(seed, i)),
            bias=np.zeros(co, dtype=np.float32),
        )
        middle = 0 < i < num_layers - 1
        blocks.append(
            LayerBlock(
                conv=conv,
                bn=nn.make_batchnorm(co) if middle else None,
                relu=i < num_layers - 1,
            )
        )
    return DenoiserModel(
        dtype=dtype,
        blocks=blocks,
        kernel=kernel,
        channels_hidden=hidden_channels,
        image_channels=image_channels,
    )


def parameters(model: DenoiserModel) -> list[np.ndarray]:
    """Trainable arrays in a stable order (running stats excluded)."""
    out = []
    for blk in model.blocks:
        out.append(blk.conv.weights)
        out.append(blk.conv.bias)
        if blk.bn is not None:
            out.append(blk.bn.gamma)
            out.append(blk.bn.beta)
    return out


def clone_model(model: DenoiserModel) -> DenoiserModel:
    return cast_model(model, None)


def cast_model(model: DenoiserModel, dtype) -> DenoiserModel:
    """Deep copy, optionally converting every array to ``dtype``."""

    def conv_arr(a):
        return a.astype(dtype) if dtype is not None else a.copy()

    blocks = []
    for blk in model.blocks:
        conv = nn.ConvLayer(weights=conv_arr(blk.conv.weights), bias=conv_arr(blk.conv.bias))
        bn = None
        if blk.bn is not None:
            bn = nn.BatchNormLayer(
                gamma=conv_arr(blk.bn.gamma),
                beta=conv_arr(blk.bn.beta),
                running_mean=conv_arr(blk.bn.running_mean),
                running_var=conv_arr(blk.bn.running_var),
                epsilon=blk.bn.epsilon,
                momentum=blk.bn.momentum,
                batches_tracked=blk.bn.batches_tracked,
            )
        blocks.append(LayerBlock(conv=conv, bn=bn, relu=blk.relu))
    return replace(model, blocks=blocks)


def net_forward(
    model: DenoiserModel,
    x: np.ndarray,
    mode: str = "eval",
    update_stats: bool = True,
    want_cache: bool = False,
):
    """Run the conv stack on a (N, 4C+1, h, w) tensor.

    Returns the output tensor, or ``(output, cache)`` when a cache for
    :func:`net_backward` is requested.
    """
    if x.ndim != 4 or x.shape[1] != model.channels_in:
        raise ShapeMismatchError(
            f"expected (N, {model.channels_in}, h, w) input, got {x.shape}"
        )
    cache = []
    for blk in model.blocks:
        conv_in = x
        x = nn.conv2d_forward(x, blk.conv)
        conv_out = x
        bn_out = None
        if blk.bn is not None:
            x = nn.batchnorm_forward(x, blk.bn, mode=mode, update_stats=update_stats)
            bn_out = x
        if blk.relu:
            x = nn.relu(x)
        if want_cache:
            cache.append((conv_in, conv_out, bn_out))
    return (x, cache) if want_cache else x


def net_backward(model: DenoiserModel, cache: list, grad_out: np.ndarray) -> list[np.ndarray]:
    """Gradients for every entry of :func:`parameters`, via the cache."""
    grads_rev = []
    g = grad_out
    for blk, (conv_in, conv_out, bn_out) in zip(reversed(model.blocks), reversed(cache)):
        if blk.relu:
            relu_in = bn_out if bn_out is not None else conv_out
            g = nn.relu_backward(relu_in, g)
        block_grads = []
        if blk.bn is not None:
            g, dgamma, dbeta = nn.batchnorm_backward(conv_out, blk.bn, g)
            block_grads = [dgamma, dbeta]
        g, dw, db = nn.conv2d_backward(conv_in, blk.conv, g)
        grads_rev.append([dw, db] + block_grads)
    out = []
    for block_grads in reversed(grads_rev):
        out.extend(block_grads)
    return out


def forward(model: DenoiserModel, img: Image, level: float) -> Image:
    """Restore one image; odd dimensions are reflect-padded then cropped."""
    if img.channels != model.image_channels:
        raise ShapeMismatchError(
            f"model expects {model.image_channels}-channel images, got {img.channels}"
        )
    h, w = img.height, img.width
    pad_h, pad_w = h % 2, w % 2
    work = img
    if pad_h or pad_w:
        mode = "reflect" if min(h, w) > 1 else "edge"
        data = np.pad(img.data, ((0, pad_h), (0, pad_w), (0, 0)), mode=mode)
        work = Image(data)
    x = assemble_input(work, level)
    y = net_forward(model, x, mode="eval")
    restored = depth_to_space(y)
    if pad_h or pad_w:
        restored = Image(restored.data[:h, :w].copy())
    return restored


def fold_batchnorm(model: DenoiserModel) -> DenoiserModel:
    """Absorb normalization into the adjacent convolutions (eval-equivalent)."""
    if model.bn_folded:
        raise AlreadyFoldedError("model normalization is already folded")
    for blk in model.blocks:
        if blk.bn is not None and blk.bn.batches_tracked == 0:
            raise UnpopulatedStatsError("running statistics were never updated")
    blocks = []
    for blk in model.blocks:
        if blk.bn is None:
            blocks.append(
                LayerBlock(
                    conv=nn.ConvLayer(blk.conv.weights.copy(), blk.conv.bias.copy()),
                    bn=None,
                    relu=blk.relu,
                )
            )
            continue
        bn = blk.bn
        scale = (bn.gamma / np.sqrt(bn.running_var + bn.epsilon)).astype(blk.conv.weights.dtype)
        weights = blk.conv.weights * scale[:, None, None, None]
        bias = bn.beta + (blk.conv.bias - bn.running_mean) * scale
        blocks.append(
            LayerBlock(
                conv=nn.ConvLayer(weights=weights, bias=bias.astype(blk.conv.bias.dtype)),
                bn=None,
                relu=blk.relu,
            )
        )
    return replace(model, blocks=blocks, bn_folded=True)


# --- checkpoints --------------------------------------------------------------

def _header_dict(model: DenoiserModel) -> dict:
    layers = []
    for blk in model.blocks:
        entry = {
            "c_in": blk.conv.c_in,
            "c_out": blk.conv.c_out,
            "relu": blk.relu,
            "bn": None,
        }
        if blk.bn is not None:
            entry["bn"] = {
                "epsilon": blk.bn.epsilon,
                "momentum": blk.bn.momentum,
                "batches_tracked": blk.bn.batches_tracked,
            }
        layers.append(entry)
    return {
        "dtype": model.dtype.name.lower() if model.dtype is not None else "*",
        "kernel": model.kernel,
        "channels_hidden": model.channels_hidden,
        "channels_in": model.channels_in,
        "channels_out": model.channels_out,
        "image_channels": model.image_channels,
        "bn_folded": model.bn_folded,
        "layers": layers,
    }


def _block_arrays(blk: LayerBlock) -> list[np.ndarray]:
    arrs = [blk.conv.weights, blk.conv.bias]
    if blk.bn is not None:
        arrs += [blk.bn.gamma, blk.bn.beta, blk.bn.running_mean, blk.bn.running_var]
    return arrs


def save_model(model: DenoiserModel, path: str | Path) -> None:
    """Write a checkpoint; parameters are stored as little-endian float32."""
    header = json.dumps(_header_dict(model), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [CHECKPOINT_MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", len(header)), header]
    for blk in model.blocks:
        for arr in _block_arrays(blk):
            parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    body = b"".join(parts)
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def read_model_info(path: str | Path) -> dict:
    """Parse only the checkpoint header (cheap; no CRC verification)."""
    with open(path, "rb") as fh:
        prefix = fh.read(12)
        if len(prefix) < 12 or prefix[:4] != CHECKPOINT_MAGIC:
            raise CheckpointError(f"not a denoiser checkpoint: {path}")
        version, hlen = struct.unpack("<II", prefix[4:12])
        if version > FORMAT_VERSION:
            raise FormatVersionError(
                f"checkpoint version {version} is newer than supported {FORMAT_VERSION}"
            )
        raw = fh.read(hlen)
    if len(raw) < hlen:
        raise ChecksumError(f"truncated checkpoint: {path}")
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {path}") from exc


def load_model(path: str | Path) -> DenoiserModel:
    """Read a checkpoint back; verifies the CRC-32 trailer first."""
    buf = Path(path).read_bytes()
    if len(buf) < 16:
        raise ChecksumError(f"truncated checkpoint: {path}")
    (stored,) = struct.unpack("<I", buf[-4:])
    if zlib.crc32(buf[:-4]) != stored:
        raise ChecksumError(f"checksum mismatch (corrupt or truncated): {path}")
    if buf[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"not a denoiser checkpoint: {path}")
    version, hlen = struct.unpack("<II", buf[4:12])
    if version > FORMAT_VERSION:
        raise FormatVersionError(
            f"checkpoint version {version} is newer than supported {FORMAT_VERSION}"
        )
    try:
        header = json.loads(buf[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {path}") from exc

    offset = 12 + hlen
    kernel = int(header["kernel"])
    folded = bool(header["bn_folded"])

    def take(shape) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape))
        end = offset + 4 * count
        if end > len(buf) - 4:
            raise CheckpointError(f"parameter data overruns file: {path}")
        arr = np.frombuffer(buf, dtype="<f4", count=count, offset=offset)
        offset = end
        return arr.astype(np.float32).reshape(shape)

    blocks = []
    for entry in header["layers"]:
        ci, co = int(entry["c_in"]), int(entry["c_out"])
        conv = nn.ConvLayer(weights=take((co, ci, kernel, kernel)), bias=take((co,)))
        bn = None
        if entry["bn"] is not None:
            bn = nn.BatchNormLayer(
                gamma=take((co,)),
                beta=take((co,)),
                running_mean=take((co,)),
                running_var=take((co,)),
                epsilon=float(entry["bn"]["epsilon"]),
                momentum=float(entry["bn"]["momentum"]),
                batches_tracked=int(entry["bn"]["batches_tracked"]),
            )
        blocks.append(LayerBlock(conv=conv, bn=bn, relu=bool(entry["relu"])))
    if offset != len(buf) - 4:
        raise CheckpointError(f"unexpected trailing bytes in checkpoint: {path}")

    tag = header["dtype"]
    dtype = None if tag == "*" else DistortionType.from_name(tag)
    return DenoiserModel(
        dtype=dtype,
        blocks=blocks,
        kernel=kernel,
        channels_hidden=int(header["channels_hidden"]),
        image_channels=int(header["image_channels"]),
        bn_folded=folded,
        version=version,
    )


def check_gradients(
    model: DenoiserModel,
    x: np.ndarray,
    target: np.ndarray,
    tolerance: float = 1e-4,
    samples: int = 40,
    step: float = 1e-5,
    seed: int = 0,
) -> nn.GradCheckReport:
    """End-to-end finite-difference audit of the stack's gradients.

    The model is evaluated in float64, train-mode normalization, with
    running statistics frozen so repeated evaluations are pure.
    """
    m64 = cast_model(model, np.float64)
    x = x.astype(np.float64)
    target = target.astype(np.float64)
    params = parameters(m64)

    def loss_only() -> float:
        y = net_forward(m64, x, mode="train", update_stats=False)
        loss, _ = nn.mse_loss(y, target)
        return loss

    y, cache = net_forward(m64, x, mode="train", update_stats=False, want_cache=True)
    _, grad = nn.mse_loss(y, target)
    analytic = net_backward(m64, cache, grad)
    return nn.grad_check(
        loss_only, params, analytic, tolerance=tolerance, samples=samples, step=step, seed=seed
    )
