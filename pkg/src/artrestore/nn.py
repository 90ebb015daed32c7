"""Minimal dense-tensor engine: exactly the layers the denoiser needs.

Tensors are plain numpy arrays in ``(N, C, H, W)`` order. Convolution is
cross-correlation (no kernel flip) at stride 1 with zero padding chosen so
spatial size is preserved: symmetric for odd kernels, one-extra-on-the
right/bottom for even ones. Backward passes are exact gradients, verified
against central finite differences.

Training runs in float32; gradient checking expects float64 inputs. Public
operations reject non-finite inputs instead of propagating them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateBatchError,
    InvalidShapeError,
    NonFiniteError,
    ShapeMismatchError,
)


def _require_tensor4(x: np.ndarray, name: str = "input") -> None:
    if not isinstance(x, np.ndarray) or x.ndim != 4:
        raise ShapeMismatchError(f"{name} must be a 4-D (N,C,H,W) array")
    if not np.isfinite(x).all():
        raise NonFiniteError(f"{name} contains NaN or Inf")


def _pads_for_kernel(k: int) -> tuple[int, int, int, int]:
    """(top, bottom, left, right) zero padding that preserves spatial size."""
    lead = (k - 1) // 2
    trail = k // 2
    return lead, trail, lead, trail


@dataclass
class ConvLayer:
    """Stride-1, size-preserving 2-D convolution parameters.

    ``weights`` is ``(c_out, c_in, k, k)``; ``bias`` is ``(c_out,)``.
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w, b = self.weights, self.bias
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise InvalidShapeError(f"conv weights must be (c_out, c_in, k, k), got {w.shape}")
        if b.shape != (w.shape[0],):
            raise InvalidShapeError(f"conv bias must be ({w.shape[0]},), got {b.shape}")

    @property
    def c_out(self) -> int:
        return self.weights.shape[0]

    @property
    def c_in(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel(self) -> int:
        return self.weights.shape[2]

    @property
    def padding(self) -> tuple[int, int, int, int]:
        return _pads_for_kernel(self.kernel)


def _im2col(x: np.ndarray, k: int, pads: tuple[int, int, int, int]) -> tuple[np.ndarray, int, int]:
    """Zero-pad then unfold k*k windows into rows of a 2-D matrix."""
    pt, pb, pl, pr = pads
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    n, c, oh, ow = windows.shape[:4]
    cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5))
    return cols.reshape(n * oh * ow, c * k * k), oh, ow


def conv2d_forward(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """Cross-correlate ``x`` with the layer kernel; output keeps H and W."""
    _require_tensor4(x)
    if x.shape[1] != layer.c_in:
        raise ShapeMismatchError(f"expected {layer.c_in} input channels, got {x.shape[1]}")
    n = x.shape[0]
    cols, oh, ow = _im2col(x, layer.kernel, layer.padding)
    w_mat = layer.weights.reshape(layer.c_out, -1)
    out = cols @ w_mat.T
    out += layer.bias
    return out.reshape(n, oh, ow, layer.c_out).transpose(0, 3, 1, 2).copy()


def conv2d_backward(
    x: np.ndarray, layer: ConvLayer, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of :func:`conv2d_forward` w.r.t. input, weights, bias."""
    _require_tensor4(x)
    _require_tensor4(grad_out, "grad_out")
    n, _, h, w = x.shape
    if grad_out.shape != (n, layer.c_out, h, w):
        raise ShapeMismatchError(
            f"grad_out shape {grad_out.shape} != expected {(n, layer.c_out, h, w)}"
        )
    k = layer.kernel
    grad_b = grad_out.sum(axis=(0, 2, 3))

    cols, _, _ = _im2col(x, k, layer.padding)
    g_mat = np.ascontiguousarray(grad_out.transpose(0, 2, 3, 1)).reshape(n * h * w, layer.c_out)
    grad_w = (g_mat.T @ cols).reshape(layer.weights.shape)

    # Input gradient: full correlation of grad_out with the flipped kernel,
    # transposed over channel axes, then cropped by the forward padding.
    pt, pb, pl, pr = layer.padding
    w_flip = layer.weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
    g_cols, gh, gw = _im2col(grad_out, k, (k - 1, k - 1, k - 1, k - 1))
    dx_pad = (g_cols @ w_flip.reshape(layer.c_in, -1).T).reshape(n, gh, gw, layer.c_in)
    dx_pad = dx_pad.transpose(0, 3, 1, 2)
    grad_x = dx_pad[:, :, pt : pt + h, pl : pl + w].copy()
    return grad_x, grad_w, grad_b


@dataclass
class BatchNormLayer:
    """Per-channel batch normalization with running statistics."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    epsilon: float = 1e-5
    momentum: float = 0.1
    batches_tracked: int = 0

    def __post_init__(self):
        c = self.gamma.shape
        for name in ("beta", "running_mean", "running_var"):
            if getattr(self, name).shape != c:
                raise InvalidShapeError(f"{name} shape must match gamma shape {c}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.momentum < 1:
            raise ValueError("momentum must lie in (0, 1)")
        if (self.running_var < 0).any():
            raise ValueError("running_var must be non-negative")

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]


def make_batchnorm(channels: int, dtype=np.float32) -> BatchNormLayer:
    return BatchNormLayer(
        gamma=np.ones(channels, dtype=dtype),
        beta=np.zeros(channels, dtype=dtype),
        running_mean=np.zeros(channels, dtype=dtype),
        running_var=np.ones(channels, dtype=dtype),
    )


def batchnorm_forward(
    x: np.ndarray, layer: BatchNormLayer, mode: str = "train", update_stats: bool = True
) -> np.ndarray:
    """Normalize per channel; train mode uses batch statistics.

    Train mode normalizes with the (biased) batch variance and, unless
    ``update_stats`` is off, blends the running statistics toward the batch
    (unbiased variance) by ``momentum``. Eval mode uses running statistics.
    """
    _require_tensor4(x)
    if x.shape[1] != layer.channels:
        raise ShapeMismatchError(f"expected {layer.channels} channels, got {x.shape[1]}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    ax = (0, 2, 3)
    if mode == "eval":
        mean = layer.running_mean
        var = layer.running_var
    else:
        m = x.shape[0] * x.shape[2] * x.shape[3]
        if m < 2:
            raise DegenerateBatchError(f"train-mode batch needs >= 2 samples per channel, got {m}")
        mean = x.mean(axis=ax)
        var = x.var(axis=ax)
        if update_stats:
            mom = layer.momentum
            layer.running_mean[:] = (1 - mom) * layer.running_mean + mom * mean
            layer.running_var[:] = (1 - mom) * layer.running_var + mom * var * (m / (m - 1))
            layer.batches_tracked += 1
    inv = 1.0 / np.sqrt(var + layer.epsilon)
    shape = (1, -1, 1, 1)
    return (x - mean.reshape(shape)) * (layer.gamma * inv).reshape(shape) + layer.beta.reshape(shape)


def batchnorm_backward(
    x: np.ndarray, layer: BatchNormLayer, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Train-mode gradients w.r.t. input, gamma, beta."""
    _require_tensor4(x)
    _require_tensor4(grad_out, "grad_out")
    if grad_out.shape != x.shape:
        raise ShapeMismatchError(f"grad_out shape {grad_out.shape} != input shape {x.shape}")
    ax = (0, 2, 3)
    m = x.shape[0] * x.shape[2] * x.shape[3]
    mean = x.mean(axis=ax)
    var = x.var(axis=ax)
    inv = 1.0 / np.sqrt(var + layer.epsilon)
    shape = (1, -1, 1, 1)
    xhat = (x - mean.reshape(shape)) * inv.reshape(shape)
    dgamma = (grad_out * xhat).sum(axis=ax)
    dbeta = grad_out.sum(axis=ax)
    dxhat = grad_out * layer.gamma.reshape(shape)
    dx = (inv.reshape(shape) / m) * (
        m * dxhat
        - dxhat.sum(axis=ax).reshape(shape)
        - xhat * (dxhat * xhat).sum(axis=ax).reshape(shape)
    )
    return dx, dgamma, dbeta


def relu(x: np.ndarray) -> np.ndarray:
    _require_tensor4(x)
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    if x.shape != grad_out.shape:
        raise ShapeMismatchError(f"grad_out shape {grad_out.shape} != input shape {x.shape}")
    return grad_out * (x > 0)


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean of squared differences over all elements, plus its gradient."""
    _require_tensor4(pred, "pred")
    _require_tensor4(target, "target")
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"pred shape {pred.shape} != target shape {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    grad = (2.0 / diff.size) * diff
    return loss, grad


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    lr: float
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def adam_init(params: list[np.ndarray], lr: float = 1e-3, **kwargs) -> AdamState:
    return AdamState(
        lr=lr,
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        **kwargs,
    )


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected update; parameters are modified in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatchError("params, grads, and state must have equal lengths")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeMismatchError(f"param shape {p.shape} != grad shape {g.shape}")
        if not np.isfinite(g).all():
            raise NonFiniteError("gradient contains NaN or Inf")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


def orthogonal_init(shape: tuple[int, ...], seed: int, dtype=np.float32) -> np.ndarray:
    """Weights whose shorter matrix dimension is orthonormal; seeded."""
    if len(shape) < 2 or any(s < 1 for s in shape):
        raise InvalidShapeError(f"orthogonal init needs >= 2 positive dimensions, got {shape}")
    rows = shape[0]
    cols = int(np.prod(shape[1:]))
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((rows, cols))
    if rows < cols:
        q, r = np.linalg.qr(a.T)
        q = q * np.sign(np.diag(r))
        w = q.T
    else:
        q, r = np.linalg.qr(a)
        w = q * np.sign(np.diag(r))
    # Force C layout: downstream matmuls must not depend on whether the
    # weights came fresh from init or round-tripped through a checkpoint.
    return np.ascontiguousarray(w.reshape(shape), dtype=dtype)


@dataclass
class GradCheckReport:
    """Result of comparing analytic gradients to finite differences."""

    max_rel_error: float
    tolerance: float
    checked: int
    worst: tuple[int, int] = field(default=(-1, -1))

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def grad_check(
    loss_fn,
    params: list[np.ndarray],
    analytic: list[np.ndarray],
    tolerance: float = 1e-5,
    samples: int = 40,
    step: float = 1e-5,
    seed: int = 0,
) -> GradCheckReport:
    """Central-finite-difference check on a random parameter subsample.

    ``loss_fn()`` must evaluate the scalar loss at the current parameter
    values; entries of ``params`` are perturbed in place and restored.
    Requires float64 parameters.
    """
    for p in params:
        if p.dtype != np.float64:
            raise ValueError("gradient checking requires float64 parameters")
    sizes = [p.size for p in params]
    total = int(np.sum(sizes))
    rng = np.random.default_rng(seed)
    count = min(samples, total)
    picks = rng.choice(total, size=count, replace=False)
    bounds = np.cumsum(sizes)

    max_rel = 0.0
    worst = (-1, -1)
    for flat in sorted(int(i) for i in picks):
        pi = int(np.searchsorted(bounds, flat, side="right"))
        local = flat - (bounds[pi - 1] if pi > 0 else 0)
        p = params[pi]
        orig = p.flat[local]
        p.flat[local] = orig + step
        lo_hi = loss_fn()
        p.flat[local] = orig - step
        lo_lo = loss_fn()
        p.flat[local] = orig
        numeric = (lo_hi - lo_lo) / (2.0 * step)
        exact = float(analytic[pi].flat[local])
        scale = max(abs(exact), abs(numeric))
        if scale < 1e-10:
            rel = abs(exact - numeric)
        else:
            rel = abs(exact - numeric) / scale
        if rel > max_rel:
            max_rel = rel
            worst = (pi, int(local))
    return GradCheckReport(max_rel_error=max_rel, tolerance=tolerance, checked=count, worst=worst)
