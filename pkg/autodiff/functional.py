"""
Layer primitives with hand-written backward passes.

Forward functions take Tensor4 (or plain 4-D arrays) and return Tensor4;
backward functions take the upstream gradient as an array and return
array gradients. All arithmetic is float64.

The 3x3 convolution is evaluated as nine shifted matrix products over a
zero-padded input: each kernel tap (di, dj) contributes
K[:, :, di, dj] @ x_pad[:, :, di:di+h, dj:dj+w] contracted over channels.
This is the im2col product with the column matrix never materialized in
full.
"""
from typing import List, Sequence, Tuple

import numpy as np

from autodiff.tensor import EVAL, DropoutSpec, Tensor4, as_array
from utils.exceptions import ShapeError, TrainingError

KERNEL = 3
PAD = 1


def _taps():
    for di in range(KERNEL):
        for dj in range(KERNEL):
            yield di, dj


def conv2d_forward(x, layer) -> Tensor4:
    """
    3x3 convolution, stride 1, zero padding 1.

    Args:
        x: (n, in_channels, h, w) input
        layer: ConvLayer holding kernel (out, in, 3, 3) and bias (1, out, 1, 1)

    Returns:
        (n, out_channels, h, w) output
    """
    xv = as_array(x)
    kernel = layer.kernel.values
    if xv.ndim != 4 or xv.shape[1] != kernel.shape[1]:
        raise ShapeError(f"conv expects {kernel.shape[1]} input channels, got shape {xv.shape}")
    n, _, h, w = xv.shape
    padded = np.pad(xv, ((0, 0), (0, 0), (PAD, PAD), (PAD, PAD)))
    out = np.zeros((kernel.shape[0], n, h, w))
    for di, dj in _taps():
        out += np.tensordot(kernel[:, :, di, dj], padded[:, :, di:di + h, dj:dj + w], axes=([1], [1]))
    out = out.transpose(1, 0, 2, 3) + layer.bias.values
    return Tensor4(np.ascontiguousarray(out))


def conv2d_backward(x, layer, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gradients of conv2d_forward.

    Args:
        x: Input of the forward call
        layer: ConvLayer of the forward call
        upstream: dL/dy of shape (n, out_channels, h, w)

    Returns:
        (dx, dkernel, dbias) shaped like x, kernel (out, in, 3, 3) and bias (1, out, 1, 1)
    """
    xv = as_array(x)
    kernel = layer.kernel.values
    upstream = np.asarray(upstream, dtype=np.float64)
    n, c, h, w = xv.shape
    if upstream.shape != (n, kernel.shape[0], h, w):
        raise ShapeError(f"upstream shape {upstream.shape} does not match conv output {(n, kernel.shape[0], h, w)}")
    padded = np.pad(xv, ((0, 0), (0, 0), (PAD, PAD), (PAD, PAD)))
    dpadded = np.zeros_like(padded)
    dkernel = np.zeros_like(kernel)
    for di, dj in _taps():
        window = padded[:, :, di:di + h, dj:dj + w]
        dkernel[:, :, di, dj] = np.tensordot(upstream, window, axes=([0, 2, 3], [0, 2, 3]))
        # (in, n, h, w) contribution scattered back onto the shifted window
        dpadded[:, :, di:di + h, dj:dj + w] += np.tensordot(
            kernel[:, :, di, dj], upstream, axes=([0], [1])
        ).transpose(1, 0, 2, 3)
    dbias = upstream.sum(axis=(0, 2, 3)).reshape(1, -1, 1, 1)
    dx = dpadded[:, :, PAD:PAD + h, PAD:PAD + w]
    return np.ascontiguousarray(dx), dkernel, dbias


def _windows(xv: np.ndarray) -> np.ndarray:
    n, c, h, w = xv.shape
    if h % 2 or w % 2:
        raise ShapeError(f"2x2 pooling needs even spatial dims, got {h}x{w}")
    # (n, c, h/2, w/2, 4) with window entries in row-major order
    return xv.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)


def _unwindow(windows: np.ndarray) -> np.ndarray:
    n, c, hh, ww, _ = windows.shape
    return windows.reshape(n, c, hh, ww, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * hh, 2 * ww)


def maxpool2(x) -> Tuple[Tensor4, np.ndarray]:
    """
    2x2 max pooling, stride 2.

    Returns:
        (y, argmax) where argmax holds the row-major window position 0..3 of
        each maximum; ties resolve to the first position
    """
    windows = _windows(as_array(x))
    argmax = np.argmax(windows, axis=-1)
    y = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
    return Tensor4(y), argmax


def maxpool2_backward(argmax: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != argmax.shape:
        raise ShapeError(f"upstream shape {upstream.shape} does not match pooled shape {argmax.shape}")
    windows = np.zeros(argmax.shape + (4,))
    np.put_along_axis(windows, argmax[..., None], upstream[..., None], axis=-1)
    return _unwindow(windows)


def avgpool2(x) -> Tensor4:
    """2x2 mean pooling, stride 2"""
    return Tensor4(_windows(as_array(x)).mean(axis=-1))


def avgpool2_backward(upstream: np.ndarray) -> np.ndarray:
    upstream = np.asarray(upstream, dtype=np.float64)
    return np.repeat(np.repeat(upstream, 2, axis=2), 2, axis=3) * 0.25


def upsample_nearest2(x) -> Tensor4:
    """Duplicate every cell into a 2x2 block"""
    xv = as_array(x)
    return Tensor4(np.repeat(np.repeat(xv, 2, axis=2), 2, axis=3))


def upsample_nearest2_backward(upstream: np.ndarray) -> np.ndarray:
    upstream = np.asarray(upstream, dtype=np.float64)
    n, c, h, w = upstream.shape
    if h % 2 or w % 2:
        raise ShapeError(f"upsample gradient needs even spatial dims, got {h}x{w}")
    return upstream.reshape(n, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


def dropout(x, spec: DropoutSpec, rng: np.random.Generator) -> Tuple[Tensor4, np.ndarray]:
    """
    Inverted dropout.

    In train mode each entry is zeroed with probability spec.rate and kept
    entries are scaled by 1 / (1 - rate). Eval mode, or rate 0, is the
    identity and draws nothing from rng.

    Returns:
        (y, kept_mask)
    """
    xv = as_array(x)
    if spec.mode == EVAL or spec.rate == 0.0:
        return Tensor4(xv.copy()), np.ones(xv.shape, dtype=bool)
    kept = rng.random(xv.shape) >= spec.rate
    return Tensor4(np.where(kept, xv / (1.0 - spec.rate), 0.0)), kept


def dropout_backward(kept: np.ndarray, spec: DropoutSpec, upstream: np.ndarray) -> np.ndarray:
    upstream = np.asarray(upstream, dtype=np.float64)
    if spec.mode == EVAL or spec.rate == 0.0:
        return upstream.copy()
    return np.where(kept, upstream / (1.0 - spec.rate), 0.0)


def concat_channels(parts: Sequence) -> Tensor4:
    """Stack tensors with identical (n, h, w) along the channel axis"""
    arrays = [as_array(p) for p in parts]
    if not arrays:
        raise ShapeError("concat_channels needs at least one tensor")
    n, _, h, w = arrays[0].shape
    for a in arrays[1:]:
        if a.ndim != 4 or (a.shape[0], a.shape[2], a.shape[3]) != (n, h, w):
            raise ShapeError(f"cannot concatenate shapes {[x.shape for x in arrays]}")
    return Tensor4(np.concatenate(arrays, axis=1))


def split_channels(upstream: np.ndarray, sizes: Sequence[int]) -> List[np.ndarray]:
    """Backward of concat_channels: slice the gradient back into per-part channels"""
    upstream = np.asarray(upstream, dtype=np.float64)
    if sum(sizes) != upstream.shape[1]:
        raise ShapeError(f"channel sizes {list(sizes)} do not sum to {upstream.shape[1]}")
    edges = np.cumsum(sizes)[:-1]
    return [np.ascontiguousarray(part) for part in np.split(upstream, edges, axis=1)]


def average_pair(a, b) -> Tensor4:
    av, bv = as_array(a), as_array(b)
    if av.shape != bv.shape:
        raise ShapeError(f"average_pair shape mismatch {av.shape} vs {bv.shape}")
    return Tensor4(0.5 * (av + bv))


def average_pair_backward(upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    half = 0.5 * np.asarray(upstream, dtype=np.float64)
    return half, half.copy()


def relu(x) -> Tensor4:
    return Tensor4(np.maximum(as_array(x), 0.0))


def relu_backward(x, upstream: np.ndarray) -> np.ndarray:
    """Subgradient 0 at x == 0"""
    return np.where(as_array(x) > 0.0, np.asarray(upstream, dtype=np.float64), 0.0)


def mse_loss(pred, target, valid_mask) -> Tuple[float, np.ndarray]:
    """
    Mean squared error over valid cells only.

    Args:
        pred: (n, c, h, w) prediction
        target: Same shape as pred
        valid_mask: Boolean array broadcastable to pred, e.g. (h, w)

    Returns:
        (loss, dpred) with dpred = 2 (pred - target) / N_valid on valid cells, 0 elsewhere
    """
    pv, tv = as_array(pred), as_array(target)
    if pv.shape != tv.shape:
        raise ShapeError(f"pred shape {pv.shape} != target shape {tv.shape}")
    valid = np.broadcast_to(np.asarray(valid_mask, dtype=bool), pv.shape)
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise TrainingError("loss over an all-masked batch is undefined")
    diff = np.where(valid, pv - tv, 0.0)
    loss = float(np.sum(diff * diff) / n_valid)
    return loss, 2.0 * diff / n_valid
