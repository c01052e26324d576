"""
Max-Average Units (encoder) and Upsampler Units (decoder).

MAU:  F = dropout(relu(conv_b(relu(conv_a(x)))))
      d_skip = F, m_skip = maxpool2(F), f_out = average_pair(maxpool2(F), avgpool2(F))
USU:  y = relu(conv_b(relu(conv_a(dropout(concat([upsample_nearest2(z0), z1, ...]))))))
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from autodiff import functional as fn
from autodiff.layers import ConvLayer
from autodiff.tensor import DropoutSpec, ParamStore, Tensor4
from utils.exceptions import ShapeError


@dataclass
class MauCache:
    x: Tensor4
    a_pre: Tensor4
    a: Tensor4
    b_pre: Tensor4
    kept: np.ndarray
    argmax: np.ndarray
    spec: DropoutSpec


@dataclass
class MauOutput:
    f_out: Tensor4
    d_skip: Tensor4
    m_skip: Tensor4


class MauUnit:
    def __init__(self, store: ParamStore, name: str, in_channels: int, width: int,
                 dropout_rate: float, rng: np.random.Generator):
        self.name = name
        self.width = width
        self.conv_a = ConvLayer.create(store, f"{name}.conv_a", in_channels, width, rng)
        self.conv_b = ConvLayer.create(store, f"{name}.conv_b", width, width, rng)
        self.dropout = DropoutSpec(dropout_rate)

    @property
    def layers(self) -> List[ConvLayer]:
        return [self.conv_a, self.conv_b]

    def forward(self, x: Tensor4, mode: str, rng: Optional[np.random.Generator]):
        """
        Run the unit.

        Args:
            x: (n, in, h, w) input, h and w even
            mode: "train" or "eval"
            rng: Dropout stream (unused in eval mode)

        Returns:
            (MauOutput, MauCache)
        """
        h, w = x.dims[2:]
        if h % 2 or w % 2:
            raise ShapeError(f"{self.name}: MAU input needs even spatial dims, got {h}x{w}")
        spec = self.dropout.with_mode(mode)
        a_pre = self.conv_a.forward(x)
        a = fn.relu(a_pre)
        b_pre = self.conv_b.forward(a)
        features, kept = fn.dropout(fn.relu(b_pre), spec, rng)
        pooled_max, argmax = fn.maxpool2(features)
        pooled_avg = fn.avgpool2(features)
        out = MauOutput(
            f_out=fn.average_pair(pooled_max, pooled_avg),
            d_skip=features,
            m_skip=pooled_max,
        )
        return out, MauCache(x=x, a_pre=a_pre, a=a, b_pre=b_pre, kept=kept, argmax=argmax, spec=spec)

    def backward(self, cache: MauCache, d_f_out: np.ndarray,
                 d_skip: Optional[np.ndarray] = None, d_m_skip: Optional[np.ndarray] = None) -> np.ndarray:
        """Accumulate parameter gradients; unused outputs take None. Returns dx."""
        d_max, d_avg = fn.average_pair_backward(d_f_out)
        if d_m_skip is not None:
            d_max = d_max + d_m_skip
        d_features = fn.maxpool2_backward(cache.argmax, d_max) + fn.avgpool2_backward(d_avg)
        if d_skip is not None:
            d_features = d_features + d_skip
        d_b = fn.relu_backward(cache.b_pre, fn.dropout_backward(cache.kept, cache.spec, d_features))
        d_a = fn.relu_backward(cache.a_pre, self.conv_b.backward(cache.a, d_b))
        return self.conv_a.backward(cache.x, d_a)

    def flops(self, h: int, w: int) -> int:
        """FLOPs at an h x w input"""
        pooled = self.width * (h // 2) * (w // 2)
        return (
            self.conv_a.flops(h, w) + self.conv_b.flops(h, w)
            + 2 * self.width * h * w   # relu
            + 3 * pooled               # max, avg, average
        )


@dataclass
class UsuCache:
    sizes: List[int]
    z: Tensor4
    kept: np.ndarray
    spec: DropoutSpec
    dropped: Tensor4
    a_pre: Tensor4
    a: Tensor4
    b_pre: Tensor4


class UsuUnit:
    def __init__(self, store: ParamStore, name: str, in_channels: int, width: int,
                 dropout_rate: float, rng: np.random.Generator):
        self.name = name
        self.width = width
        self.conv_a = ConvLayer.create(store, f"{name}.conv_a", in_channels, width, rng)
        self.conv_b = ConvLayer.create(store, f"{name}.conv_b", width, width, rng)
        self.dropout = DropoutSpec(dropout_rate)

    @property
    def layers(self) -> List[ConvLayer]:
        return [self.conv_a, self.conv_b]

    def forward(self, inputs: Sequence[Tensor4], mode: str, rng: Optional[np.random.Generator]):
        """
        Run the unit.

        Args:
            inputs: Low-resolution stream first, then skips at twice its resolution
            mode: "train" or "eval"
            rng: Dropout stream (unused in eval mode)

        Returns:
            (y, UsuCache)
        """
        upsampled = fn.upsample_nearest2(inputs[0])
        parts = [upsampled] + list(inputs[1:])
        for part in parts[1:]:
            if part.dims[2:] != upsampled.dims[2:]:
                raise ShapeError(
                    f"{self.name}: skip at {part.dims[2:]} does not match upsampled stream at {upsampled.dims[2:]}"
                )
        z = fn.concat_channels(parts)
        if z.dims[1] != self.conv_a.in_channels:
            raise ShapeError(f"{self.name}: got {z.dims[1]} channels, expected {self.conv_a.in_channels}")
        spec = self.dropout.with_mode(mode)
        dropped, kept = fn.dropout(z, spec, rng)
        a_pre = self.conv_a.forward(dropped)
        a = fn.relu(a_pre)
        b_pre = self.conv_b.forward(a)
        cache = UsuCache(
            sizes=[p.dims[1] for p in parts], z=z, kept=kept, spec=spec,
            dropped=dropped, a_pre=a_pre, a=a, b_pre=b_pre,
        )
        return fn.relu(b_pre), cache

    def backward(self, cache: UsuCache, upstream: np.ndarray) -> List[np.ndarray]:
        """Accumulate parameter gradients; returns one gradient per input, in input order"""
        d_b = fn.relu_backward(cache.b_pre, upstream)
        d_a = fn.relu_backward(cache.a_pre, self.conv_b.backward(cache.a, d_b))
        d_dropped = self.conv_a.backward(cache.dropped, d_a)
        d_z = fn.dropout_backward(cache.kept, cache.spec, d_dropped)
        grads = fn.split_channels(d_z, cache.sizes)
        grads[0] = fn.upsample_nearest2_backward(grads[0])
        return grads

    def flops(self, h: int, w: int, low_channels: int) -> int:
        """FLOPs at an h x w output; low_channels is the width of the upsampled stream"""
        return (
            low_channels * h * w       # upsample
            + self.conv_a.flops(h, w) + self.conv_b.flops(h, w)
            + 2 * self.width * h * w   # relu
        )
