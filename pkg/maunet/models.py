"""
MAUNet and MAUNet-Light.

Both networks are pre-upsampled: the input already lives on the target grid
and the output has the input's spatial dims.

MAUNet:
    P = drop0(relu(conv0(X)))
    (f1, D1, M1) = mau1(P);  (f2, D2, _) = mau2(f1)
    Q = relu(conv_q(f2))
    U1 = usu1(Q, D2, M1);  U2 = usu2(U1, D1, X)
    Y = conv_out(U2)

MAUNet-Light:
    P = drop0(relu(conv0(X*)))
    (f1, D1, _) = mau1(P)
    Q = relu(conv_q(f1))
    U = usu1(Q, D1, X*)
    Y* = conv_out(U)
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from autodiff import functional as fn
from autodiff.layers import ConvLayer
from autodiff.tensor import EVAL, TRAIN, DropoutSpec, ParamStore, Tensor4, as_array
from maunet.units import MauUnit, UsuUnit
from utils.exceptions import ShapeError

MAUNET = "maunet"
MAUNET_LIGHT = "maunet_light"

STEM_WIDTH = 64
STEM_DROPOUT = 0.30
MAU_DROPOUT = 0.20
USU_DROPOUT = 0.10


@dataclass
class Trace:
    """Named intermediate tensors of one forward pass plus the caches backward needs"""
    tensors: Dict[str, Tensor4] = field(default_factory=dict)
    caches: Dict[str, Any] = field(default_factory=dict)


def _check_input(x: Tensor4, multiple: int) -> None:
    n, c, h, w = x.dims
    if c != 1:
        raise ShapeError(f"expected a single input channel, got {c}")
    if h % multiple or w % multiple:
        raise ShapeError(f"spatial dims {h}x{w} must be divisible by {multiple}")


def _check_mode(mode: str, rng: Optional[np.random.Generator]) -> None:
    if mode not in (TRAIN, EVAL):
        raise ValueError(f"mode must be '{TRAIN}' or '{EVAL}', got '{mode}'")
    if mode == TRAIN and rng is None:
        raise ValueError("train mode needs a random stream for dropout")


class Network:
    """Shared stem, parameter bookkeeping and the forward/backward contract"""
    architecture: str = ""
    multiple: int = 1

    def __init__(self, seed: int = 0):
        self.store = ParamStore()
        self.seed = seed

    def _stem(self, rng: np.random.Generator) -> None:
        self.conv0 = ConvLayer.create(self.store, "conv0", 1, STEM_WIDTH, rng)
        self.drop0 = DropoutSpec(STEM_DROPOUT)

    def _stem_forward(self, x: Tensor4, mode: str, rng, trace: Trace) -> Tensor4:
        p_pre = self.conv0.forward(x)
        p, kept = fn.dropout(fn.relu(p_pre), self.drop0.with_mode(mode), rng)
        trace.caches["stem"] = (x, p_pre, kept, self.drop0.with_mode(mode))
        return p

    def _stem_backward(self, trace: Trace, d_p: np.ndarray) -> np.ndarray:
        x, p_pre, kept, spec = trace.caches["stem"]
        d_pre = fn.relu_backward(p_pre, fn.dropout_backward(kept, spec, d_p))
        return self.conv0.backward(x, d_pre)

    @property
    def conv_layers(self) -> List[ConvLayer]:
        raise NotImplementedError

    @property
    def parameter_count(self) -> int:
        return sum(layer.parameter_count for layer in self.conv_layers)

    def forward(self, x, mode: str = EVAL, rng: Optional[np.random.Generator] = None) -> Tuple[Tensor4, Trace]:
        raise NotImplementedError

    def backward(self, trace: Trace, d_y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def flops(self, h: int, w: int) -> int:
        raise NotImplementedError

    def __call__(self, x, mode: str = EVAL, rng: Optional[np.random.Generator] = None) -> Tensor4:
        y, _ = self.forward(x, mode, rng)
        return y


class MaunetModel(Network):
    """Full encoder-decoder: two MAUs (32, 16 channels) and two USUs (32, 16 channels)"""
    architecture = MAUNET
    multiple = 4

    def __init__(self, seed: int = 0):
        super().__init__(seed)
        rng = np.random.default_rng(seed)
        self._stem(rng)
        self.mau1 = MauUnit(self.store, "mau1", STEM_WIDTH, 32, MAU_DROPOUT, rng)
        self.mau2 = MauUnit(self.store, "mau2", 32, 16, MAU_DROPOUT, rng)
        self.conv_q = ConvLayer.create(self.store, "conv_q", 16, 16, rng)
        # Z1 = (Q, D2, M1): 16 + 16 + 32
        self.usu1 = UsuUnit(self.store, "usu1", 16 + 16 + 32, 32, USU_DROPOUT, rng)
        # Z2 = (U1, D1, X): 32 + 32 + 1
        self.usu2 = UsuUnit(self.store, "usu2", 32 + 32 + 1, 16, USU_DROPOUT, rng)
        self.conv_out = ConvLayer.create(self.store, "conv_out", 16, 1, rng)

    @property
    def conv_layers(self) -> List[ConvLayer]:
        return [self.conv0, *self.mau1.layers, *self.mau2.layers, self.conv_q,
                *self.usu1.layers, *self.usu2.layers, self.conv_out]

    def forward(self, x, mode: str = EVAL, rng: Optional[np.random.Generator] = None) -> Tuple[Tensor4, Trace]:
        """
        Forward pass.

        Args:
            x: (n, 1, h, w) input with h, w divisible by 4
            mode: "train" or "eval"
            rng: Dropout stream, required in train mode

        Returns:
            (Y, Trace)
        """
        x = x if isinstance(x, Tensor4) else Tensor4(x)
        _check_input(x, self.multiple)
        _check_mode(mode, rng)
        trace = Trace()
        trace.tensors["X"] = x
        p = self._stem_forward(x, mode, rng, trace)
        mau1, trace.caches["mau1"] = self.mau1.forward(p, mode, rng)
        mau2, trace.caches["mau2"] = self.mau2.forward(mau1.f_out, mode, rng)
        q_pre = self.conv_q.forward(mau2.f_out)
        q = fn.relu(q_pre)
        u1, trace.caches["usu1"] = self.usu1.forward([q, mau2.d_skip, mau1.m_skip], mode, rng)
        u2, trace.caches["usu2"] = self.usu2.forward([u1, mau1.d_skip, x], mode, rng)
        y = self.conv_out.forward(u2)
        trace.caches["q_pre"] = q_pre
        trace.tensors.update({
            "P": p, "D1": mau1.d_skip, "M1": mau1.m_skip, "f1": mau1.f_out,
            "f2": mau2.f_out, "D2": mau2.d_skip, "Q": q, "U1": u1, "U2": u2, "Y": y,
        })
        return y, trace

    def backward(self, trace: Trace, d_y: np.ndarray) -> np.ndarray:
        """Accumulate gradients of every parameter; returns dL/dX"""
        t = trace.tensors
        d_u2 = self.conv_out.backward(t["U2"], d_y)
        d_u1, d_d1, d_x_skip = self.usu2.backward(trace.caches["usu2"], d_u2)
        d_q, d_d2, d_m1 = self.usu1.backward(trace.caches["usu1"], d_u1)
        d_f2 = self.conv_q.backward(t["f2"], fn.relu_backward(trace.caches["q_pre"], d_q))
        d_f1 = self.mau2.backward(trace.caches["mau2"], d_f2, d_skip=d_d2)
        d_p = self.mau1.backward(trace.caches["mau1"], d_f1, d_skip=d_d1, d_m_skip=d_m1)
        return self._stem_backward(trace, d_p) + d_x_skip

    def flops(self, h: int, w: int) -> int:
        return (
            self.conv0.flops(h, w) + STEM_WIDTH * h * w
            + self.mau1.flops(h, w)
            + self.mau2.flops(h // 2, w // 2)
            + self.conv_q.flops(h // 4, w // 4) + 16 * (h // 4) * (w // 4)
            + self.usu1.flops(h // 2, w // 2, low_channels=16)
            + self.usu2.flops(h, w, low_channels=32)
            + self.conv_out.flops(h, w)
        )


class MaunetLightModel(Network):
    """Student network: one MAU (32 channels), one USU (16 channels) and the long X* skip"""
    architecture = MAUNET_LIGHT
    multiple = 2

    def __init__(self, seed: int = 0):
        super().__init__(seed)
        rng = np.random.default_rng(seed)
        self._stem(rng)
        self.mau1 = MauUnit(self.store, "mau1", STEM_WIDTH, 32, MAU_DROPOUT, rng)
        self.conv_q = ConvLayer.create(self.store, "conv_q", 32, 16, rng)
        # (Q, D1, X*): 16 + 32 + 1
        self.usu1 = UsuUnit(self.store, "usu1", 16 + 32 + 1, 16, USU_DROPOUT, rng)
        self.conv_out = ConvLayer.create(self.store, "conv_out", 16, 1, rng)

    @property
    def conv_layers(self) -> List[ConvLayer]:
        return [self.conv0, *self.mau1.layers, self.conv_q, *self.usu1.layers, self.conv_out]

    def forward(self, x, mode: str = EVAL, rng: Optional[np.random.Generator] = None) -> Tuple[Tensor4, Trace]:
        x = x if isinstance(x, Tensor4) else Tensor4(x)
        _check_input(x, self.multiple)
        _check_mode(mode, rng)
        trace = Trace()
        trace.tensors["X*"] = x
        p = self._stem_forward(x, mode, rng, trace)
        mau1, trace.caches["mau1"] = self.mau1.forward(p, mode, rng)
        q_pre = self.conv_q.forward(mau1.f_out)
        q = fn.relu(q_pre)
        u, trace.caches["usu1"] = self.usu1.forward([q, mau1.d_skip, x], mode, rng)
        y = self.conv_out.forward(u)
        trace.caches["q_pre"] = q_pre
        trace.tensors.update({"P": p, "D1": mau1.d_skip, "f1": mau1.f_out, "Q": q, "U": u, "Y*": y})
        return y, trace

    def backward(self, trace: Trace, d_y: np.ndarray) -> np.ndarray:
        t = trace.tensors
        d_u = self.conv_out.backward(t["U"], d_y)
        d_q, d_d1, d_x_skip = self.usu1.backward(trace.caches["usu1"], d_u)
        d_f1 = self.conv_q.backward(t["f1"], fn.relu_backward(trace.caches["q_pre"], d_q))
        d_p = self.mau1.backward(trace.caches["mau1"], d_f1, d_skip=d_d1)
        return self._stem_backward(trace, d_p) + d_x_skip

    def flops(self, h: int, w: int) -> int:
        return (
            self.conv0.flops(h, w) + STEM_WIDTH * h * w
            + self.mau1.flops(h, w)
            + self.conv_q.flops(h // 2, w // 2) + 16 * (h // 2) * (w // 2)
            + self.usu1.flops(h, w, low_channels=16)
            + self.conv_out.flops(h, w)
        )


ARCHITECTURES = {MAUNET: MaunetModel, MAUNET_LIGHT: MaunetLightModel}


def build_model(architecture: str, seed: int = 0) -> Network:
    """Fresh, seeded network of the named architecture ("maunet" or "maunet_light")"""
    try:
        return ARCHITECTURES[architecture](seed=seed)
    except KeyError:
        raise ValueError(f"unknown architecture '{architecture}', expected one of {sorted(ARCHITECTURES)}")


def architecture_from_names(names) -> str:
    """Infer the architecture from checkpoint tensor names"""
    names = set(names)
    for architecture, cls in ARCHITECTURES.items():
        if set(cls(seed=0).store.names()) == names:
            return architecture
    raise ShapeError("checkpoint tensors match neither MAUNet nor MAUNet-Light")


def maunet_forward(model: MaunetModel, x, mode: str = EVAL, rng: Optional[np.random.Generator] = None) -> Tensor4:
    return model(x, mode, rng)


def maunet_light_forward(model: MaunetLightModel, x, mode: str = EVAL,
                         rng: Optional[np.random.Generator] = None) -> Tensor4:
    return model(x, mode, rng)


def forward_trace(model: Network, x, mode: str = EVAL,
                  rng: Optional[np.random.Generator] = None) -> Dict[str, Tensor4]:
    """Every named intermediate tensor (X, P, D1, ..., Y) of one forward pass"""
    _, trace = model.forward(x, mode, rng)
    return dict(trace.tensors)


def predict_array(model: Network, x: np.ndarray, batch_size: int = 16) -> np.ndarray:
    """
    Eval-mode forward over a (T, h, w) stack, batch by batch.

    Returns:
        (T, h, w) float64 raw network output (unclipped)
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for start in range(0, x.shape[0], batch_size):
        chunk = x[start:start + batch_size, None, :, :]
        out[start:start + batch_size] = as_array(model(chunk, EVAL))[:, 0]
    return out
