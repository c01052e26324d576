import numpy as np

from autodiff.functional import KERNEL, conv2d_backward, conv2d_forward
from autodiff.tensor import ParamStore, Tensor4


def kaiming_uniform(out_channels: int, in_channels: int, rng: np.random.Generator) -> np.ndarray:
    """Fan-in Kaiming-uniform kernel, bound sqrt(6 / (9 * in_channels))"""
    fan_in = KERNEL * KERNEL * in_channels
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=(out_channels, in_channels, KERNEL, KERNEL))


class ConvLayer:
    """
    3x3 convolution whose kernel and bias live in a ParamStore.

    Kernel shape is (out, in, 3, 3); bias is stored as (1, out, 1, 1) so it
    broadcasts over the output directly.
    """

    def __init__(self, in_channels: int, out_channels: int, kernel: Tensor4, bias: Tensor4):
        if kernel.dims != (out_channels, in_channels, KERNEL, KERNEL):
            raise ValueError(f"kernel dims {kernel.dims} do not match {in_channels}->{out_channels}")
        if bias.dims != (1, out_channels, 1, 1):
            raise ValueError(f"bias dims {bias.dims} do not match {out_channels} channels")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.bias = bias

    @classmethod
    def create(cls, store: ParamStore, name: str, in_channels: int, out_channels: int,
               rng: np.random.Generator) -> "ConvLayer":
        """
        Build a layer and register "<name>.kernel" and "<name>.bias" in store.

        Args:
            store: Parameter store receiving the tensors
            name: Layer name prefix
            in_channels: Input channels
            out_channels: Output channels
            rng: Stream for the kernel initialization; bias starts at 0

        Returns:
            The layer
        """
        kernel = store.add(f"{name}.kernel", Tensor4(kaiming_uniform(out_channels, in_channels, rng)))
        bias = store.add(f"{name}.bias", Tensor4(np.zeros((1, out_channels, 1, 1))))
        return cls(in_channels, out_channels, kernel, bias)

    @property
    def parameter_count(self) -> int:
        return KERNEL * KERNEL * self.in_channels * self.out_channels + self.out_channels

    def flops(self, h: int, w: int) -> int:
        """Multiply + add count at an h x w output"""
        return 2 * KERNEL * KERNEL * self.in_channels * self.out_channels * h * w

    def forward(self, x) -> Tensor4:
        return conv2d_forward(x, self)

    def backward(self, x, upstream: np.ndarray) -> np.ndarray:
        """Accumulate kernel/bias gradients and return dx"""
        dx, dkernel, dbias = conv2d_backward(x, self, upstream)
        self.kernel.accumulate(dkernel)
        self.bias.accumulate(dbias)
        return dx
