from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from utils.exceptions import ShapeError

TRAIN = "train"
EVAL = "eval"


@dataclass
class Tensor4:
    """Dense (batch, channel, height, width) float64 array with an optional gradient buffer"""
    values: np.ndarray
    grad: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 4:
            raise ShapeError(f"Tensor4 needs 4 dims, got shape {self.values.shape}")
        if self.grad is not None:
            self.grad = np.asarray(self.grad, dtype=np.float64)
            if self.grad.shape != self.values.shape:
                raise ShapeError(f"grad shape {self.grad.shape} != values shape {self.values.shape}")

    @classmethod
    def zeros(cls, n: int, c: int, h: int, w: int) -> "Tensor4":
        return cls(np.zeros((n, c, h, w)))

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        return self.values.shape

    @property
    def size(self) -> int:
        return int(self.values.size)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.values)

    def accumulate(self, gradient: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += gradient


def as_array(x) -> np.ndarray:
    return x.values if isinstance(x, Tensor4) else np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class DropoutSpec:
    """Inverted dropout with rate in [0, 1); eval mode is the identity"""
    rate: float
    mode: str = TRAIN

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.rate}")
        if self.mode not in (TRAIN, EVAL):
            raise ValueError(f"dropout mode must be '{TRAIN}' or '{EVAL}', got '{self.mode}'")

    def with_mode(self, mode: str) -> "DropoutSpec":
        return DropoutSpec(rate=self.rate, mode=mode)


@dataclass
class ParamEntry:
    name: str
    tensor: Tensor4
    adam_m: np.ndarray = field(repr=False)
    adam_v: np.ndarray = field(repr=False)


class ParamStore:
    """Ordered, uniquely named learnable tensors with per-tensor Adam state"""

    def __init__(self):
        self._entries: "OrderedDict[str, ParamEntry]" = OrderedDict()

    def add(self, name: str, tensor: Tensor4) -> Tensor4:
        if name in self._entries:
            raise ValueError(f"duplicate parameter name '{name}'")
        self._entries[name] = ParamEntry(
            name=name,
            tensor=tensor,
            adam_m=np.zeros_like(tensor.values),
            adam_v=np.zeros_like(tensor.values),
        )
        return tensor

    def __getitem__(self, name: str) -> ParamEntry:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __iter__(self) -> Iterator[ParamEntry]:
        return iter(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> List[str]:
        return list(self._entries)

    def total_count(self) -> int:
        return sum(entry.tensor.size for entry in self)

    def zero_grad(self) -> None:
        for entry in self:
            entry.tensor.zero_grad()

    def grads(self) -> Dict[str, np.ndarray]:
        return {
            entry.name: entry.tensor.grad if entry.tensor.grad is not None else np.zeros_like(entry.tensor.values)
            for entry in self
        }

    def snapshot(self) -> "OrderedDict[str, np.ndarray]":
        """Copy of all parameter values, in store order"""
        return OrderedDict((entry.name, entry.tensor.values.copy()) for entry in self)

    def load(self, values: Dict[str, np.ndarray]) -> None:
        """
        Overwrite parameter values in place and reset optimizer state.

        Args:
            values: name -> array, must cover exactly this store's names and shapes
        """
        if set(values) != set(self._entries):
            missing = sorted(set(self._entries) - set(values))
            extra = sorted(set(values) - set(self._entries))
            raise ShapeError(f"parameter names differ: missing {missing}, unexpected {extra}")
        for entry in self:
            array = np.asarray(values[entry.name], dtype=np.float64)
            if array.shape != entry.tensor.values.shape:
                raise ShapeError(
                    f"parameter '{entry.name}' has shape {entry.tensor.values.shape}, got {array.shape}"
                )
            entry.tensor.values[...] = array
        self.reset_optimizer_state()

    def reset_optimizer_state(self) -> None:
        for entry in self:
            entry.adam_m = np.zeros_like(entry.tensor.values)
            entry.adam_v = np.zeros_like(entry.tensor.values)
