import math
from typing import Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

TEMPORAL = "temporal"
SPATIAL = "spatial"


class SkewNoiseConfig(BaseModel):
    """Skew-normal random-input settings"""
    shape: float = Field(5.0, description="Skewness parameter a")
    mode: Literal["temporal", "spatial"] = TEMPORAL
    seed: int = 0

    @field_validator("shape")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("skew-normal shape must be finite")
        return value


def skew_delta(a: float) -> float:
    return a / math.sqrt(1.0 + a * a)


def skew_normal_sample(a: float, rng: np.random.Generator,
                       size: Optional[Union[int, Tuple[int, ...]]] = None):
    """
    Standard skew-normal draws: delta |U0| + sqrt(1 - delta^2) U1.

    Args:
        a: Shape parameter; 0 gives the standard normal
        rng: Random stream
        size: Output shape; a scalar is returned when None

    Returns:
        Scalar or array of draws
    """
    delta = skew_delta(a)
    u0 = rng.standard_normal(size)
    u1 = rng.standard_normal(size)
    return delta * np.abs(u0) + math.sqrt(1.0 - delta * delta) * u1


def skew_normal_moments(a: float) -> Tuple[float, float, float]:
    """(mean, variance, skewness) of the standard skew-normal with shape a"""
    delta = skew_delta(a)
    mean = delta * math.sqrt(2.0 / math.pi)
    variance = 1.0 - mean * mean
    skewness = (4.0 - math.pi) / 2.0 * mean ** 3 / variance ** 1.5
    return mean, variance, skewness


def rescale_to_moments(sample: np.ndarray, mean, std, axis: int = 0) -> np.ndarray:
    """
    Standardize a sample by its own moments along axis, then give it the
    target mean and std. Constant samples or zero target std give the
    target mean.
    """
    sample = np.asarray(sample, dtype=np.float64)
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    center = sample.mean(axis=axis, keepdims=True)
    spread = sample.std(axis=axis, keepdims=True)
    safe = np.where(spread > 0, spread, 1.0)
    standardized = np.where(spread > 0, (sample - center) / safe, 0.0)
    mean = np.expand_dims(mean, axis) if mean.ndim else mean
    std = np.expand_dims(std, axis) if std.ndim else std
    return mean + std * standardized
