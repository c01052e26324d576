"""
Field resampling: align-corners bilinear and Catmull-Rom bicubic
interpolation, and block-mean downsampling.

Interpolation works one axis at a time on arrays of any leading shape, so a
whole (T, H, W) series is resampled in one call. Both kernels are evaluated
as "center value plus weighted differences", which reproduces constant
fields exactly.
"""
from typing import Tuple

import numpy as np

from griddata.types import FieldSeries, GridField, GridSpec
from utils.exceptions import ShapeError

CATMULL_ROM_A = -0.5


def _source_coords(n_in: int, n_out: int) -> np.ndarray:
    if n_in == 1 and n_out > 1:
        raise ShapeError(f"cannot interpolate a single cell onto {n_out} cells")
    if n_out == 1:
        return np.zeros(1)
    # corner cell centers map onto corner cell centers
    return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)


def _split(coords: np.ndarray, n_in: int) -> Tuple[np.ndarray, np.ndarray]:
    base = np.minimum(np.floor(coords).astype(np.int64), n_in - 1)
    frac = coords - base
    frac[base == n_in - 1] = 0.0
    return base, frac


def _linear_axis(values: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    n_in = values.shape[axis]
    base, frac = _split(_source_coords(n_in, n_out), n_in)
    nxt = np.minimum(base + 1, n_in - 1)
    a = np.take(values, base, axis=axis)
    b = np.take(values, nxt, axis=axis)
    shape = [1] * values.ndim
    shape[axis] = n_out
    return a + frac.reshape(shape) * (b - a)


def catmull_rom_weights(t: np.ndarray, a: float = CATMULL_ROM_A) -> np.ndarray:
    """
    Keys cubic convolution weights for the four taps around a sample.

    Args:
        t: Fractional offsets in [0, 1) from the left center tap
        a: Kernel parameter (-0.5 is Catmull-Rom)

    Returns:
        (len(t), 4) weights for taps at offsets -1, 0, +1, +2
    """
    t = np.asarray(t, dtype=np.float64)

    def near(x):
        return (a + 2) * x ** 3 - (a + 3) * x ** 2 + 1

    def far(x):
        return a * x ** 3 - 5 * a * x ** 2 + 8 * a * x - 4 * a

    return np.stack([far(1 + t), near(t), near(1 - t), far(2 - t)], axis=-1)


def _cubic_axis(values: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    n_in = values.shape[axis]
    base, frac = _split(_source_coords(n_in, n_out), n_in)
    weights = catmull_rom_weights(frac)
    shape = [1] * values.ndim
    shape[axis] = n_out
    center = np.take(values, base, axis=axis)
    out = center.copy()
    for k, offset in enumerate((-1, 0, 1, 2)):
        if offset == 0:
            continue
        # edge clamping
        tap = np.take(values, np.clip(base + offset, 0, n_in - 1), axis=axis)
        out += weights[:, k].reshape(shape) * (tap - center)
    return out


def _nearest_mask(mask: np.ndarray, out_spec: GridSpec) -> np.ndarray:
    rows = np.clip(np.floor(_source_coords(mask.shape[0], out_spec.n_lat) + 0.5).astype(np.int64), 0, mask.shape[0] - 1)
    cols = np.clip(np.floor(_source_coords(mask.shape[1], out_spec.n_lon) + 0.5).astype(np.int64), 0, mask.shape[1] - 1)
    return mask[np.ix_(rows, cols)]


def _resample_array(values: np.ndarray, out_spec: GridSpec, method: str) -> np.ndarray:
    if method == "bilinear":
        axis_fn = _linear_axis
    elif method == "bicubic":
        axis_fn = _cubic_axis
    else:
        raise ValueError(f"unknown resampling method '{method}'")
    values = np.asarray(values, dtype=np.float64)
    out = axis_fn(values, out_spec.n_lat, axis=values.ndim - 2)
    out = axis_fn(out, out_spec.n_lon, axis=values.ndim - 1)
    # rainfall cannot be negative; cubic overshoot is clipped
    return np.maximum(out, 0.0)


def bilinear_resample(field: GridField, out_spec: GridSpec) -> GridField:
    """
    Bilinear interpolation onto out_spec (align-corners).

    Args:
        field: Input field
        out_spec: Target grid

    Returns:
        Interpolated field; mask resampled by nearest neighbour, zeros applied
    """
    mask = _nearest_mask(field.mask, out_spec)
    return GridField.sanitized(out_spec, _resample_array(field.values, out_spec, "bilinear"), mask)


def bicubic_resample(field: GridField, out_spec: GridSpec) -> GridField:
    """Catmull-Rom (a = -0.5) interpolation onto out_spec, edge-clamped, overshoot clipped at 0"""
    mask = _nearest_mask(field.mask, out_spec)
    return GridField.sanitized(out_spec, _resample_array(field.values, out_spec, "bicubic"), mask)


def block_mean_downsample(field: GridField, factor: int) -> GridField:
    """
    Mean over non-overlapping factor x factor blocks.

    A block containing any valid cell is valid in the output.

    Args:
        field: Input field
        factor: Block edge length

    Returns:
        Coarse field on spec.coarsen(factor)
    """
    out_spec = field.spec.coarsen(factor)
    values, mask = _block_mean(field.values, field.mask, factor)
    return GridField.sanitized(out_spec, values, mask)


def _block_mean(values: np.ndarray, mask: np.ndarray, factor: int) -> Tuple[np.ndarray, np.ndarray]:
    if factor < 1:
        raise ShapeError(f"factor must be positive, got {factor}")
    h, w = mask.shape
    if h % factor or w % factor:
        raise ShapeError(f"grid {h}x{w} is not divisible by factor {factor}")
    lead = values.shape[:-2]
    blocks = np.asarray(values, dtype=np.float64).reshape(*lead, h // factor, factor, w // factor, factor)
    coarse_mask = mask.reshape(h // factor, factor, w // factor, factor).any(axis=(1, 3))
    return blocks.mean(axis=(-3, -1)), coarse_mask


def resample_series(series: FieldSeries, out_spec: GridSpec, method: str = "bilinear") -> FieldSeries:
    """
    Interpolate every day of a series onto out_spec.

    Args:
        series: Input series
        out_spec: Target grid
        method: "bilinear" or "bicubic"

    Returns:
        Resampled series with the same day stamps
    """
    mask = _nearest_mask(series.mask, out_spec)
    data = _resample_array(series.data, out_spec, method)
    return FieldSeries.sanitized(out_spec, mask, series.days, data)


def downsample_series(series: FieldSeries, factor: int) -> FieldSeries:
    """Block-mean downsample every day of a series"""
    out_spec = series.spec.coarsen(factor)
    data, mask = _block_mean(series.data, series.mask, factor)
    return FieldSeries.sanitized(out_spec, mask, series.days, data)
