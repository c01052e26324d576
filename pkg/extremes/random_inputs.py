"""
Skew-normal random inputs that keep the moments of a reference series.

Temporal inputs match each valid cell's mean and std along time; spatial
inputs match each day's mean and std over the valid cells. Values are
clipped at 0 when turned into a series.
"""
import numpy as np

from extremes.skew_normal import SPATIAL, TEMPORAL, SkewNoiseConfig, rescale_to_moments, skew_normal_sample
from griddata.types import FieldSeries
from utils.logger import logger


def temporal_random_values(ref: FieldSeries, cfg: SkewNoiseConfig) -> np.ndarray:
    """
    Pre-clip temporal random values.

    Returns:
        (T, n_valid) matrix; column c has the mean and std of the reference cell c
    """
    values = ref.valid_values()
    rng = np.random.default_rng(cfg.seed)
    draws = skew_normal_sample(cfg.shape, rng, size=values.shape)
    return rescale_to_moments(draws, values.mean(axis=0), values.std(axis=0), axis=0)


def spatial_random_values(ref: FieldSeries, cfg: SkewNoiseConfig) -> np.ndarray:
    """
    Pre-clip spatial random values.

    Returns:
        (T, n_valid) matrix; row t has the spatial mean and std of reference day t
    """
    values = ref.valid_values()
    rng = np.random.default_rng(cfg.seed)
    draws = np.empty_like(values)
    for t in range(values.shape[0]):
        draws[t] = skew_normal_sample(cfg.shape, rng, size=values.shape[1])
    return rescale_to_moments(draws, values.mean(axis=1), values.std(axis=1), axis=1)


def _to_series(ref: FieldSeries, columns: np.ndarray) -> FieldSeries:
    data = np.zeros(ref.data.shape)
    data[:, ref.mask] = columns
    clipped = float(np.mean(columns < 0)) if columns.size else 0.0
    logger.debug(f"Clipping {clipped:.1%} negative random values at 0")
    return ref.with_data(data)


def temporal_random_series(ref: FieldSeries, cfg: SkewNoiseConfig) -> FieldSeries:
    """Per-cell skew-normal series rescaled to the cell's moments, clipped at 0"""
    return _to_series(ref, temporal_random_values(ref, cfg))


def spatial_random_series(ref: FieldSeries, cfg: SkewNoiseConfig) -> FieldSeries:
    """Per-day skew-normal fields rescaled to the day's spatial moments, clipped at 0"""
    return _to_series(ref, spatial_random_values(ref, cfg))


def random_series(ref: FieldSeries, cfg: SkewNoiseConfig) -> FieldSeries:
    if cfg.mode == TEMPORAL:
        return temporal_random_series(ref, cfg)
    if cfg.mode == SPATIAL:
        return spatial_random_series(ref, cfg)
    raise ValueError(f"unknown random-input mode '{cfg.mode}'")
