import numpy as np

from griddata.types import FieldSeries, GridField
from utils.exceptions import ShapeError


def climatology(series: FieldSeries) -> GridField:
    """Per-cell temporal mean; masked cells stay 0"""
    if series.n_days == 0:
        raise ShapeError("climatology of an empty series")
    return GridField.sanitized(series.spec, series.as_float64().mean(axis=0), series.mask)


def daily_spatial_mean(series: FieldSeries) -> np.ndarray:
    """(T,) mean over valid cells of each day"""
    if not series.mask.any():
        raise ShapeError("series has no valid cells")
    return series.valid_values().mean(axis=1)
