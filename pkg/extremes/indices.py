"""
ETCCDI-style precipitation extremes, averaged over years.

CDD: longest run of days with rain < 1 mm. R20mm: days with rain > 20 mm.
Rx1day: largest daily amount.
"""
from dataclasses import dataclass
from typing import Dict

import numpy as np

from griddata.types import FieldSeries, GridSpec
from utils.exceptions import ShapeError

DRY_THRESHOLD = 1.0
HEAVY_THRESHOLD = 20.0


@dataclass(frozen=True)
class ExtremeIndices:
    """Interannual-mean index maps, NaN outside the mask"""
    spec: GridSpec
    mask: np.ndarray
    cdd_map: np.ndarray
    r20_map: np.ndarray
    rx1day_map: np.ndarray
    n_years: int

    def maps(self) -> Dict[str, np.ndarray]:
        return {"cdd": self.cdd_map, "r20mm": self.r20_map, "rx1day": self.rx1day_map}

    def spatial_means(self) -> Dict[str, float]:
        return {name: float(values[self.mask].mean()) for name, values in self.maps().items()}


def longest_run(flags: np.ndarray) -> np.ndarray:
    """
    Longest run of True along axis 0.

    Args:
        flags: (T, ...) boolean array

    Returns:
        Run lengths with the trailing shape of flags
    """
    flags = np.asarray(flags, dtype=bool)
    current = np.zeros(flags.shape[1:], dtype=np.int64)
    best = np.zeros(flags.shape[1:], dtype=np.int64)
    for day in flags:
        current = np.where(day, current + 1, 0)
        np.maximum(best, current, out=best)
    return best


def yearly_indices(values: np.ndarray, dry_threshold: float = DRY_THRESHOLD,
                   heavy_threshold: float = HEAVY_THRESHOLD):
    """(cdd, r20, rx1day) of one year's (T, ...) block"""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] == 0:
        raise ShapeError("cannot compute indices of an empty year")
    return (
        longest_run(values < dry_threshold),
        np.sum(values > heavy_threshold, axis=0),
        values.max(axis=0),
    )


def extreme_indices(series: FieldSeries, dry_threshold: float = DRY_THRESHOLD,
                    heavy_threshold: float = HEAVY_THRESHOLD) -> ExtremeIndices:
    """
    CDD, R20mm and Rx1day per valid cell, computed per year and averaged.

    Args:
        series: Daily series; the year of each day comes from its stamp
        dry_threshold: Dry day when value < this (mm)
        heavy_threshold: Heavy day when value > this (mm)

    Returns:
        ExtremeIndices
    """
    if series.n_days == 0:
        raise ShapeError("cannot compute indices of an empty series")
    values = series.valid_values()
    years = np.unique(series.years)
    cdd = np.zeros(values.shape[1])
    r20 = np.zeros(values.shape[1])
    rx1 = np.zeros(values.shape[1])
    for year in years:
        y_cdd, y_r20, y_rx1 = yearly_indices(values[series.years == year], dry_threshold, heavy_threshold)
        cdd += y_cdd
        r20 += y_r20
        rx1 += y_rx1

    def to_map(column: np.ndarray) -> np.ndarray:
        out = np.full(series.spec.shape, np.nan)
        out[series.mask] = column / len(years)
        return out

    return ExtremeIndices(
        spec=series.spec,
        mask=np.array(series.mask),
        cdd_map=to_map(cdd),
        r20_map=to_map(r20),
        rx1day_map=to_map(rx1),
        n_years=len(years),
    )
