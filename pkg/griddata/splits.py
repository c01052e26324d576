from typing import Iterable, Tuple

import numpy as np

from griddata.types import FieldSeries, MONSOON_FIRST_DOY, MONSOON_LAST_DOY
from utils.exceptions import ShapeError


def season_subset(series: FieldSeries, first_doy: int = MONSOON_FIRST_DOY, last_doy: int = MONSOON_LAST_DOY) -> FieldSeries:
    """
    Keep the days whose day-of-year lies in [first_doy, last_doy].

    Args:
        series: Input series
        first_doy: First day-of-year kept (default 1 June)
        last_doy: Last day-of-year kept (default 30 September)

    Returns:
        The seasonal sub-series
    """
    doy = series.days[:, 1]
    return series.select((doy >= first_doy) & (doy <= last_doy))


def split_by_years(series: FieldSeries, years: Iterable[int]) -> FieldSeries:
    """Sub-series of the given years, e.g. a calibration or projection window"""
    keep = np.isin(series.years, list(years))
    return series.select(keep)


def split_at_index(series: FieldSeries, n_first: int) -> Tuple[FieldSeries, FieldSeries]:
    """Chronological split into the first n_first days and the rest"""
    if not 0 <= n_first <= series.n_days:
        raise ShapeError(f"cannot split {series.n_days} days at {n_first}")
    return series.select(slice(0, n_first)), series.select(slice(n_first, series.n_days))
