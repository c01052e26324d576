from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from utils.exceptions import GridInvariantError, ShapeError

# Indian summer monsoon window, inclusive day-of-year (1 June .. 30 September)
MONSOON_FIRST_DOY = 152
MONSOON_LAST_DOY = 273
MONSOON_LENGTH = MONSOON_LAST_DOY - MONSOON_FIRST_DOY + 1


def _as_f32(value: float) -> float:
    return float(np.float32(value))


class GridSpec(BaseModel):
    """Regular lat/lon grid geometry; coordinates of cell centers in degrees"""
    model_config = ConfigDict(frozen=True)

    n_lat: int = Field(..., ge=1, description="Number of rows")
    n_lon: int = Field(..., ge=1, description="Number of columns")
    lat0: float = Field(0.0, description="Latitude of row 0")
    lon0: float = Field(0.0, description="Longitude of column 0")
    d_lat: float = Field(0.25, gt=0, description="Row spacing")
    d_lon: float = Field(0.25, gt=0, description="Column spacing")

    # GFB1 stores geometry as f32; keep in-memory values on the same lattice
    @field_validator("lat0", "lon0", "d_lat", "d_lon")
    @classmethod
    def _float32_lattice(cls, value: float) -> float:
        if not np.isfinite(value):
            raise ValueError("grid coordinates must be finite")
        return _as_f32(value)

    @classmethod
    def study_grid(cls) -> "GridSpec":
        """0.25 degree, 128 x 128 grid over mainland India (6.75N..38.5N, 66.5E..98.25E)"""
        return cls(n_lat=128, n_lon=128, lat0=6.75, lon0=66.5, d_lat=0.25, d_lon=0.25)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_lat, self.n_lon)

    def lats(self) -> np.ndarray:
        return self.lat0 + self.d_lat * np.arange(self.n_lat, dtype=np.float64)

    def lons(self) -> np.ndarray:
        return self.lon0 + self.d_lon * np.arange(self.n_lon, dtype=np.float64)

    def coarsen(self, factor: int) -> "GridSpec":
        """Grid whose cells are factor x factor blocks of this grid"""
        if self.n_lat % factor or self.n_lon % factor:
            raise ShapeError(
                f"grid {self.n_lat}x{self.n_lon} is not divisible by factor {factor}"
            )
        return GridSpec(
            n_lat=self.n_lat // factor,
            n_lon=self.n_lon // factor,
            lat0=self.lat0 + 0.5 * (factor - 1) * self.d_lat,
            lon0=self.lon0 + 0.5 * (factor - 1) * self.d_lon,
            d_lat=self.d_lat * factor,
            d_lon=self.d_lon * factor,
        )

    def refine_to(self, n_lat: int, n_lon: int) -> "GridSpec":
        """Grid with the same corner cell centers and the given cell counts"""
        d_lat = self.d_lat * (self.n_lat - 1) / (n_lat - 1) if n_lat > 1 else self.d_lat
        d_lon = self.d_lon * (self.n_lon - 1) / (n_lon - 1) if n_lon > 1 else self.d_lon
        return GridSpec(n_lat=n_lat, n_lon=n_lon, lat0=self.lat0, lon0=self.lon0,
                        d_lat=d_lat, d_lon=d_lon)


def _first_violation(values: np.ndarray, mask: np.ndarray) -> Optional[Tuple[str, tuple]]:
    """Locate the first cell breaking the field invariants, or None"""
    outside = ~mask & (values != 0)
    if outside.any():
        return "masked-out cell holds a nonzero value", tuple(int(i) for i in np.argwhere(outside)[0])
    bad = mask & ~np.isfinite(values)
    if bad.any():
        return "valid cell is not finite", tuple(int(i) for i in np.argwhere(bad)[0])
    negative = mask & (values < 0)
    if negative.any():
        return "valid cell is negative", tuple(int(i) for i in np.argwhere(negative)[0])
    return None


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GridField:
    """One 2-D masked precipitation field in mm/day"""
    spec: GridSpec
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.shape != self.spec.shape or mask.shape != self.spec.shape:
            raise ShapeError(
                f"field arrays {values.shape}/{mask.shape} do not match grid {self.spec.shape}"
            )
        violation = _first_violation(values, mask)
        if violation:
            reason, cell = violation
            raise GridInvariantError(f"{reason} at (i, j) = {cell}: {values[cell]!r}")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))

    @classmethod
    def sanitized(cls, spec: GridSpec, values: np.ndarray, mask: np.ndarray) -> "GridField":
        """Clip negatives to 0 and zero masked-out cells before validating"""
        mask = np.asarray(mask, dtype=bool)
        values = np.where(mask, np.maximum(np.asarray(values, dtype=np.float64), 0.0), 0.0)
        return cls(spec=spec, values=values, mask=mask)

    @property
    def n_valid(self) -> int:
        return int(self.mask.sum())


def monsoon_days(n_days: int, start_year: int = 2000,
                 first_doy: int = MONSOON_FIRST_DOY,
                 season_length: int = MONSOON_LENGTH) -> np.ndarray:
    """
    Day stamps for consecutive monsoon seasons.

    Args:
        n_days: Number of stamps
        start_year: Year of the first season
        first_doy: Day-of-year the season starts
        season_length: Days per season

    Returns:
        (n_days, 2) integer array of (year, day-of-year)
    """
    index = np.arange(n_days)
    years = start_year + index // season_length
    doys = first_doy + index % season_length
    return np.stack([years, doys], axis=1).astype(np.int64)


@dataclass(frozen=True)
class FieldSeries:
    """
    Time-ordered stack of fields sharing one grid and mask.

    data is stored at f32 precision, the precision of the GFB1 format, so
    every series round-trips through a file bit-exactly. days is an
    (T, 2) array of (year, day-of-year) stamps, strictly increasing.
    """
    spec: GridSpec
    mask: np.ndarray
    days: np.ndarray
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        data = np.asarray(self.data, dtype=np.float32)
        days = np.asarray(self.days, dtype=np.int64).reshape(-1, 2)
        if mask.shape != self.spec.shape:
            raise ShapeError(f"mask shape {mask.shape} does not match grid {self.spec.shape}")
        if data.ndim != 3 or data.shape[1:] != self.spec.shape:
            raise ShapeError(f"data shape {data.shape} does not match (T, {self.spec.n_lat}, {self.spec.n_lon})")
        if days.shape[0] != data.shape[0]:
            raise ShapeError(f"{days.shape[0]} day stamps for {data.shape[0]} time slices")
        if days.shape[0] > 1:
            keys = days[:, 0] * 1000 + days[:, 1]
            if np.any(np.diff(keys) <= 0):
                t = int(np.argmax(np.diff(keys) <= 0)) + 1
                raise GridInvariantError(f"day stamps are not strictly increasing at t = {t}")
        violation = _first_violation(data, mask[None, :, :])
        if violation:
            reason, cell = violation
            raise GridInvariantError(f"{reason} at (t, i, j) = {cell}: {data[cell]!r}")
        object.__setattr__(self, "mask", _frozen(mask))
        object.__setattr__(self, "days", _frozen(days))
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def sanitized(cls, spec: GridSpec, mask: np.ndarray, days: np.ndarray, data: np.ndarray) -> "FieldSeries":
        """Clip negatives to 0 and zero masked-out cells before validating"""
        mask = np.asarray(mask, dtype=bool)
        data = np.asarray(data, dtype=np.float64)
        data = np.where(mask[None, :, :], np.maximum(data, 0.0), 0.0)
        return cls(spec=spec, mask=mask, days=days, data=data)

    @classmethod
    def from_fields(cls, fields: Sequence[GridField], days: np.ndarray) -> "FieldSeries":
        if not fields:
            raise ShapeError("cannot build a series from zero fields without a grid")
        spec, mask = fields[0].spec, fields[0].mask
        for f in fields[1:]:
            if f.spec != spec or not np.array_equal(f.mask, mask):
                raise ShapeError("fields do not share one grid and mask")
        return cls(spec=spec, mask=mask, days=days, data=np.stack([f.values for f in fields]))

    @property
    def n_days(self) -> int:
        return int(self.data.shape[0])

    @property
    def years(self) -> np.ndarray:
        return self.days[:, 0]

    def field(self, t: int) -> GridField:
        return GridField(spec=self.spec, values=self.data[t], mask=self.mask)

    def as_float64(self) -> np.ndarray:
        return self.data.astype(np.float64)

    def valid_values(self) -> np.ndarray:
        """(T, n_valid) float64 matrix of the valid cells, row-major cell order"""
        return self.data[:, self.mask].astype(np.float64)

    def with_data(self, data: np.ndarray) -> "FieldSeries":
        """Same grid, mask and days with new (sanitized) values"""
        return FieldSeries.sanitized(self.spec, self.mask, self.days, data)

    def apply_mask(self, mask: np.ndarray) -> "FieldSeries":
        """Replace the mask, zeroing every cell outside it"""
        return FieldSeries.sanitized(self.spec, mask, self.days, self.data)

    def select(self, index) -> "FieldSeries":
        """Sub-series for an index array, slice or boolean selector over time"""
        return FieldSeries(spec=self.spec, mask=self.mask, days=self.days[index], data=self.data[index])

    def aligned_with(self, other: "FieldSeries") -> bool:
        return (
            self.spec.shape == other.spec.shape
            and self.n_days == other.n_days
            and np.array_equal(self.days, other.days)
        )


def require_aligned(a: FieldSeries, b: FieldSeries, what: str = "series") -> None:
    """Raise ShapeError unless a and b share grid shape and day stamps"""
    if a.spec.shape != b.spec.shape:
        raise ShapeError(f"{what}: grid {a.spec.shape} vs {b.spec.shape}")
    if a.n_days != b.n_days:
        raise ShapeError(f"{what}: {a.n_days} vs {b.n_days} days")
    if not np.array_equal(a.days, b.days):
        raise ShapeError(f"{what}: day stamps differ")


def stamp_list(series: FieldSeries) -> List[Tuple[int, int]]:
    return [(int(y), int(d)) for y, d in series.days]
