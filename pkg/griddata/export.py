from typing import Optional

import numpy as np

from griddata.types import GridField, GridSpec
from utils.helper import atomic_write_bytes, write_csv


def write_field_csv(field: GridField, path: str) -> str:
    """
    Export a field as CSV: header "lat,lon,value", one row per valid cell.

    Args:
        field: Field to export
        path: Destination path

    Returns:
        The destination path
    """
    return write_map_csv(field.spec, field.values, field.mask, path)


def write_map_csv(spec: GridSpec, values: np.ndarray, valid: np.ndarray, path: str) -> str:
    """CSV export for any per-cell map (metric maps may hold NaN where undefined)"""
    lats, lons = spec.lats(), spec.lons()
    rows = [
        (float(lats[i]), float(lons[j]), float(values[i, j]))
        for i, j in zip(*np.nonzero(valid))
    ]
    return write_csv(path, ["lat", "lon", "value"], rows)


def to_gray8(values: np.ndarray, valid: np.ndarray, vmin: Optional[float] = None, vmax: Optional[float] = None) -> np.ndarray:
    """
    Linearly scale valid, finite cells into 1..255; everything else is 0.

    Rows are flipped so the northernmost row is the top image row.
    """
    values = np.asarray(values, dtype=np.float64)
    usable = np.asarray(valid, dtype=bool) & np.isfinite(values)
    image = np.zeros(values.shape, dtype=np.uint8)
    if usable.any():
        lo = float(values[usable].min()) if vmin is None else vmin
        hi = float(values[usable].max()) if vmax is None else vmax
        span = hi - lo if hi > lo else 1.0
        scaled = np.clip((values - lo) / span, 0.0, 1.0)
        image[usable] = (1 + np.round(scaled[usable] * 254)).astype(np.uint8)
    return image[::-1]


def write_pgm(values: np.ndarray, valid: np.ndarray, path: str, vmin: Optional[float] = None, vmax: Optional[float] = None) -> str:
    """
    Write a per-cell map as an 8-bit binary PGM (P5) image.

    Args:
        values: 2-D map
        valid: Cells to draw; others are black
        path: Destination path
        vmin, vmax: Optional fixed color range

    Returns:
        The destination path
    """
    image = to_gray8(values, valid, vmin, vmax)
    height, width = image.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return atomic_write_bytes(path, header + image.tobytes())
