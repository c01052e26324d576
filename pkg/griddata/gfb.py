"""
GFB1 gridded field binary format.

Layout (little-endian)::

    magic "GFB1" | u32 version=1 | u32 T | u32 H | u32 W |
    f32 lat0, lon0, d_lat, d_lon | H*W mask bytes (0/1, row-major) |
    T*H*W f32 values (time-major, row-major) |
    optional day table: "DAY1" | T * (u16 year, u16 day-of-year)

The day table is written whenever T > 0. Files without it are accepted and
get consecutive monsoon-season stamps starting in year 2000.
"""
import struct

import numpy as np

from griddata.types import FieldSeries, GridSpec, monsoon_days
from utils.exceptions import GridFormatError
from utils.helper import atomic_write_bytes
from utils.logger import logger

MAGIC = b"GFB1"
DAY_MAGIC = b"DAY1"
VERSION = 1
HEADER = struct.Struct("<4s4I4f")
HEADER_SIZE = HEADER.size  # 36 bytes
MAX_ELEMENTS = 1 << 31


def encode_series(series: FieldSeries) -> bytes:
    """Serialize a series to GFB1 bytes"""
    spec = series.spec
    header = HEADER.pack(
        MAGIC, VERSION, series.n_days, spec.n_lat, spec.n_lon,
        spec.lat0, spec.lon0, spec.d_lat, spec.d_lon,
    )
    parts = [
        header,
        series.mask.astype(np.uint8).tobytes(order="C"),
        np.ascontiguousarray(series.data, dtype="<f4").tobytes(order="C"),
    ]
    if series.n_days > 0:
        if series.days[:, 0].max() > 0xFFFF or series.days.min() < 0:
            raise GridFormatError("day stamps do not fit the u16 day table")
        parts.append(DAY_MAGIC)
        parts.append(np.ascontiguousarray(series.days, dtype="<u2").tobytes(order="C"))
    return b"".join(parts)


def decode_series(payload: bytes, source: str = "<bytes>") -> FieldSeries:
    """
    Parse GFB1 bytes into a validated series.

    Args:
        payload: File contents
        source: Name used in error messages

    Returns:
        The decoded series
    """
    if len(payload) < HEADER_SIZE:
        raise GridFormatError(f"{source}: {len(payload)} bytes is shorter than the {HEADER_SIZE}-byte header")
    magic, version, n_t, n_h, n_w, lat0, lon0, d_lat, d_lon = HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise GridFormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise GridFormatError(f"{source}: unsupported version {version}")
    if n_h == 0 or n_w == 0:
        raise GridFormatError(f"{source}: empty grid {n_h}x{n_w}")

    n_cells = n_h * n_w
    n_values = n_t * n_cells
    if n_cells > MAX_ELEMENTS or n_values > MAX_ELEMENTS:
        raise GridFormatError(f"{source}: dimension overflow T={n_t} H={n_h} W={n_w}")
    body = HEADER_SIZE + n_cells + 4 * n_values
    if len(payload) < body:
        raise GridFormatError(
            f"{source}: dimension overflow, T={n_t} H={n_h} W={n_w} needs {body} bytes, file has {len(payload)}"
        )

    mask_bytes = np.frombuffer(payload, dtype=np.uint8, count=n_cells, offset=HEADER_SIZE)
    if np.any(mask_bytes > 1):
        raise GridFormatError(f"{source}: mask bytes must be 0 or 1")
    mask = mask_bytes.reshape(n_h, n_w).astype(bool)
    data = np.frombuffer(payload, dtype="<f4", count=n_values, offset=HEADER_SIZE + n_cells)
    data = data.reshape(n_t, n_h, n_w).astype(np.float32)

    trailer = len(payload) - body
    if trailer == 0:
        days = monsoon_days(n_t)
    elif trailer == 4 + 4 * n_t and payload[body:body + 4] == DAY_MAGIC:
        days = np.frombuffer(payload, dtype="<u2", count=2 * n_t, offset=body + 4)
        days = days.reshape(n_t, 2).astype(np.int64)
    else:
        raise GridFormatError(f"{source}: {trailer} unexpected trailing bytes")

    spec = GridSpec(n_lat=n_h, n_lon=n_w, lat0=lat0, lon0=lon0, d_lat=d_lat, d_lon=d_lon)
    # FieldSeries validation rejects NaN / negative valid cells and names (t, i, j)
    return FieldSeries(spec=spec, mask=mask, days=days, data=data)


def read_series(path: str) -> FieldSeries:
    """
    Read a GFB1 file.

    Args:
        path: File path

    Returns:
        The series stored in the file
    """
    try:
        with open(path, "rb") as handle:
            payload = handle.read()
        series = decode_series(payload, source=path)
        logger.debug(f"Read {series.n_days} days of {series.spec.n_lat}x{series.spec.n_lon} from {path}")
        return series
    except Exception as e:
        logger.error(f"Error reading series {path}: {e}")
        raise


def write_series(series: FieldSeries, path: str) -> str:
    """
    Write a series as a GFB1 file (atomically).

    Args:
        series: Series to store
        path: Destination path

    Returns:
        The destination path
    """
    # re-validate: construction already enforces invariants, arrays are read-only
    FieldSeries(spec=series.spec, mask=series.mask, days=series.days, data=series.data)
    atomic_write_bytes(path, encode_series(series))
    logger.info(f"Wrote {series.n_days} days to {path}")
    return path
