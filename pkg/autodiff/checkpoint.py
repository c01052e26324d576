"""
MCK1 parameter checkpoints.

Layout (little-endian)::

    magic "MCK1" | u32 version=1 | u32 n_entries |
    per entry: u32 name_len | name (utf-8) | u32 rank | u32 dims[rank] | f64 values
"""
import struct
from collections import OrderedDict
from typing import Dict

import numpy as np

from autodiff.tensor import ParamStore
from utils.exceptions import GridFormatError
from utils.helper import atomic_write_bytes
from utils.logger import logger

MAGIC = b"MCK1"
VERSION = 1
HEADER = struct.Struct("<4s2I")
U32 = struct.Struct("<I")


def encode_checkpoint(values: Dict[str, np.ndarray]) -> bytes:
    parts = [HEADER.pack(MAGIC, VERSION, len(values))]
    for name, array in values.items():
        array = np.asarray(array, dtype=np.float64)
        raw_name = name.encode("utf-8")
        parts.append(U32.pack(len(raw_name)))
        parts.append(raw_name)
        parts.append(U32.pack(array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes(order="C"))
    return b"".join(parts)


def decode_checkpoint(payload: bytes, source: str = "<bytes>") -> "OrderedDict[str, np.ndarray]":
    """
    Parse MCK1 bytes.

    Args:
        payload: File contents
        source: Name used in error messages

    Returns:
        Ordered name -> float64 array mapping
    """
    if len(payload) < HEADER.size:
        raise GridFormatError(f"{source}: truncated checkpoint header")
    magic, version, n_entries = HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise GridFormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise GridFormatError(f"{source}: unsupported checkpoint version {version}")

    offset = HEADER.size
    entries: "OrderedDict[str, np.ndarray]" = OrderedDict()
    try:
        for _ in range(n_entries):
            (name_len,) = U32.unpack_from(payload, offset)
            offset += U32.size
            name = payload[offset:offset + name_len].decode("utf-8")
            if len(name.encode("utf-8")) != name_len:
                raise GridFormatError(f"{source}: truncated entry name")
            offset += name_len
            (rank,) = U32.unpack_from(payload, offset)
            offset += U32.size
            dims = struct.unpack_from(f"<{rank}I", payload, offset)
            offset += 4 * rank
            count = int(np.prod(dims, dtype=np.int64))
            if offset + 8 * count > len(payload):
                raise GridFormatError(f"{source}: entry '{name}' overruns the file")
            values = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
            offset += 8 * count
            if name in entries:
                raise GridFormatError(f"{source}: duplicate entry '{name}'")
            entries[name] = values.reshape(dims).astype(np.float64)
    except struct.error as e:
        raise GridFormatError(f"{source}: truncated checkpoint ({e})") from e
    if offset != len(payload):
        raise GridFormatError(f"{source}: {len(payload) - offset} unexpected trailing bytes")
    return entries


def write_checkpoint(store: ParamStore, path: str) -> str:
    """
    Write every tensor of a store to an MCK1 file (atomically).

    Args:
        store: Parameters to save, in store order
        path: Destination path

    Returns:
        The destination path
    """
    atomic_write_bytes(path, encode_checkpoint(store.snapshot()))
    logger.info(f"Wrote checkpoint with {len(store)} tensors ({store.total_count()} values) to {path}")
    return path


def read_checkpoint(path: str) -> "OrderedDict[str, np.ndarray]":
    try:
        with open(path, "rb") as handle:
            return decode_checkpoint(handle.read(), source=path)
    except Exception as e:
        logger.error(f"Error reading checkpoint {path}: {e}")
        raise
