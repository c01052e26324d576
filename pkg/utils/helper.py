import csv
import hashlib
import io
import json
import os
import tempfile
import pytz

from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import Any, Callable, Dict, Iterable, List, Sequence, TypeVar

from settings.config import settings
from utils.logger import logger


def get_local_timezone():
    """
    Get the timezone object used for log and manifest timestamps.

    Returns:
        pytz.timezone: Timezone object from settings.
    """
    return pytz.timezone(settings.log_timezone)

def get_current_local_datetime():
    """
    Get the current datetime in the configured timezone.

    Returns:
        datetime: Current datetime in the configured timezone.
    """
    return datetime.now(get_local_timezone())

def atomic_write_bytes(path: str, payload: bytes) -> str:
    """
    Write bytes to a temporary sibling file and rename it into place.

    Args:
        path: Destination file path
        payload: Bytes to write

    Returns:
        The destination path
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_path, path)
    except Exception as e:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        logger.error(f"Error writing {path}: {e}")
        raise
    logger.debug(f"Wrote {len(payload)} bytes to {path}")
    return path

def atomic_write_text(path: str, text: str) -> str:
    """Text variant of atomic_write_bytes (UTF-8, newline as given)"""
    return atomic_write_bytes(path, text.encode("utf-8"))

def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Render rows as CSV text with a header line.

    Floats are written with repr precision so files are reproducible.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()

def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Atomically write a CSV file.

    Args:
        path: Destination file path
        header: Column names
        rows: Row values

    Returns:
        The destination path
    """
    return atomic_write_text(path, csv_text(header, rows))

def read_csv(path: str) -> List[Dict[str, str]]:
    """Read a CSV file written by write_csv into a list of dict rows"""
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))

def sha256_bytes(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()

def sha256_file(path: str) -> str:
    """
    Hex SHA-256 of a file's contents.

    Args:
        path: File to hash

    Returns:
        Hex digest
    """
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()

def config_hash(values: Dict[str, Any]) -> str:
    """Stable hash of a configuration mapping (sorted-key JSON)"""
    canonical = json.dumps(values, sort_keys=True, default=str, separators=(",", ":"))
    return sha256_bytes(canonical.encode("utf-8"))

def write_manifest(out_dir: str, command: str, config: Dict[str, Any], seeds: Dict[str, int], files: List[str]) -> str:
    """
    Record config hash, seeds and produced-file checksums for one run.

    The manifest is merged per command into <out_dir>/manifest.json.

    Args:
        out_dir: Run output directory
        command: Subcommand name
        config: Effective configuration
        seeds: Named seeds used
        files: Paths of the produced files

    Returns:
        Path of the manifest file
    """
    manifest_path = os.path.join(out_dir, "manifest.json")
    manifest: Dict[str, Any] = {}
    if os.path.exists(manifest_path):
        try:
            with open(manifest_path) as handle:
                manifest = json.load(handle)
        except (OSError, ValueError) as e:
            logger.warning(f"Ignoring unreadable manifest {manifest_path}: {e}")
            manifest = {}

    manifest[command] = {
        "config_hash": config_hash(config),
        "seeds": seeds,
        "files": {
            os.path.relpath(path, out_dir): sha256_file(path) for path in sorted(files)
        },
        "created_at": get_current_local_datetime().strftime("%Y-%m-%d %H:%M:%S"),
    }
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    logger.info(f"Manifest updated for '{command}' with {len(files)} files")
    return manifest_path

T = TypeVar("T")
R = TypeVar("R")

def parallel_map(func: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """
    Apply func to every item, in a thread pool when threads > 1.

    Results keep the order of items, so reductions over them do not depend
    on scheduling.
    """
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
