import logging
import os
import sys
import time
import traceback
from contextlib import contextmanager
from datetime import datetime

import pytz

from settings.config import settings

PLAIN_FORMAT = "%(asctime)s | %(threadName)s | %(levelname)-3s | %(module)s:%(lineno)d - %(message)s"
TRACEBACK_DEPTH = 10


class ZonedFormatter(logging.Formatter):
    """Formatter stamping records in the configured LOG_TIMEZONE"""

    def __init__(self, fmt: str = PLAIN_FORMAT, tz_name: str = settings.log_timezone):
        super().__init__(fmt)
        self.tz = pytz.timezone(tz_name)

    def formatTime(self, record, datefmt=None):
        stamp = datetime.fromtimestamp(record.created, self.tz)
        return stamp.strftime(datefmt or "%Y-%m-%d %H:%M:%S") + f",{int(record.msecs):03d}"


class ColorFormatter(ZonedFormatter):

    green = "\x1b[0;32m"
    grey = "\x1b[38;5;248m"
    yellow = "\x1b[38;5;229m"
    red = "\x1b[31;20m"
    bold_red = "\x1b[31;1m"
    blue = "\x1b[38;5;31m"
    white = "\x1b[38;5;255m"

    LEVEL_COLORS = {
        logging.DEBUG: grey,
        logging.INFO: green,
        logging.WARNING: yellow,
        logging.ERROR: red,
        logging.CRITICAL: bold_red,
    }

    def __init__(self):
        super().__init__()
        self.styles = {
            level: logging.PercentStyle(
                f"{self.grey}%(asctime)s | %(threadName)s | {color}%(levelname)-3s{self.grey} | "
                f"{self.blue}%(module)s:%(lineno)d{self.grey} - {self.white}%(message)s"
            )
            for level, color in self.LEVEL_COLORS.items()
        }

    def formatMessage(self, record):
        return self.styles.get(record.levelno, self._style).format(record)


def _console_formatter(stream) -> logging.Formatter:
    colored = hasattr(stream, "isatty") and stream.isatty() and not os.getenv("NO_COLOR")
    return ColorFormatter() if colored else ZonedFormatter()


def custom_logger(app_name="APP"):
    """
    Build the toolkit logger: console (colored on a terminal) plus
    <LOG_DIR>/logs.log, both at LOG_LEVEL.
    """
    logger_r = logging.getLogger(name=app_name)
    if logger_r.handlers:
        return logger_r
    level = getattr(logging, settings.log_level.upper(), logging.INFO)

    ch = logging.StreamHandler()
    ch.setLevel(level)
    ch.setFormatter(_console_formatter(ch.stream))

    os.makedirs(settings.log_dir, exist_ok=True)
    log_file_path = os.path.join(settings.log_dir, "logs.log")
    fh = logging.FileHandler(log_file_path)
    fh.setLevel(level)
    fh.setFormatter(ZonedFormatter())

    logger_r.setLevel(level)
    logger_r.addHandler(ch)
    logger_r.addHandler(fh)
    logger_r.propagate = False
    logger_r.debug(f"Log file created at: {log_file_path}")
    return logger_r


logger = custom_logger(app_name=settings.app_name)


def exception_logging(exctype, value, tb):
    """
    sys.excepthook: log uncaught errors through the toolkit logger.

    Toolkit errors (MaunetError) carry a complete message and are logged
    without a traceback unless DEBUG is set.
    """
    from utils.exceptions import MaunetError

    if issubclass(exctype, KeyboardInterrupt):
        sys.__excepthook__(exctype, value, tb)
        return
    if issubclass(exctype, MaunetError) and not settings.debug:
        logger.error(f"{exctype.__name__}: {value}")
        return
    frames = "".join(traceback.format_tb(tb, TRACEBACK_DEPTH))
    logger.error(f"{exctype.__name__}: {value}\nTraceback (innermost {TRACEBACK_DEPTH} frames):\n{frames}")


@contextmanager
def log_duration(label: str):
    """Log the start and the wall-clock duration of a block"""
    logger.info(f"{label} started")
    start = time.perf_counter()
    yield
    logger.info(f"{label} finished in {time.perf_counter() - start:.1f}s")
