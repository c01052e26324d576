class MaunetError(Exception):
    """Base class for all toolkit errors"""


class GridFormatError(MaunetError, ValueError):
    """A GFB1 or MCK1 file does not match its layout"""


class GridInvariantError(MaunetError, ValueError):
    """A field or series violates the mask / non-negativity / finiteness invariants"""


class ShapeError(MaunetError, ValueError):
    """Tensor or series dimensions are inconsistent"""


class TrainingError(MaunetError, RuntimeError):
    """Training cannot proceed (NaN loss, non-finite gradient, too few samples)"""


class ConfigError(MaunetError, ValueError):
    """Experiment configuration is malformed or refers to missing files"""
