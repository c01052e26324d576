from typing import List, Tuple

from pydantic import BaseModel

from maunet.models import MAUNET, MAUNET_LIGHT, MaunetLightModel, MaunetModel, Network
from utils.logger import logger

ACCOUNTING_HEADER = ["model", "total_params", "bytes64", "bytes32", "flops_at_HxW"]

# published totals of the reference build, reported next to ours
REFERENCE_PARAMS = {MAUNET: 85697, MAUNET_LIGHT: 52529}
REFERENCE_GFLOPS = {MAUNET: 1.3437, MAUNET_LIGHT: 1.1273}


class ParamCount(BaseModel):
    total: int
    bytes_at_64bit: int
    bytes_at_32bit: int

    @property
    def kilobytes_at_32bit(self) -> float:
        return self.bytes_at_32bit / 1024.0


def count_params(model: Network) -> ParamCount:
    """
    Learnable parameters: sum of 9 * in * out + out over all conv layers.

    Args:
        model: Network to count

    Returns:
        ParamCount with the total and its storage size at 64 and 32 bits
    """
    total = model.parameter_count
    return ParamCount(total=total, bytes_at_64bit=8 * total, bytes_at_32bit=4 * total)


def count_flops(model: Network, h: int, w: int) -> int:
    """
    Operations for one h x w sample.

    Convolutions count 2 * 9 * in * out * h_out * w_out; relu, pooling,
    upsampling and averaging count one op per output element.
    """
    if h % model.multiple or w % model.multiple:
        raise ValueError(f"{model.architecture} needs dims divisible by {model.multiple}, got {h}x{w}")
    return model.flops(h, w)


def accounting_rows(h: int = 128, w: int = 128) -> List[Tuple[str, int, int, int, int]]:
    """One CSV row per architecture: model,total_params,bytes64,bytes32,flops_at_HxW"""
    rows = []
    for model in (MaunetModel(seed=0), MaunetLightModel(seed=0)):
        counts = count_params(model)
        rows.append((model.architecture, counts.total, counts.bytes_at_64bit,
                     counts.bytes_at_32bit, count_flops(model, h, w)))
    return rows


COMPARISON_HEADER = ["model", "total_params", "reference_params", "memory_kb32", "gflops", "reference_gflops"]


def comparison_rows(h: int = 128, w: int = 128) -> List[Tuple[str, int, int, float, float, float]]:
    """Our counts next to the reference counts; memory in KB at 32 bits"""
    rows = []
    for model in (MaunetModel(seed=0), MaunetLightModel(seed=0)):
        counts = count_params(model)
        rows.append((model.architecture, counts.total, REFERENCE_PARAMS[model.architecture],
                     counts.kilobytes_at_32bit, count_flops(model, h, w) / 1e9,
                     REFERENCE_GFLOPS[model.architecture]))
    light, full = rows[1][1], rows[0][1]
    logger.info(f"MAUNet-Light keeps {light / full:.3f} of the MAUNet parameters ({light} / {full})")
    return rows
