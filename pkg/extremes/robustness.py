from typing import Dict, List, Tuple

from pydantic import BaseModel

from evaluation.metrics import gridwise_maps, map_mean
from griddata.types import FieldSeries, require_aligned
from training.trainer import TrainedModel, predict_series
from utils.helper import write_csv
from utils.logger import logger

REAL = "real"
RAW_INPUT = "raw_input"
ROBUSTNESS_HEADER = ["input_kind", "mean_gridwise_corr"]


class RobustnessReport(BaseModel):
    rows: List[Tuple[str, float]]
    holds: bool

    def correlation(self, kind: str) -> float:
        return dict(self.rows)[kind]


def mean_gridwise_corr(pred: FieldSeries, obs: FieldSeries) -> float:
    _, corr_map = gridwise_maps(pred, obs)
    return map_mean(corr_map, obs.mask)


def robustness_report(model: TrainedModel, real_in: FieldSeries, random_inputs: Dict[str, FieldSeries],
                      obs: FieldSeries) -> RobustnessReport:
    """
    Compare the model driven by real inputs with the model driven by random ones.

    Args:
        model: Trained network
        real_in: Real input series
        random_inputs: Random input series by kind, e.g. {"temporal": ..., "spatial": ...}
        obs: Observations aligned with every input

    Returns:
        Rows of (input_kind, mean gridwise corr) for the raw input, the model
        on real input and the model on each random input; holds is True when
        every random kind scores strictly below the real one
    """
    try:
        require_aligned(real_in, obs, "real input vs observation")
        real_corr = mean_gridwise_corr(predict_series(model, real_in), obs)
        rows = [(RAW_INPUT, mean_gridwise_corr(real_in.apply_mask(obs.mask), obs)), (REAL, real_corr)]
        holds = True
        for kind, series in random_inputs.items():
            require_aligned(series, obs, f"{kind} input vs observation")
            corr = mean_gridwise_corr(predict_series(model, series), obs)
            rows.append((kind, corr))
            if not corr < real_corr:
                holds = False
                logger.warning(f"Random '{kind}' input correlation {corr:.4f} is not below real {real_corr:.4f}")
        logger.info("Robustness: " + ", ".join(f"{k}={v:.4f}" for k, v in rows))
        return RobustnessReport(rows=rows, holds=holds)
    except Exception as e:
        logger.error(f"Error building robustness report: {e}")
        raise


def write_robustness(report: RobustnessReport, path: str) -> str:
    """CSV: input_kind,mean_gridwise_corr"""
    return write_csv(path, ROBUSTNESS_HEADER, [(kind, float(corr)) for kind, corr in report.rows])
