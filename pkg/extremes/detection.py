from typing import Optional

import numpy as np
from pydantic import BaseModel

from griddata.types import FieldSeries, require_aligned

DETECTION_THRESHOLD = 20.0


class DetectionScores(BaseModel):
    """Pooled confusion counts of extreme-day detection; f1 is None without positive observations"""
    tp: int
    fp: int
    fn: int
    tn: int
    f1: Optional[float]
    accuracy: float


def scores_from_counts(tp: int, fp: int, fn: int, tn: int) -> DetectionScores:
    total = tp + fp + fn + tn
    if total == 0:
        raise ValueError("no samples to score")
    f1 = None if tp + fn == 0 else 2.0 * tp / (2.0 * tp + fp + fn)
    return DetectionScores(tp=tp, fp=fp, fn=fn, tn=tn, f1=f1, accuracy=(tp + tn) / total)


def extreme_detection_scores(pred: FieldSeries, obs: FieldSeries,
                             threshold: float = DETECTION_THRESHOLD) -> DetectionScores:
    """
    F1 and accuracy of labelling valid cell-days as extreme (value >= threshold).

    Args:
        pred: Prediction series
        obs: Observation series
        threshold: Extreme label threshold, inclusive (mm)

    Returns:
        DetectionScores
    """
    require_aligned(pred, obs, "prediction vs observation")
    predicted = pred.data[:, obs.mask] >= threshold
    observed = obs.data[:, obs.mask] >= threshold
    return scores_from_counts(
        tp=int(np.sum(predicted & observed)),
        fp=int(np.sum(predicted & ~observed)),
        fn=int(np.sum(~predicted & observed)),
        tn=int(np.sum(~predicted & ~observed)),
    )
