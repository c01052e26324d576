import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from evaluation.kl import kl_daily, kl_gridwise
from evaluation.metrics import gridwise_maps, map_mean, pooled_metrics
from evaluation.summaries import daily_spatial_mean
from griddata.export import write_map_csv, write_pgm
from griddata.types import FieldSeries, GridSpec
from settings.config import settings
from utils.helper import write_csv
from utils.logger import logger

# table column order: rmse, psnr, mssim, corr first
SUMMARY_COLUMNS = ["rmse", "psnr", "mssim", "corr", "corr_gridwise_mean", "rmse_gridwise_mean", "kl_gridwise_mean", "kl_daily_mean"]


@dataclass
class EvalReport:
    """Metrics of one (prediction, observation) pairing"""
    name: str
    spec: GridSpec
    mask: np.ndarray
    pooled: Dict[str, float] = field(default_factory=dict)
    gridwise: Dict[str, np.ndarray] = field(default_factory=dict)
    daily: Dict[str, np.ndarray] = field(default_factory=dict)
    days: Optional[np.ndarray] = None

    def row(self) -> List:
        return [self.name] + [self.pooled.get(column, float("nan")) for column in SUMMARY_COLUMNS]


def evaluate(name: str, pred: FieldSeries, obs: FieldSeries, peak: Optional[float] = None,
             n_bins: int = settings.kl_bins, epsilon: float = settings.kl_epsilon,
             threads: Optional[int] = None) -> EvalReport:
    """
    Full metric battery for one prediction.

    Args:
        name: Row label, e.g. "KR" or "bias_data"
        pred: Prediction series
        obs: Observation series
        peak: PSNR / SSIM peak; defaults to the largest observed value
        n_bins: KL histogram bins
        epsilon: KL smoothing
        threads: Worker threads for per-cell work

    Returns:
        EvalReport
    """
    try:
        pooled = pooled_metrics(pred, obs, peak)
        rmse_map, corr_map = gridwise_maps(pred, obs)
        kl_map, kl_mean = kl_gridwise(pred, obs, n_bins, epsilon, threads)
        kl_days = kl_daily(pred, obs, n_bins, epsilon)
        report = EvalReport(
            name=name,
            spec=obs.spec,
            mask=np.array(obs.mask),
            pooled={
                "rmse": pooled.rmse,
                "psnr": pooled.psnr,
                "mssim": pooled.mssim,
                "corr": pooled.corr,
                "corr_gridwise_mean": pooled.corr_gridwise_mean,
                "rmse_gridwise_mean": map_mean(rmse_map, obs.mask),
                "kl_gridwise_mean": kl_mean,
                "kl_daily_mean": float(np.mean(kl_days)) if kl_days.size else float("nan"),
                "peak": pooled.peak,
            },
            gridwise={"rmse": rmse_map, "corr": corr_map, "kl": kl_map},
            daily={
                "spatial_mean_pred": daily_spatial_mean(pred),
                "spatial_mean_obs": daily_spatial_mean(obs),
                "kl_daily": kl_days,
            },
            days=np.array(obs.days),
        )
        logger.info(
            f"{name}: rmse {pooled.rmse:.4f} psnr {pooled.psnr:.3f} mssim {pooled.mssim:.4f} "
            f"corr {pooled.corr:.4f} kl {kl_mean:.4f}"
        )
        return report
    except Exception as e:
        logger.error(f"Error evaluating {name}: {e}")
        raise


def write_report(report: EvalReport, out_dir: str) -> List[str]:
    """
    Export one report: metrics.csv (name,value), a CSV and a PGM per
    gridwise map, and daily.csv.

    Returns:
        Paths written
    """
    os.makedirs(out_dir, exist_ok=True)
    written = [write_csv(os.path.join(out_dir, "metrics.csv"), ["name", "value"],
                         [(k, float(v)) for k, v in report.pooled.items()])]
    for map_name, values in report.gridwise.items():
        written.append(write_map_csv(report.spec, values, report.mask, os.path.join(out_dir, f"{map_name}_map.csv")))
        written.append(write_pgm(values, report.mask, os.path.join(out_dir, f"{map_name}_map.pgm")))
    header = ["year", "doy"] + list(report.daily)
    columns = [report.daily[k] for k in report.daily]
    rows = [
        [int(report.days[t, 0]), int(report.days[t, 1])] + [float(c[t]) for c in columns]
        for t in range(len(report.days))
    ]
    written.append(write_csv(os.path.join(out_dir, "daily.csv"), header, rows))
    return written


def write_summary(reports: Sequence[EvalReport], path: str) -> str:
    """One row per model: model, rmse, psnr, mssim, corr, ..."""
    return write_csv(path, ["model"] + SUMMARY_COLUMNS, [r.row() for r in reports])
