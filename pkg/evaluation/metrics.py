"""
Pooled and gridwise error metrics over valid cells.

Undefined values (Pearson r of a constant series) are NaN, never 0;
PSNR of a perfect prediction is +inf.
"""
import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.ndimage import gaussian_filter

from griddata.types import FieldSeries, require_aligned
from utils.logger import logger

SSIM_SIGMA = 1.5
SSIM_RADIUS = 5  # 11 x 11 window
SSIM_K1 = 0.01
SSIM_K2 = 0.03


class PooledMetrics(BaseModel):
    rmse: float
    psnr: float
    mssim: float
    corr: float
    corr_gridwise_mean: float
    peak: float

    @property
    def corr_defined(self) -> bool:
        return not math.isnan(self.corr)


def _pair(pred: FieldSeries, obs: FieldSeries) -> Tuple[np.ndarray, np.ndarray]:
    """(T, n_valid) float64 matrices of pred and obs over the observation mask"""
    require_aligned(pred, obs, "prediction vs observation")
    mask = obs.mask
    return pred.data[:, mask].astype(np.float64), obs.data[:, mask].astype(np.float64)


def mse(pred: FieldSeries, obs: FieldSeries) -> float:
    p, o = _pair(pred, obs)
    if p.size == 0:
        raise ValueError("no valid cell-days to compare")
    return float(np.mean((p - o) ** 2))


def rmse(pred: FieldSeries, obs: FieldSeries) -> float:
    """Root mean squared error over all valid cell-days"""
    return math.sqrt(mse(pred, obs))


def psnr_from_mse(mse_value: float, peak: float) -> float:
    """20 log10(peak) - 10 log10(mse); +inf when mse is 0"""
    if peak <= 0:
        raise ValueError(f"PSNR peak must be positive, got {peak}")
    if mse_value == 0:
        return math.inf
    return 20.0 * math.log10(peak) - 10.0 * math.log10(mse_value)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson r of two flat samples; NaN when either is constant"""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return math.nan
    da, db = a - a.mean(), b - b.mean()
    return float(np.sum(da * db) / math.sqrt(np.sum(da * da) * np.sum(db * db)))


def ssim_field(pred: np.ndarray, obs: np.ndarray, mask: np.ndarray, peak: float) -> float:
    """
    Masked SSIM of one day.

    Local statistics use an 11 x 11 Gaussian window (sigma 1.5) with zero
    padding; the SSIM map is averaged over window centers on valid cells.

    Args:
        pred: 2-D predicted field
        obs: 2-D observed field
        mask: Valid cells
        peak: Dynamic range L in C1 = (0.01 L)^2, C2 = (0.03 L)^2

    Returns:
        Mean SSIM over valid cells
    """
    x = np.where(mask, pred, 0.0).astype(np.float64)
    y = np.where(mask, obs, 0.0).astype(np.float64)
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2

    def blur(z):
        return gaussian_filter(z, sigma=SSIM_SIGMA, mode="constant", truncate=SSIM_RADIUS / SSIM_SIGMA)

    mu_x, mu_y = blur(x), blur(y)
    var_x = blur(x * x) - mu_x * mu_x
    var_y = blur(y * y) - mu_y * mu_y
    cov = blur(x * y) - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2))
    return float(ssim_map[mask].mean())


def mssim(pred: FieldSeries, obs: FieldSeries, peak: float) -> float:
    """Mean over days of the masked SSIM"""
    require_aligned(pred, obs, "prediction vs observation")
    values = [ssim_field(pred.data[t], obs.data[t], obs.mask, peak) for t in range(obs.n_days)]
    return float(np.mean(values))


def gridwise_maps(pred: FieldSeries, obs: FieldSeries) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-cell RMSE and Pearson r along time.

    Returns:
        (rmse_map, corr_map), NaN outside the mask; corr_map is also NaN
        where either series is constant in time
    """
    p, o = _pair(pred, obs)
    mask = obs.mask
    rmse_map = np.full(mask.shape, np.nan)
    corr_map = np.full(mask.shape, np.nan)
    rmse_map[mask] = np.sqrt(np.mean((p - o) ** 2, axis=0))

    dp, do = p - p.mean(axis=0), o - o.mean(axis=0)
    defined = (np.ptp(p, axis=0) > 0) & (np.ptp(o, axis=0) > 0) if p.shape[0] > 1 else np.zeros(p.shape[1], bool)
    denom = np.sqrt(np.sum(dp * dp, axis=0) * np.sum(do * do, axis=0))
    corr = np.full(p.shape[1], np.nan)
    corr[defined] = np.sum(dp * do, axis=0)[defined] / denom[defined]
    corr_map[mask] = corr
    n_undefined = int((~defined).sum())
    if n_undefined:
        logger.warning(f"Correlation undefined at {n_undefined} of {defined.size} cells")
    return rmse_map, corr_map


def map_mean(values: np.ndarray, mask: np.ndarray) -> float:
    """Mean over valid, defined cells; NaN if none are defined"""
    selected = values[mask]
    selected = selected[np.isfinite(selected)]
    return float(selected.mean()) if selected.size else math.nan


def pooled_metrics(pred: FieldSeries, obs: FieldSeries, peak: Optional[float] = None) -> PooledMetrics:
    """
    RMSE, PSNR, MSSIM and Pearson r over all valid cell-days.

    Args:
        pred: Prediction series (non-negative by construction)
        obs: Observation series
        peak: PSNR / SSIM dynamic range; defaults to the largest observed value

    Returns:
        PooledMetrics; corr and corr_gridwise_mean are NaN when undefined
    """
    p, o = _pair(pred, obs)
    if peak is None:
        peak = float(o.max()) if o.size else 0.0
    if peak <= 0:
        raise ValueError(f"PSNR peak must be positive, got {peak}")
    mse_value = float(np.mean((p - o) ** 2))
    _, corr_map = gridwise_maps(pred, obs)
    return PooledMetrics(
        rmse=math.sqrt(mse_value),
        psnr=psnr_from_mse(mse_value, peak),
        mssim=mssim(pred, obs, peak),
        corr=pearson(p, o),
        corr_gridwise_mean=map_mean(corr_map, obs.mask),
        peak=peak,
    )
