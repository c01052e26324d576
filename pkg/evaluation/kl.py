"""
Histogram KL divergence D(obs || pred) in nats.

Both samples share uniform bin edges over [0, max of either sample];
counts become probabilities, get an additive epsilon and are renormalized.
"""
from typing import Optional, Tuple

import numpy as np

from griddata.types import FieldSeries, require_aligned
from settings.config import settings
from utils.helper import parallel_map


def kl_divergence(p_obs: np.ndarray, p_pred: np.ndarray) -> float:
    """
    Sum of p_obs ln(p_obs / p_pred) over bins with p_obs > 0.

    Args:
        p_obs: Reference probabilities
        p_pred: Compared probabilities, positive wherever p_obs is

    Returns:
        Divergence in nats
    """
    p_obs = np.asarray(p_obs, dtype=np.float64)
    p_pred = np.asarray(p_pred, dtype=np.float64)
    support = p_obs > 0
    return float(np.sum(p_obs[support] * np.log(p_obs[support] / p_pred[support])))


def smoothed_probabilities(counts: np.ndarray, epsilon: float) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    p = counts / total if total > 0 else np.full(counts.shape, 1.0 / counts.size)
    p = p + epsilon
    return p / p.sum()


def histogram_pair(obs: np.ndarray, pred: np.ndarray, n_bins: int) -> Tuple[np.ndarray, np.ndarray]:
    """Counts of both samples on shared uniform bins over [0, max]"""
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    obs = np.asarray(obs, dtype=np.float64).ravel()
    pred = np.asarray(pred, dtype=np.float64).ravel()
    top = max(float(obs.max(initial=0.0)), float(pred.max(initial=0.0)))

    def bins(v):
        if top <= 0:
            return np.zeros(v.size, dtype=np.int64)
        return np.minimum((v / top * n_bins).astype(np.int64), n_bins - 1)

    return (np.bincount(bins(obs), minlength=n_bins),
            np.bincount(bins(pred), minlength=n_bins))


def sample_kl(obs: np.ndarray, pred: np.ndarray, n_bins: int, epsilon: float) -> float:
    obs_counts, pred_counts = histogram_pair(obs, pred, n_bins)
    return kl_divergence(smoothed_probabilities(obs_counts, epsilon),
                         smoothed_probabilities(pred_counts, epsilon))


def kl_gridwise(pred: FieldSeries, obs: FieldSeries, n_bins: int = settings.kl_bins,
                epsilon: float = settings.kl_epsilon, threads: Optional[int] = None) -> Tuple[np.ndarray, float]:
    """
    KL divergence of each valid cell's values along time.

    Args:
        pred: Prediction series
        obs: Observation series
        n_bins: Histogram bins
        epsilon: Additive smoothing
        threads: Worker threads for the per-cell work

    Returns:
        (kl_map with NaN outside the mask, mean over valid cells)
    """
    require_aligned(pred, obs, "prediction vs observation")
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    mask = obs.mask
    p, o = pred.data[:, mask].astype(np.float64), obs.data[:, mask].astype(np.float64)
    values = parallel_map(
        lambda c: sample_kl(o[:, c], p[:, c], n_bins, epsilon),
        range(o.shape[1]),
        settings.resolve_threads(threads),
    )
    kl_map = np.full(mask.shape, np.nan)
    kl_map[mask] = values
    return kl_map, float(np.mean(values)) if values else float("nan")


def kl_daily(pred: FieldSeries, obs: FieldSeries, n_bins: int = settings.kl_bins,
             epsilon: float = settings.kl_epsilon) -> np.ndarray:
    """KL divergence of each day's values over the valid cells"""
    require_aligned(pred, obs, "prediction vs observation")
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    mask = obs.mask
    return np.array([
        sample_kl(obs.data[t][mask], pred.data[t][mask], n_bins, epsilon)
        for t in range(obs.n_days)
    ])
