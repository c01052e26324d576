"""
Per-cell empirical quantile mapping (QM) and multiplicative quantile delta
mapping (QDM).

Quantiles are taken at p_k = (k - 0.5) / n, k = 1..n, with linear
interpolation between order statistics. Between knots the maps are linear;
outside the knot range QM extrapolates multiplicatively and QDM clamps the
non-exceedance probability to [p_1, p_n].
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from griddata.types import FieldSeries, GridSpec, require_aligned
from settings.config import settings
from utils.exceptions import ShapeError
from utils.helper import parallel_map, write_csv
from utils.logger import logger

QDM_DENOMINATOR_FLOOR = 0.05  # mm/day
TABLE_HEADER = ["cell_i", "cell_j", "p", "model_q", "obs_q"]


def quantile_probabilities(n_quantiles: int) -> np.ndarray:
    if n_quantiles < 1:
        raise ValueError(f"n_quantiles must be >= 1, got {n_quantiles}")
    return (np.arange(1, n_quantiles + 1) - 0.5) / n_quantiles


@dataclass(frozen=True)
class QuantileTable:
    """Calibrated quantile pairs of one grid cell"""
    cell: Tuple[int, int]
    probabilities: np.ndarray
    model_quantiles: np.ndarray
    obs_quantiles: np.ndarray

    def __post_init__(self):
        n = len(self.probabilities)
        if len(self.model_quantiles) != n or len(self.obs_quantiles) != n:
            raise ShapeError("probabilities and quantile arrays differ in length")
        if np.any(np.diff(self.model_quantiles) < 0) or np.any(np.diff(self.obs_quantiles) < 0):
            raise ValueError(f"quantiles of cell {self.cell} are not non-decreasing")


@dataclass(frozen=True)
class QuantileMap:
    """QM fit for every valid cell; column c belongs to cells[c]"""
    spec: GridSpec
    mask: np.ndarray
    probabilities: np.ndarray
    model_quantiles: np.ndarray   # (n_quantiles, n_valid)
    obs_quantiles: np.ndarray     # (n_quantiles, n_valid)

    @property
    def cells(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.mask))]

    def table(self, i: int, j: int) -> QuantileTable:
        column = self.cells.index((i, j))
        return QuantileTable(
            cell=(i, j),
            probabilities=self.probabilities,
            model_quantiles=self.model_quantiles[:, column],
            obs_quantiles=self.obs_quantiles[:, column],
        )

    def tables(self) -> List[QuantileTable]:
        return [
            QuantileTable(cell=cell, probabilities=self.probabilities,
                          model_quantiles=self.model_quantiles[:, c], obs_quantiles=self.obs_quantiles[:, c])
            for c, cell in enumerate(self.cells)
        ]


def _check_calibration(model_calib: FieldSeries, obs_calib: FieldSeries, n_quantiles: int) -> None:
    require_aligned(model_calib, obs_calib, "calibration pair")
    if not np.array_equal(model_calib.mask, obs_calib.mask):
        raise ShapeError("calibration series do not share one mask")
    if model_calib.n_days < n_quantiles:
        raise ShapeError(f"calibration has {model_calib.n_days} days, fewer than n_quantiles = {n_quantiles}")


def fit_qm(model_calib: FieldSeries, obs_calib: FieldSeries, n_quantiles: int = settings.n_quantiles) -> QuantileMap:
    """
    Fit per-cell empirical quantiles on a calibration window.

    Args:
        model_calib: Model (biased) series of the calibration window
        obs_calib: Observed series aligned with model_calib
        n_quantiles: Number of knots

    Returns:
        QuantileMap over the valid cells
    """
    _check_calibration(model_calib, obs_calib, n_quantiles)
    p = quantile_probabilities(n_quantiles)
    model_q = np.quantile(model_calib.valid_values(), p, axis=0)
    obs_q = np.quantile(obs_calib.valid_values(), p, axis=0)
    logger.info(f"Fitted QM with {n_quantiles} quantiles on {model_q.shape[1]} cells")
    return QuantileMap(spec=model_calib.spec, mask=np.array(model_calib.mask),
                       probabilities=p, model_quantiles=model_q, obs_quantiles=obs_q)


def _map_values(x: np.ndarray, model_q: np.ndarray, obs_q: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.interp(x, model_q, obs_q)
    above = x > model_q[-1]
    if model_q[-1] > 0:
        y[above] = x[above] * (obs_q[-1] / model_q[-1])
    below = x < model_q[0]
    if model_q[0] > 0:
        y[below] = x[below] * (obs_q[0] / model_q[0])
    y[x <= 0] = 0.0
    return np.maximum(y, 0.0)


def apply_qm(table: QuantileTable, x) -> np.ndarray:
    """
    Map model values through one cell's table.

    Linear between knots; above the last knot x * obs_q[-1] / model_q[-1];
    below the first knot x * obs_q[0] / model_q[0]; x <= 0 maps to 0.

    Args:
        table: Calibrated cell table
        x: Scalar or array of model values (mm/day)

    Returns:
        Corrected values, same shape as x
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return _map_values(x, table.model_quantiles, table.obs_quantiles)


def apply_qm_series(qmap: QuantileMap, series: FieldSeries, threads: Optional[int] = None) -> FieldSeries:
    """
    Correct every valid cell of a projection series.

    Args:
        qmap: Calibrated map
        series: Model series on the same grid and mask
        threads: Worker threads for the per-cell work

    Returns:
        Corrected series
    """
    if series.spec.shape != qmap.mask.shape or not np.array_equal(series.mask, qmap.mask):
        raise ShapeError("series grid or mask does not match the quantile map")
    values = series.valid_values()
    columns = parallel_map(
        lambda c: _map_values(values[:, c], qmap.model_quantiles[:, c], qmap.obs_quantiles[:, c]),
        range(values.shape[1]),
        settings.resolve_threads(threads),
    )
    return series.with_data(_scatter(series, columns))


def _scatter(series: FieldSeries, columns: List[np.ndarray]) -> np.ndarray:
    out = np.zeros(series.data.shape)
    if columns:
        out[:, series.mask] = np.stack(columns, axis=1)
    return out


def _qdm_cell(x: np.ndarray, model_q: np.ndarray, obs_q: np.ndarray, proj_q: np.ndarray,
              p: np.ndarray) -> np.ndarray:
    tau = np.clip(np.interp(x, proj_q, p), p[0], p[-1])
    model_at_tau = np.interp(tau, p, model_q)
    obs_at_tau = np.interp(tau, p, obs_q)
    delta = x / np.maximum(model_at_tau, QDM_DENOMINATOR_FLOOR)
    return np.maximum(obs_at_tau * delta, 0.0)


def fit_apply_qdm(model_calib: FieldSeries, obs_calib: FieldSeries, model_proj: FieldSeries,
                  n_quantiles: int = settings.n_quantiles, threads: Optional[int] = None) -> FieldSeries:
    """
    Multiplicative quantile delta mapping.

    Per cell and projection value x: tau = empirical CDF of the projection
    window at x, clamped to [p_1, p_n]; delta = x / max(F_model_calib^-1(tau), 0.05);
    result = F_obs_calib^-1(tau) * delta, clipped at 0.

    Args:
        model_calib: Model series of the calibration window
        obs_calib: Observed series of the calibration window
        model_proj: Model series of the projection window
        n_quantiles: Number of knots
        threads: Worker threads for the per-cell work

    Returns:
        Corrected projection series
    """
    if model_proj.n_days == 0:
        raise ShapeError("projection window is empty")
    qmap = fit_qm(model_calib, obs_calib, n_quantiles)
    if model_proj.spec.shape != qmap.mask.shape or not np.array_equal(model_proj.mask, qmap.mask):
        raise ShapeError("projection grid or mask does not match the calibration")
    p = qmap.probabilities
    proj_values = model_proj.valid_values()
    proj_q = np.quantile(proj_values, p, axis=0)
    columns = parallel_map(
        lambda c: _qdm_cell(proj_values[:, c], qmap.model_quantiles[:, c], qmap.obs_quantiles[:, c], proj_q[:, c], p),
        range(proj_values.shape[1]),
        settings.resolve_threads(threads),
    )
    logger.info(f"Applied QDM to {model_proj.n_days} projection days")
    return model_proj.with_data(_scatter(model_proj, columns))


def write_quantile_tables(qmap: QuantileMap, path: str) -> str:
    """CSV export: cell_i,cell_j,p,model_q,obs_q, one row per cell and knot"""
    rows = []
    for c, (i, j) in enumerate(qmap.cells):
        for k, p in enumerate(qmap.probabilities):
            rows.append((i, j, float(p), float(qmap.model_quantiles[k, c]), float(qmap.obs_quantiles[k, c])))
    return write_csv(path, TABLE_HEADER, rows)
