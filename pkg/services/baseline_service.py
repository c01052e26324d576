import sys
import os
from typing import Dict, List, Optional

# Add the app directory to Python path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from baselines.quantile_mapping import QuantileMap, apply_qm_series, fit_apply_qdm, fit_qm, write_quantile_tables
from cli.models.requests import DOWNSCALING, ExperimentConfig
from griddata.gfb import write_series
from griddata.types import FieldSeries
from services.data_service import TaskData, data_service
from settings.config import settings
from utils.logger import logger

QM = "QM"
QDM = "QDM"
BILINEAR = "BILINEAR"
BICUBIC = "BICUBIC"


class BaselineService:
    """Service for the statistical and interpolation baselines"""

    def baseline_dir(self, cfg: ExperimentConfig) -> str:
        return os.path.join(cfg.out_dir, "baselines")

    def baseline_path(self, cfg: ExperimentConfig, name: str) -> str:
        return os.path.join(self.baseline_dir(cfg), f"{name.lower()}.gfb")

    def compute(self, cfg: ExperimentConfig, data: TaskData, qmap: Optional[QuantileMap] = None) -> Dict[str, FieldSeries]:
        """
        Baseline predictions of the test window.

        QM and QDM are calibrated on the training window (input vs target)
        and applied to the test inputs. The downscaling task adds plain
        bilinear and bicubic interpolation of the raw low-resolution inputs.

        Args:
            cfg: Experiment configuration
            data: Task series
            qmap: Already calibrated QM map, fitted here when None

        Returns:
            Baseline name -> predicted series
        """
        threads = settings.resolve_threads(cfg.threads)
        if qmap is None:
            qmap = fit_qm(data.train_input, data.train_target, cfg.n_quantiles)
        outputs = {
            QM: apply_qm_series(qmap, data.test_input, threads),
            QDM: fit_apply_qdm(data.train_input, data.train_target, data.test_input, cfg.n_quantiles, threads),
        }
        if cfg.task == DOWNSCALING:
            outputs[BILINEAR] = data_service.to_target_grid(data.raw_test_input, data.test_target, "bilinear")
            outputs[BICUBIC] = data_service.to_target_grid(data.raw_test_input, data.test_target, "bicubic")
        return outputs

    def run(self, cfg: ExperimentConfig) -> List[str]:
        """
        Compute and write every baseline plus the calibrated QM tables.

        Args:
            cfg: Experiment configuration

        Returns:
            Paths written
        """
        try:
            data = data_service.load_task_data(cfg)
            qmap = fit_qm(data.train_input, data.train_target, cfg.n_quantiles)
            written = []
            for name, series in self.compute(cfg, data, qmap).items():
                written.append(write_series(series, self.baseline_path(cfg, name)))
            written.append(write_quantile_tables(qmap, os.path.join(self.baseline_dir(cfg), "qm_tables.csv")))
            logger.info(f"Baselines written to {self.baseline_dir(cfg)}")
            return written
        except Exception as e:
            logger.error(f"Error computing baselines: {e}")
            raise

    def available(self, cfg: ExperimentConfig) -> Dict[str, str]:
        """Baseline name -> GFB1 path for every baseline on disk"""
        found = {}
        for name in (QM, QDM, BILINEAR, BICUBIC):
            path = self.baseline_path(cfg, name)
            if os.path.isfile(path):
                found[name] = path
        return found


baseline_service = BaselineService()
