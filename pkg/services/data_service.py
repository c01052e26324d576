import sys
import os
from typing import List, NamedTuple

# Add the app directory to Python path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from cli.models.requests import BIAS_CORRECTION, ExperimentConfig
from griddata.gfb import read_series, write_series
from griddata.resample import resample_series
from griddata.splits import split_at_index
from griddata.synthetic import generate_synthetic
from griddata.types import FieldSeries
from utils.exceptions import ShapeError
from utils.logger import logger


class TaskData(NamedTuple):
    """Train/test pairs on the target grid; raw_test_input keeps the input as stored"""
    train_input: FieldSeries
    train_target: FieldSeries
    test_input: FieldSeries
    test_target: FieldSeries
    raw_test_input: FieldSeries


class DataService:
    """Service for generating and loading experiment series"""

    def generate(self, cfg: ExperimentConfig) -> List[str]:
        """
        Generate the synthetic truth / biased / low-resolution triple and
        write full-length and train/test files under <out_dir>/data.

        Args:
            cfg: Experiment configuration

        Returns:
            Paths written
        """
        try:
            triple = generate_synthetic(cfg.synthetic_config())
            written = []
            for kind, series in triple._asdict().items():
                written.append(write_series(series, os.path.join(cfg.data_dir, f"{kind}.gfb")))
                train, test = split_at_index(series, cfg.n_train_days)
                written.append(write_series(train, cfg.data_path(kind, "train")))
                written.append(write_series(test, cfg.data_path(kind, "test")))
            logger.info(f"Synthetic data written to {cfg.data_dir}: {len(written)} files")
            return written
        except Exception as e:
            logger.error(f"Error generating data: {e}")
            raise

    def to_target_grid(self, series: FieldSeries, target: FieldSeries, method: str = "bilinear") -> FieldSeries:
        """
        Bring an input series onto the target grid and mask.

        Inputs already on the target grid only get the target mask applied;
        coarser inputs are interpolated first.
        """
        if series.spec.shape != target.spec.shape:
            series = resample_series(series, target.spec, method)
        return series.apply_mask(target.mask)

    def load_task_data(self, cfg: ExperimentConfig) -> TaskData:
        """
        Read the four task series and put the inputs on the target grid.

        Args:
            cfg: Experiment configuration

        Returns:
            TaskData
        """
        try:
            paths = cfg.require_files()
            train_input = read_series(paths["train_input"])
            train_target = read_series(paths["train_target"])
            test_input = read_series(paths["test_input"])
            test_target = read_series(paths["test_target"])
            if cfg.task == BIAS_CORRECTION and train_input.spec.shape != train_target.spec.shape:
                raise ShapeError(
                    f"bias correction needs inputs on the target grid, got {train_input.spec.shape} "
                    f"vs {train_target.spec.shape}"
                )
            data = TaskData(
                train_input=self.to_target_grid(train_input, train_target),
                train_target=train_target,
                test_input=self.to_target_grid(test_input, test_target),
                test_target=test_target,
                raw_test_input=test_input,
            )
            logger.info(
                f"Loaded {cfg.task} data: {train_target.n_days} train / {test_target.n_days} test days "
                f"on {train_target.spec.n_lat}x{train_target.spec.n_lon}"
            )
            return data
        except Exception as e:
            logger.error(f"Error loading task data: {e}")
            raise


data_service = DataService()
