import sys
import os
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence

# Add the app directory to Python path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from cli.models.requests import ExperimentConfig
from evaluation.report import evaluate, write_report, write_summary
from extremes.detection import extreme_detection_scores
from extremes.indices import extreme_indices
from extremes.random_inputs import random_series
from extremes.robustness import robustness_report, write_robustness
from extremes.skew_normal import SPATIAL, TEMPORAL, SkewNoiseConfig
from griddata.export import write_map_csv, write_pgm
from griddata.gfb import read_series, write_series
from griddata.types import FieldSeries
from maunet.accounting import ACCOUNTING_HEADER, COMPARISON_HEADER, accounting_rows, comparison_rows
from services.baseline_service import baseline_service
from services.data_service import TaskData, data_service
from services.training_service import training_service
from settings.config import settings
from training.config import KR
from utils.exceptions import ConfigError
from utils.helper import write_csv
from utils.logger import logger

BIAS_DATA = "bias_data"
OBSERVED = "observed"
INDICES_HEADER = ["model", "index", "spatial_mean"]
DETECTION_HEADER = ["model", "tp", "fp", "fn", "tn", "f1", "accuracy"]


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


class EvaluationService:
    """Service for metric reports, extremes, robustness and model accounting"""

    def candidates(self, cfg: ExperimentConfig, data: TaskData,
                   checkpoints: Sequence[str] = (), predictions: Sequence[str] = ()) -> "OrderedDict[str, FieldSeries]":
        """
        Test-window series to score, always led by the raw input row.

        Explicit checkpoints or prediction files are used when given;
        otherwise every trained variant and baseline found under out_dir.

        Args:
            cfg: Experiment configuration
            data: Task series
            checkpoints: MCK1 paths to run over the test inputs
            predictions: GFB1 prediction paths

        Returns:
            Row name -> prediction series on the target grid
        """
        rows: "OrderedDict[str, FieldSeries]" = OrderedDict()
        rows[BIAS_DATA] = data.test_input
        mask = data.test_target.mask
        if checkpoints or predictions:
            for path in checkpoints:
                rows[_stem(path).upper()] = training_service.predictions_for(path, data.test_input, mask)
            for path in predictions:
                rows[_stem(path).upper()] = data_service.to_target_grid(read_series(path), data.test_target)
        else:
            rows.update(training_service.predictions(cfg, data.test_input, mask))
            for name, path in baseline_service.available(cfg).items():
                rows[name] = read_series(path)
        if len(rows) == 1:
            logger.warning("No trained models or baselines found; only the raw input is evaluated")
        return rows

    def evaluate(self, cfg: ExperimentConfig, checkpoints: Sequence[str] = (),
                 predictions: Sequence[str] = ()) -> List[str]:
        """
        Score every candidate against the test targets.

        Writes evaluation/summary.csv plus one directory of metrics, maps
        and daily series per row.

        Returns:
            Paths written
        """
        try:
            data = data_service.load_task_data(cfg)
            threads = settings.resolve_threads(cfg.threads)
            out_dir = os.path.join(cfg.out_dir, "evaluation")
            reports = []
            written = []
            for name, series in self.candidates(cfg, data, checkpoints, predictions).items():
                report = evaluate(name, series, data.test_target, cfg.peak, cfg.kl_bins, cfg.kl_epsilon, threads)
                reports.append(report)
                written.extend(write_report(report, os.path.join(out_dir, name.lower())))
            written.append(write_summary(reports, os.path.join(out_dir, "summary.csv")))
            return written
        except Exception as e:
            logger.error(f"Error evaluating models: {e}")
            raise

    def extremes(self, cfg: ExperimentConfig) -> List[str]:
        """
        Extreme indices of the observations and every candidate, plus
        extreme-day detection scores of each candidate.

        Writes extremes/indices.csv (one row per model per index), index
        maps per model, and extremes/detection.csv.

        Returns:
            Paths written
        """
        try:
            data = data_service.load_task_data(cfg)
            out_dir = os.path.join(cfg.out_dir, "extremes")
            series_by_name: "OrderedDict[str, FieldSeries]" = OrderedDict([(OBSERVED, data.test_target)])
            series_by_name.update(self.candidates(cfg, data))
            index_rows, detection_rows, written = [], [], []
            for name, series in series_by_name.items():
                indices = extreme_indices(series, cfg.dry_threshold, cfg.heavy_threshold)
                for index_name, value in indices.spatial_means().items():
                    index_rows.append((name, index_name, value))
                for index_name, values in indices.maps().items():
                    base = os.path.join(out_dir, name.lower(), f"{index_name}_map")
                    written.append(write_map_csv(series.spec, values, indices.mask, base + ".csv"))
                    written.append(write_pgm(values, indices.mask, base + ".pgm"))
                if name != OBSERVED:
                    scores = extreme_detection_scores(series, data.test_target, cfg.detection_threshold)
                    f1 = float("nan") if scores.f1 is None else scores.f1
                    detection_rows.append((name, scores.tp, scores.fp, scores.fn, scores.tn, f1, scores.accuracy))
            written.append(write_csv(os.path.join(out_dir, "indices.csv"), INDICES_HEADER, index_rows))
            written.append(write_csv(os.path.join(out_dir, "detection.csv"), DETECTION_HEADER, detection_rows))
            logger.info(f"Extremes written for {len(series_by_name)} series")
            return written
        except Exception as e:
            logger.error(f"Error computing extremes: {e}")
            raise

    def robustness(self, cfg: ExperimentConfig, checkpoint: Optional[str] = None) -> List[str]:
        """
        Drive a trained network with skew-normal random inputs that keep the
        temporal or spatial moments of the real test inputs.

        Args:
            cfg: Experiment configuration
            checkpoint: MCK1 path; defaults to the KR checkpoint

        Returns:
            Paths written
        """
        try:
            path = checkpoint or training_service.checkpoint_path(cfg, KR)
            if not os.path.isfile(path):
                raise ConfigError(f"checkpoint not found: {path} (run train first)")
            data = data_service.load_task_data(cfg)
            model = training_service.load_model(path, data.test_target.mask)
            out_dir = os.path.join(cfg.out_dir, "robustness")
            random_inputs: Dict[str, FieldSeries] = {}
            written = []
            for mode in (TEMPORAL, SPATIAL):
                noise_cfg = SkewNoiseConfig(shape=cfg.skew_shape, mode=mode, seed=cfg.noise_seed)
                random_inputs[mode] = random_series(data.test_input, noise_cfg)
                written.append(write_series(random_inputs[mode], os.path.join(out_dir, f"{mode}_input.gfb")))
            report = robustness_report(model, data.test_input, random_inputs, data.test_target)
            written.append(write_robustness(report, os.path.join(out_dir, "robustness.csv")))
            return written
        except Exception as e:
            logger.error(f"Error running robustness probe: {e}")
            raise

    def count_params(self, cfg: ExperimentConfig, h: int = 128, w: int = 128) -> List[str]:
        """
        Parameter, memory and FLOP accounting of both architectures.

        Returns:
            Paths of count_params.csv and model_comparison.csv
        """
        try:
            return [
                write_csv(os.path.join(cfg.out_dir, "count_params.csv"), ACCOUNTING_HEADER, accounting_rows(h, w)),
                write_csv(os.path.join(cfg.out_dir, "model_comparison.csv"), COMPARISON_HEADER, comparison_rows(h, w)),
            ]
        except Exception as e:
            logger.error(f"Error counting parameters: {e}")
            raise


evaluation_service = EvaluationService()
