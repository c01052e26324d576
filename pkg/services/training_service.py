import sys
import os
from typing import Dict, List

import numpy as np

# Add the app directory to Python path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from autodiff.checkpoint import read_checkpoint, write_checkpoint
from cli.models.requests import ExperimentConfig
from griddata.gfb import read_series, write_series
from griddata.types import FieldSeries
from maunet.models import architecture_from_names, build_model
from services.data_service import data_service
from training.config import VARIANTS
from training.trainer import TrainedModel, predict_series, write_history
from training.workflow import PipelineResult, run_pipeline
from utils.logger import logger

CHECKPOINT_SUFFIX = ".mck1"


class TrainingService:
    """Service for training the distillation pipeline and running checkpoints"""

    def checkpoint_dir(self, cfg: ExperimentConfig) -> str:
        return os.path.join(cfg.out_dir, "checkpoints")

    def checkpoint_path(self, cfg: ExperimentConfig, variant: str) -> str:
        return os.path.join(self.checkpoint_dir(cfg), f"{variant.lower()}{CHECKPOINT_SUFFIX}")

    def train(self, cfg: ExperimentConfig) -> List[str]:
        """
        Run teacher, GT, MP and KR training and write their artifacts.

        Writes checkpoints/<variant>.mck1, history/<variant>.csv and the
        teacher's eval-mode predictions used as MP targets.

        Args:
            cfg: Experiment configuration

        Returns:
            Paths written
        """
        try:
            data = data_service.load_task_data(cfg)
            result = run_pipeline(data.train_input, data.train_target, cfg.train_config())
            written = []
            for variant in VARIANTS:
                trained = self._variant(result, variant)
                written.append(write_checkpoint(trained.params, self.checkpoint_path(cfg, variant)))
                written.append(write_history(trained, os.path.join(cfg.out_dir, "history", f"{variant.lower()}.csv")))
            written.append(write_series(result.teacher_prediction, os.path.join(cfg.out_dir, "teacher_prediction.gfb")))
            logger.info(f"Training artifacts written to {cfg.out_dir}")
            return written
        except Exception as e:
            logger.error(f"Error training models: {e}")
            raise

    def _variant(self, result: PipelineResult, variant: str) -> TrainedModel:
        return getattr(result, variant.lower())

    def load_model(self, path: str, mask: np.ndarray, variant_tag: str = "") -> TrainedModel:
        """
        Rebuild a trained network from an MCK1 checkpoint.

        Args:
            path: Checkpoint path
            mask: Mask of the grid the model was trained on
            variant_tag: Label; defaults to the file stem

        Returns:
            TrainedModel without history
        """
        try:
            values = read_checkpoint(path)
            model = build_model(architecture_from_names(values.keys()), seed=0)
            model.store.load(values)
            tag = variant_tag or os.path.splitext(os.path.basename(path))[0].upper()
            logger.info(f"Loaded {model.architecture} checkpoint {path} as {tag}")
            return TrainedModel(
                model=model,
                variant_tag=tag,
                history=[],
                best_epoch=0,
                mask=np.array(mask, dtype=bool),
                initial_params=model.store.snapshot(),
            )
        except Exception as e:
            logger.error(f"Error loading checkpoint {path}: {e}")
            raise

    def available_checkpoints(self, cfg: ExperimentConfig) -> Dict[str, str]:
        """Variant tag -> checkpoint path for every trained variant on disk"""
        found = {}
        for variant in VARIANTS:
            path = self.checkpoint_path(cfg, variant)
            if os.path.isfile(path):
                found[variant] = path
        return found

    def predict(self, cfg: ExperimentConfig, checkpoint: str, input_path: str = "", output: str = "") -> List[str]:
        """
        Run a checkpoint over an input series and write the prediction.

        Args:
            cfg: Experiment configuration
            checkpoint: MCK1 checkpoint path
            input_path: GFB1 input series; defaults to the test inputs
            output: Destination GFB1 path; defaults to predictions/<stem>.gfb

        Returns:
            Paths written
        """
        try:
            data = data_service.load_task_data(cfg)
            inputs = data.test_input
            if input_path:
                inputs = data_service.to_target_grid(read_series(input_path), data.test_target)
            prediction = self.predictions_for(checkpoint, inputs, data.test_target.mask)
            stem = os.path.splitext(os.path.basename(checkpoint))[0]
            path = output or os.path.join(cfg.out_dir, "predictions", f"{stem}.gfb")
            return [write_series(prediction, path)]
        except Exception as e:
            logger.error(f"Error predicting with {checkpoint}: {e}")
            raise

    def predictions_for(self, path: str, inputs: FieldSeries, mask: np.ndarray, variant_tag: str = "") -> FieldSeries:
        return predict_series(self.load_model(path, mask, variant_tag), inputs)

    def predictions(self, cfg: ExperimentConfig, inputs: FieldSeries, mask: np.ndarray) -> Dict[str, FieldSeries]:
        """Predictions of every checkpoint on disk, keyed by variant tag"""
        return {
            variant: self.predictions_for(path, inputs, mask, variant)
            for variant, path in self.available_checkpoints(cfg).items()
        }


training_service = TrainingService()
