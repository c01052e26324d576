"""
Mini-batch MSE / Adam training with early stopping, and eval-mode prediction.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from autodiff.functional import mse_loss
from autodiff.tensor import TRAIN
from griddata.types import FieldSeries, require_aligned
from maunet.models import Network, predict_array
from training.config import TrainConfig
from training.early_stopping import EarlyStopping
from training.optimizer import adam_step
from utils.exceptions import ShapeError, TrainingError
from utils.helper import write_csv
from utils.logger import logger

HISTORY_HEADER = ["epoch", "train_loss", "val_loss"]


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainedModel:
    """A network holding its best-epoch weights plus the record of how it got there"""
    model: Network
    variant_tag: str
    history: List[EpochRecord]
    best_epoch: int
    mask: np.ndarray
    initial_params: "OrderedDict[str, np.ndarray]" = field(repr=False)

    @property
    def params(self):
        return self.model.store

    @property
    def architecture(self) -> str:
        return self.model.architecture

    @property
    def epochs_run(self) -> int:
        return len(self.history)


def chronological_split(n_days: int, val_fraction: float):
    """(n_train, n_val): the last round(n * val_fraction) days, at least one, validate"""
    n_val = max(1, int(round(n_days * val_fraction)))
    return n_days - n_val, n_val


def _validation_loss(model: Network, x: np.ndarray, y: np.ndarray, mask: np.ndarray, batch_size: int) -> float:
    pred = predict_array(model, x, batch_size)
    valid = np.broadcast_to(mask, pred.shape)
    diff = np.where(valid, pred - y, 0.0)
    return float(np.sum(diff * diff) / valid.sum())


def train(model: Network, inputs: FieldSeries, targets: FieldSeries, cfg: TrainConfig,
          variant_tag: str = "GT", init: Optional[Dict[str, np.ndarray]] = None) -> TrainedModel:
    """
    Train a network in place on (inputs, targets) day pairs.

    The last val_fraction of the days, in time order, is held out for
    early stopping; the weights of the epoch with the lowest validation
    loss are restored before returning. The loss counts valid target cells
    only.

    Args:
        model: Freshly built network; its parameters are updated in place
        inputs: Input series (pre-upsampled to the target grid)
        targets: Target series aligned with inputs
        cfg: Training configuration
        variant_tag: Label of the run (TEACHER, GT, MP or KR)
        init: Optional starting weights, e.g. a previous run's best checkpoint

    Returns:
        TrainedModel
    """
    try:
        require_aligned(inputs, targets, "training pairs")
        n_days = inputs.n_days
        if n_days < 2 * cfg.batch_size:
            raise TrainingError(f"{n_days} samples is fewer than 2 x batch_size ({2 * cfg.batch_size})")
        mask = targets.mask
        if not mask.any():
            raise TrainingError("target mask has no valid cells")
        h, w = mask.shape
        if h % model.multiple or w % model.multiple:
            raise ShapeError(f"{model.architecture} needs grid dims divisible by {model.multiple}, got {h}x{w}")

        if init is not None:
            model.store.load(init)
        initial_params = model.store.snapshot()

        n_train, n_val = chronological_split(n_days, cfg.val_fraction)
        x_all, y_all = inputs.as_float64(), targets.as_float64()
        x_train, y_train = x_all[:n_train], y_all[:n_train]
        x_val, y_val = x_all[n_train:], y_all[n_train:]

        rng = np.random.default_rng(cfg.seed)
        stopper = EarlyStopping(patience=cfg.patience)
        best_params = model.store.snapshot()
        history: List[EpochRecord] = []
        step = 0
        logger.info(
            f"Training {variant_tag} ({model.architecture}, {model.parameter_count} params) on "
            f"{n_train} days, validating on {n_val}"
        )

        for epoch in range(1, cfg.max_epochs + 1):
            order = rng.permutation(n_train)
            loss_sum = 0.0
            for start in range(0, n_train, cfg.batch_size):
                batch = order[start:start + cfg.batch_size]
                model.store.zero_grad()
                pred, trace = model.forward(x_train[batch, None], TRAIN, rng)
                loss, d_pred = mse_loss(pred, y_train[batch, None], mask)
                if not np.isfinite(loss):
                    raise TrainingError(f"{variant_tag}: loss is {loss} at epoch {epoch}")
                model.backward(trace, d_pred)
                step += 1
                adam_step(model.store, model.store.grads(), cfg, step)
                loss_sum += loss * len(batch)

            train_loss = loss_sum / n_train
            val_loss = _validation_loss(model, x_val, y_val, mask, cfg.batch_size)
            if not np.isfinite(val_loss):
                raise TrainingError(f"{variant_tag}: validation loss is {val_loss} at epoch {epoch}")
            history.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
            if stopper(epoch, val_loss):
                best_params = model.store.snapshot()
            logger.info(
                f"{variant_tag} epoch {epoch}: train {train_loss:.6f} val {val_loss:.6f} "
                f"(best {stopper.best_epoch}, patience {stopper.counter}/{cfg.patience})"
            )
            if stopper.early_stop:
                logger.warning(f"{variant_tag}: early stop after epoch {epoch}, best epoch {stopper.best_epoch}")
                break

        model.store.load(best_params)
        return TrainedModel(
            model=model,
            variant_tag=variant_tag,
            history=history,
            best_epoch=stopper.best_epoch,
            mask=np.array(mask, copy=True),
            initial_params=initial_params,
        )
    except Exception as e:
        logger.error(f"Error training {variant_tag}: {e}")
        raise


def predict_series(model: TrainedModel, inputs: FieldSeries, batch_size: int = 16) -> FieldSeries:
    """
    Eval-mode prediction for every day of a series.

    Outputs are clipped at 0 and the training target mask is re-applied,
    so the result carries the targets' mask on the inputs' grid.

    Args:
        model: Trained network
        inputs: Input series on the network's grid
        batch_size: Days per forward call

    Returns:
        Predicted series with the inputs' day stamps
    """
    if inputs.spec.shape != model.mask.shape:
        raise ShapeError(f"inputs on {inputs.spec.shape} do not match the model grid {model.mask.shape}")
    raw = predict_array(model.model, inputs.as_float64(), batch_size)
    return FieldSeries.sanitized(inputs.spec, model.mask, inputs.days, raw)


def write_history(model: TrainedModel, path: str) -> str:
    """Training history CSV: epoch,train_loss,val_loss"""
    rows = [(r.epoch, r.train_loss, r.val_loss) for r in model.history]
    return write_csv(path, HISTORY_HEADER, rows)
