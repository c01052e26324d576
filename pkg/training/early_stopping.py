from typing import Optional

from utils.logger import logger


class EarlyStopping():
    """
    Stop training once validation loss has failed to improve for more than
    `patience` consecutive epochs.

    Improvement is strict (loss < best). The epoch and loss of the best
    result are kept so the caller can restore its weights.

    Attributes:
        counter: consecutive epochs without improvement
        best_loss: lowest validation loss seen
        best_epoch: 1-based epoch of best_loss
        early_stop: True once counter exceeds patience
    """

    def __init__(self, patience: int = 20):
        if patience < 1:
            raise ValueError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.counter = 0
        self.best_loss: Optional[float] = None
        self.best_epoch = 0
        self.early_stop = False

    def __call__(self, epoch: int, val_loss: float) -> bool:
        """
        Record one epoch.

        Returns:
            True when this epoch is the new best
        """
        if self.best_loss is None or val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.counter = 0
            return True
        self.counter += 1
        logger.debug(f"Early stopping counter {self.counter} of {self.patience}")
        if self.counter > self.patience:
            self.early_stop = True
        return False
