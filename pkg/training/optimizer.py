from typing import Dict

import numpy as np

from autodiff.tensor import ParamStore
from training.config import TrainConfig
from utils.exceptions import TrainingError


def adam_step(store: ParamStore, grads: Dict[str, np.ndarray], cfg: TrainConfig, t: int) -> None:
    """
    One Adam update with bias correction, in place.

    m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)

    Args:
        store: Parameters and their moment buffers
        grads: Gradient per parameter name
        cfg: Optimizer settings
        t: 1-based step index
    """
    if t < 1:
        raise ValueError(f"Adam step index must be >= 1, got {t}")
    if set(grads) != set(store.names()):
        raise TrainingError("gradients do not match the parameter store")
    # check everything before touching any parameter
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter '{name}'")

    bias1 = 1.0 - cfg.beta1 ** t
    bias2 = 1.0 - cfg.beta2 ** t
    for entry in store:
        g = grads[entry.name]
        entry.adam_m = cfg.beta1 * entry.adam_m + (1.0 - cfg.beta1) * g
        entry.adam_v = cfg.beta2 * entry.adam_v + (1.0 - cfg.beta2) * g * g
        m_hat = entry.adam_m / bias1
        v_hat = entry.adam_v / bias2
        entry.tensor.values -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
