from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from utils.logger import logger

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-6

# f(x) -> (scalar loss, analytic dloss/dx)
Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]


class GradCheckReport(BaseModel):
    max_rel_error: float
    max_abs_error: float
    n_checked: int
    tolerance: float
    passed: bool


def numerical_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = DEFAULT_STEP,
                       indices: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Central-difference gradient of a scalar function.

    Args:
        f: Scalar function of x
        x: Point of evaluation (float64)
        step: Finite-difference step
        indices: Flat indices to probe; all entries when None

    Returns:
        Array shaped like x; entries not probed are 0
    """
    x = np.array(x, dtype=np.float64, copy=True)
    flat = x.reshape(-1)
    grad = np.zeros_like(flat)
    probe = range(flat.size) if indices is None else indices
    for k in probe:
        original = flat[k]
        flat[k] = original + step
        f_plus = f(x)
        flat[k] = original - step
        f_minus = f(x)
        flat[k] = original
        grad[k] = (f_plus - f_minus) / (2.0 * step)
    return grad.reshape(x.shape)


def gradient_check(f: Objective, x: np.ndarray, tolerance: float = DEFAULT_TOLERANCE,
                   step: float = DEFAULT_STEP, indices: Optional[Sequence[int]] = None) -> GradCheckReport:
    """
    Compare the analytic gradient of f with central differences.

    The relative error is max|analytic - numeric| divided by the largest
    magnitude in either gradient, so entries near zero do not blow it up.

    Args:
        f: Objective returning (loss, analytic gradient wrt x)
        x: Point of evaluation
        tolerance: Pass threshold on the relative error
        step: Finite-difference step
        indices: Optional subset of flat indices to probe

    Returns:
        GradCheckReport
    """
    x = np.asarray(x, dtype=np.float64)
    _, analytic = f(x.copy())
    analytic = np.asarray(analytic, dtype=np.float64).reshape(-1)
    numeric = numerical_gradient(lambda z: f(z)[0], x, step, indices).reshape(-1)
    probe = np.arange(x.size) if indices is None else np.asarray(list(indices), dtype=np.int64)

    diff = np.abs(analytic[probe] - numeric[probe])
    scale = max(float(np.max(np.abs(analytic[probe]), initial=0.0)),
                float(np.max(np.abs(numeric[probe]), initial=0.0)),
                np.finfo(np.float64).tiny)
    max_abs = float(np.max(diff, initial=0.0))
    max_rel = max_abs / scale
    report = GradCheckReport(
        max_rel_error=max_rel,
        max_abs_error=max_abs,
        n_checked=int(probe.size),
        tolerance=tolerance,
        passed=max_rel <= tolerance,
    )
    if not report.passed:
        logger.warning(f"Gradient check failed: rel error {max_rel:.3e} > {tolerance:.1e}")
    return report
