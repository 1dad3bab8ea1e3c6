"""Input checks shared by the estimator wrappers and the CLI."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import ConfigError
from .models import ThreeLevelAthermal, TwoLevelAthermal

_MODEL_TYPES = (TwoLevelAthermal, ThreeLevelAthermal)


def check_model(model):
    """Return ``model`` if it is a clock model, else raise ConfigError."""
    if not isinstance(model, _MODEL_TYPES):
        raise ConfigError(f"expected a clock model, got {type(model).__name__}")
    return model


def check_times(times, horizon=None):
    """Validate window end times as a 1-d float array of positive, finite values.

    Parameters
    ----------
    times : array-like
        Scalar, 1-d array, or a single-column 2-d array.
    horizon : float, optional
        Upper bound (inclusive) on every time.
    """
    arr = np.asarray(times, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr = check_array(arr, dtype=float, ensure_2d=True)
    if arr.shape[1] != 1:
        raise ValueError(f"expected a single column of times, got shape {arr.shape}")
    out = arr[:, 0]
    if np.any(out <= 0):
        raise ValueError("times must be positive")
    if horizon is not None and np.any(out > horizon * (1 + 1e-12)):
        raise ValueError(f"times must not exceed the horizon {horizon}")
    return out
