import numpy as np
from sklearn.utils import check_array

from .exceptions import ShapeError, ValidationError


def check_series(Y, name="Y", allow_empty_columns=False):
    """Finite float array of shape (T, k); 1-D input becomes one column."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2:
        raise ShapeError(f"{name} must be 1-D or 2-D, got shape {Y.shape}")
    if Y.shape[1] == 0 and allow_empty_columns:
        return Y
    try:
        return check_array(Y, dtype=np.float64, ensure_min_samples=1, input_name=name)
    except ValueError as exc:
        raise ValidationError(f"{name}: {exc}") from exc


def check_series_pair(Y, F, q):
    """Validate the endogenous/exogenous pair; ``F`` may be None when ``q == 0``."""
    Y = check_series(Y, "Y")
    if F is None:
        if q > 0:
            raise ValidationError(f"exogenous order q={q} requires an exogenous series F")
        return Y, np.zeros((Y.shape[0], 0))
    F = check_series(F, "F", allow_empty_columns=True)
    if F.shape[0] != Y.shape[0]:
        raise ShapeError(f"Y has {Y.shape[0]} rows but F has {F.shape[0]}")
    if q > 0 and F.shape[1] == 0:
        raise ValidationError(f"exogenous order q={q} requires at least one F column")
    return Y, F
