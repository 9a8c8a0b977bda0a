"""Input validation helpers shared by estimators and checks."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted

__all__ = ["check_types", "require_fitted", "check_is_fitted"]


def check_types(T) -> np.ndarray:
    """Coerce to a float (n, 2) array of (alpha, beta) type points."""
    T = check_array(T, dtype=np.float64, ensure_2d=True)
    if T.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of (alpha, beta) types, got shape {T.shape}")
    return T


def require_fitted(estimator, attributes=("scenario_",)):
    check_is_fitted(estimator, attributes)
