"""Input validation helpers shared by the estimators and pipeline stages."""

import numpy as np


def check_pairs(X, n_users: int | None = None, n_items: int | None = None) -> np.ndarray:
    """Validate an (n_samples, 2) integer array of [user_index, item_index]."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"pairs must have shape (n_samples, 2), got {X.shape}")
    if not np.issubdtype(X.dtype, np.integer):
        Xf = np.asarray(X, dtype=np.float64)
        X = Xf.astype(np.int64)
        if not np.array_equal(Xf, X):
            raise ValueError("pair indices must be integers")
    X = np.ascontiguousarray(X, dtype=np.int64)
    if X.size and X.min() < 0:
        raise ValueError("pair indices must be non-negative")
    if n_users is not None and X.size and X[:, 0].max() >= n_users:
        raise IndexError(f"user index {X[:, 0].max()} out of range for {n_users} users")
    if n_items is not None and X.size and X[:, 1].max() >= n_items:
        raise IndexError(f"item index {X[:, 1].max()} out of range for {n_items} items")
    return X


def check_ratings(y, n_samples: int | None = None) -> np.ndarray:
    """Validate a 1-D array of finite rating values."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError(f"ratings must be 1-D, got shape {y.shape}")
    if n_samples is not None and y.shape[0] != n_samples:
        raise ValueError(f"expected {n_samples} ratings, got {y.shape[0]}")
    if y.size and not np.isfinite(y).all():
        raise ValueError("ratings must be finite")
    return y


def check_feature_matrix(X, width: int | None = None) -> np.ndarray:
    """Validate a 2-D array of finite feature values."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"feature matrix must be 2-D, got shape {X.shape}")
    if width is not None and X.shape[1] != width:
        raise ValueError(f"feature matrix has width {X.shape[1]}, expected {width}")
    if X.size and not np.isfinite(X).all():
        raise ValueError("feature matrix contains non-finite values")
    return X
