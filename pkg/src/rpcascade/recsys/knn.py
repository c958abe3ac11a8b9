"""The four neighborhood predictors (basic / means / z-score / baseline).

Orientation is user-based by default; item-based mirrors the formulas with
the user and item roles exchanged.  All variants share the similarity table,
which may be passed pre-computed to ``fit`` to avoid recomputation.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .base import RatingPredictor, csr_by
from .similarity import METRICS


class _KnnBase(RatingPredictor):
    _mode = None  # set by subclasses

    def __init__(self, k: int = 40, min_k: int = 1, similarity: str = "msd",
                 user_based: bool = True, baseline_epochs: int = 10,
                 baseline_reg: float = 10.0, clamp: bool = True, seed: int = 0):
        self.k = k
        self.min_k = min_k
        self.similarity = similarity
        self.user_based = user_based
        self.baseline_epochs = baseline_epochs
        self.baseline_reg = baseline_reg
        self.clamp = clamp
        self.seed = seed

    def fit(self, X, y, n_users=None, n_items=None, similarity_matrix=None):
        self._sim_override = similarity_matrix
        try:
            return super().fit(X, y, n_users, n_items)
        finally:
            del self._sim_override

    def _fit(self, X, y):
        if self.similarity not in METRICS:
            raise ValueError(f"unknown similarity metric {self.similarity!r}")
        u = X[:, 0]
        i = X[:, 1]
        if self._mode == _kernels.KNN_BASELINE:
            self.user_bias_, self.item_bias_ = _kernels.als_baseline(
                u, i, y, self.global_mean_, self.n_users_, self.n_items_,
                float(self.baseline_reg), int(self.baseline_epochs))
        else:
            self.user_bias_ = np.zeros(self.n_users_)
            self.item_bias_ = np.zeros(self.n_items_)
        sim_fn = _kernels.msd_sim if self.similarity == "msd" else _kernels.cosine_sim
        if self.user_based:
            self.item_ptr_, self.item_users_, self.item_vals_ = csr_by(
                i, self.n_items_, u, y)
            if self._sim_override is not None:
                self.similarity_ = np.asarray(self._sim_override, dtype=np.float64)
            else:
                self.similarity_ = sim_fn(self.item_ptr_, self.item_users_,
                                          self.item_vals_, self.n_users_)
        else:
            self.user_ptr_, self.user_items_, self.user_vals_ = csr_by(
                u, self.n_users_, i, y)
            if self._sim_override is not None:
                self.similarity_ = np.asarray(self._sim_override, dtype=np.float64)
            else:
                self.similarity_ = sim_fn(self.user_ptr_, self.user_items_,
                                          self.user_vals_, self.n_items_)
            self.item_rank_ = _kernels.item_rank_matrix(self.similarity_)

    def _row(self, u):
        if self.user_based:
            sim_row = self.similarity_[u] if u >= 0 else np.zeros(self.n_users_)
            return _kernels.knn_user_row(
                u, self._mode, sim_row, self.item_ptr_, self.item_users_,
                self.item_vals_, int(self.k), int(self.min_k), self.global_mean_,
                self.user_means_, self.user_stds_, self.user_bias_,
                self.item_bias_, self.user_known_)
        if u >= 0:
            s, e = self.user_ptr_[u], self.user_ptr_[u + 1]
            items, vals = self.user_items_[s:e], self.user_vals_[s:e]
        else:
            items = np.empty(0, dtype=np.int64)
            vals = np.empty(0, dtype=np.float64)
        return _kernels.knn_item_row(
            u, self._mode, self.similarity_, self.item_rank_, items, vals,
            int(self.k), int(self.min_k), self.global_mean_, self.item_means_,
            self.item_stds_, self.user_bias_, self.item_bias_,
            self.user_known_, self.n_users_)

    def _oov_item_value(self, u):
        # an out-of-vocabulary item has no raters: the mode's center applies
        uk = u >= 0 and self.user_known_[u]
        if self._mode == _kernels.KNN_BASIC:
            return self.global_mean_
        if self._mode == _kernels.KNN_BASELINE:
            return self.global_mean_ + (self.user_bias_[u] if uk else 0.0)
        if self.user_based:
            return self.user_means_[u] if uk else self.global_mean_
        return self.global_mean_


class KnnBasicPredictor(_KnnBase):
    """Similarity-weighted mean of the neighbors' raw ratings."""

    algorithm = "knn_basic"
    _mode = _kernels.KNN_BASIC


class KnnMeansPredictor(_KnnBase):
    """Neighbors contribute deviations from their own mean rating."""

    algorithm = "knn_means"
    _mode = _kernels.KNN_MEANS


class KnnZscorePredictor(_KnnBase):
    """Neighbors contribute z-scored deviations, rescaled by the target's std."""

    algorithm = "knn_zscore"
    _mode = _kernels.KNN_ZSCORE


class KnnBaselinePredictor(_KnnBase):
    """Neighbors contribute deviations from their bias-baseline rating."""

    algorithm = "knn_baseline"
    _mode = _kernels.KNN_BASELINE
