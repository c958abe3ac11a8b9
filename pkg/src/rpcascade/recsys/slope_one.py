"""Slope One: the user's mean shifted by average item-item rating deviations."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .base import RatingPredictor, csr_by


class SlopeOnePredictor(RatingPredictor):
    """mu_u + mean of dev(i, j) over the user's other rated items j that
    share at least one co-rater with i; dev is antisymmetric by construction.
    Unknown users fall back to the global mean."""

    algorithm = "slope_one"

    def __init__(self, clamp: bool = True, seed: int = 0):
        self.clamp = clamp
        self.seed = seed

    def _fit(self, X, y):
        self.user_ptr_, self.user_items_, self.user_vals_ = csr_by(
            X[:, 0], self.n_users_, X[:, 1], y)
        self.deviations_, self.dev_counts_ = _kernels.slope_one_fit(
            self.user_ptr_, self.user_items_, self.user_vals_, self.n_items_)

    def _row(self, u):
        uk = u >= 0 and self.user_known_[u]
        if uk:
            s, e = self.user_ptr_[u], self.user_ptr_[u + 1]
            items = self.user_items_[s:e]
            mean_u = float(self.user_means_[u])
        else:
            items = np.empty(0, dtype=np.int64)
            mean_u = self.global_mean_
        return _kernels.slope_one_row(u, self.deviations_, self.dev_counts_,
                                      items, self.global_mean_, mean_u, uk)

    def _oov_item_value(self, u):
        uk = u >= 0 and self.user_known_[u]
        return float(self.user_means_[u]) if uk else self.global_mean_
