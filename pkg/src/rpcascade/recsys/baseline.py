"""Bias baseline: global mean modulated by user and item bias terms."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .base import RatingPredictor


class BaselinePredictor(RatingPredictor):
    """mu + b_u + b_i with biases estimated by alternating least squares.

    Biases of unknown users/items are zero, so an unknown pair degrades
    gracefully to the global mean.
    """

    algorithm = "baseline"

    def __init__(self, baseline_epochs: int = 10, baseline_reg: float = 10.0,
                 clamp: bool = True, seed: int = 0):
        self.baseline_epochs = baseline_epochs
        self.baseline_reg = baseline_reg
        self.clamp = clamp
        self.seed = seed

    def _fit(self, X, y):
        self.user_bias_, self.item_bias_ = _kernels.als_baseline(
            X[:, 0], X[:, 1], y, self.global_mean_,
            self.n_users_, self.n_items_,
            float(self.baseline_reg), int(self.baseline_epochs),
        )

    def _bu(self, u) -> float:
        return float(self.user_bias_[u]) if u >= 0 else 0.0

    def _row(self, u):
        return self.global_mean_ + self._bu(u) + self.item_bias_

    def _oov_item_value(self, u):
        return self.global_mean_ + self._bu(u)

    def baseline_of(self, u: int, i: int) -> float:
        """Unclamped b_ui = mu + b_u + b_i with unknown-side biases zeroed."""
        bu = self._bu(self._user_arg(u))
        bi = float(self.item_bias_[i]) if i is not None and 0 <= int(i) < self.n_items_ else 0.0
        return self.global_mean_ + bu + bi
