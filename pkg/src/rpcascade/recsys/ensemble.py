"""Equi-weighted ensemble of the twelve component predictors."""

from __future__ import annotations

import numpy as np

from .base import HyperParams, RatingPredictor


class EnsemblePredictor(RatingPredictor):
    """Arithmetic mean of the twelve component predictions (clamped before
    averaging).  Components are fitted with the same seed they would receive
    standalone, so the ensemble score is exactly the mean of the standalone
    scores."""

    algorithm = "ensemble"

    def __init__(self, hyperparams: HyperParams = HyperParams(),
                 clamp: bool = True, seed: int = 0):
        self.hyperparams = hyperparams
        self.clamp = clamp
        self.seed = seed

    def _fit(self, X, y):
        from . import COMPONENT_ALGORITHMS, make_predictor

        self.components_ = []
        for algo in COMPONENT_ALGORITHMS:
            comp = make_predictor(algo, self.hyperparams, self.seed)
            comp.fit(X, y, self.n_users_, self.n_items_)
            self.components_.append(comp)

    @classmethod
    def from_fitted(cls, components, hyperparams: HyperParams = HyperParams(),
                    clamp: bool = True, seed: int = 0) -> "EnsemblePredictor":
        """Assemble from already-fitted components (canonical order required)."""
        from . import COMPONENT_ALGORITHMS

        algos = tuple(c.algorithm for c in components)
        if algos != tuple(a.value for a in COMPONENT_ALGORITHMS):
            raise ValueError(f"components must be the 12 predictors in canonical order, got {algos}")
        self = cls(hyperparams, clamp, seed)
        first = components[0]
        self.n_users_ = first.n_users_
        self.n_items_ = first.n_items_
        self.global_mean_ = first.global_mean_
        self.user_means_ = first.user_means_
        self.item_means_ = first.item_means_
        self.user_stds_ = first.user_stds_
        self.item_stds_ = first.item_stds_
        self.user_known_ = first.user_known_
        self.item_known_ = first.item_known_
        self.user_counts_ = first.user_counts_
        self.item_counts_ = first.item_counts_
        self.components_ = list(components)
        return self

    def _row(self, u):
        rows = np.stack([c.predict_row(u) for c in self.components_], axis=0)
        return rows.mean(axis=0)

    def _oov_item_value(self, u):
        vals = [c.predict(u if u >= 0 else None, None) for c in self.components_]
        return float(np.mean(vals))
