"""Co-clustering predictor: co-cluster mean plus user and item offsets."""

from __future__ import annotations

import numpy as np

from ..rng import derive_seed
from . import _kernels
from .base import RatingPredictor


class CoClusteringPredictor(RatingPredictor):
    """Users and items are assigned to clusters by alternating reassignment;
    the prediction is the co-cluster mean corrected by how far the user and
    item sit from their own cluster means.  Unknown users or items fall back
    to the global mean."""

    algorithm = "co_clustering"

    def __init__(self, n_user_clusters: int = 3, n_item_clusters: int = 3,
                 n_epochs: int = 20, clamp: bool = True, seed: int = 0):
        self.n_user_clusters = n_user_clusters
        self.n_item_clusters = n_item_clusters
        self.n_epochs = n_epochs
        self.clamp = clamp
        self.seed = seed

    def _fit(self, X, y):
        rng = np.random.default_rng(derive_seed(self.seed, 4))
        ucl = rng.integers(0, self.n_user_clusters, self.n_users_).astype(np.int64)
        icl = rng.integers(0, self.n_item_clusters, self.n_items_).astype(np.int64)
        ucl, icl, cm, ucm, icm = _kernels.cocluster_fit(
            X[:, 0], X[:, 1], y, self.n_users_, self.n_items_, ucl, icl,
            int(self.n_user_clusters), int(self.n_item_clusters), int(self.n_epochs),
            self.global_mean_, self.user_means_, self.item_means_)
        self.user_clusters_ = ucl
        self.item_clusters_ = icl
        self.cocluster_means_ = cm
        self.user_cluster_means_ = ucm
        self.item_cluster_means_ = icm

    def _row(self, u):
        return _kernels.cocluster_row(
            u, self.user_clusters_, self.item_clusters_, self.cocluster_means_,
            self.user_cluster_means_, self.item_cluster_means_, self.global_mean_,
            self.user_means_, self.item_means_, self.user_known_, self.item_known_,
            self.n_users_)

    def _oov_item_value(self, u):
        return self.global_mean_
