"""The two random reference predictors.

Both draw per-cell values from a splitmix64 hash of (seed, user, item), so a
score matrix is reproducible and every cell is stable regardless of which
rows are generated, in which order, or on how many workers.
"""

from __future__ import annotations

import numpy as np

from ..rng import cell_hash, splitmix64, to_unit
from .base import RatingPredictor

_OOV_ITEM = 0xFFFFFFFF  # virtual column used when the item index is unknown


class NegativeControlPredictor(RatingPredictor):
    """Uniform draw over the discrete ratings {1, 2, 3, 4, 5}."""

    algorithm = "negative_control"

    def __init__(self, clamp: bool = True, seed: int = 0):
        self.clamp = clamp
        self.seed = seed

    def _fit(self, X, y):
        self._rebind()

    def _rebind(self):
        self._stream_seed = int(splitmix64(self.seed, 0x4E43))  # 'NC'

    def _cells(self, u, items) -> np.ndarray:
        h = cell_hash(self._stream_seed, np.uint64(u & 0xFFFFFFFFFFFFFFFF), items)
        return 1.0 + np.floor(to_unit(h) * 5.0)

    def _row(self, u):
        return self._cells(u, np.arange(self.n_items_, dtype=np.uint64))

    def _oov_item_value(self, u):
        return float(self._cells(u, np.uint64(_OOV_ITEM)))


class RandomNormalPredictor(RatingPredictor):
    """Draw from a normal fit to the training ratings by maximum likelihood.

    The per-cell standard normal variate comes from a Box-Muller transform of
    two hash-derived uniforms.
    """

    algorithm = "random_normal"

    def __init__(self, clamp: bool = True, seed: int = 0):
        self.clamp = clamp
        self.seed = seed

    def _fit(self, X, y):
        self.mu_ = float(y.mean())
        self.sigma_ = float(np.sqrt(np.mean((y - self.mu_) ** 2)))  # MLE (population) std
        self._rebind()

    def _rebind(self):
        self._stream_seed = int(splitmix64(self.seed, 0x524E))  # 'RN'

    def _cells(self, u, items) -> np.ndarray:
        h1 = cell_hash(self._stream_seed, np.uint64(u & 0xFFFFFFFFFFFFFFFF), items)
        h2 = splitmix64(0x42, h1)
        u1 = to_unit(h1)
        u2 = to_unit(h2)
        z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
        return self.mu_ + self.sigma_ * z

    def _row(self, u):
        return self._cells(u, np.arange(self.n_items_, dtype=np.uint64))

    def _oov_item_value(self, u):
        return float(self._cells(u, np.uint64(_OOV_ITEM)))
