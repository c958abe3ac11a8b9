"""Latent factor models: biased SGD factorization, its implicit-feedback
extension, and non-negative factorization with multiplicative updates."""

from __future__ import annotations

import numpy as np

from ..rng import derive_seed
from . import _kernels
from .base import RatingPredictor, csr_by


class SvdPredictor(RatingPredictor):
    """mu + b_u + b_i + q_i^T p_u, trained by SGD on the regularized squared
    error.  Unknown users/items drop their bias and the factor term."""

    algorithm = "svd"

    def __init__(self, n_factors: int = 100, n_epochs: int = 20,
                 learning_rate: float = 0.005, reg: float = 0.02,
                 clamp: bool = True, seed: int = 0):
        self.n_factors = n_factors
        self.n_epochs = n_epochs
        self.learning_rate = learning_rate
        self.reg = reg
        self.clamp = clamp
        self.seed = seed

    def _init_factors(self, tag: int):
        rng = np.random.default_rng(derive_seed(self.seed, tag))
        P = rng.normal(0.0, 0.1, (self.n_users_, self.n_factors))
        Q = rng.normal(0.0, 0.1, (self.n_items_, self.n_factors))
        return P, Q, rng

    def _fit(self, X, y):
        P, Q, _ = self._init_factors(1)
        bu = np.zeros(self.n_users_)
        bi = np.zeros(self.n_items_)
        _kernels.sgd_svd(X[:, 0], X[:, 1], y, self.global_mean_, bu, bi, P, Q,
                         int(self.n_epochs), float(self.learning_rate), float(self.reg))
        self.user_bias_, self.item_bias_ = bu, bi
        self.user_factors_, self.item_factors_ = P, Q

    def _gate(self, u) -> np.ndarray:
        uk = u >= 0 and self.user_known_[u]
        return self.item_known_ if uk else np.zeros(self.n_items_, dtype=bool)

    def _base(self, u) -> np.ndarray:
        bu = self.user_bias_[u] if u >= 0 else 0.0
        return self.global_mean_ + bu + self.item_bias_

    def _user_vec(self, u) -> np.ndarray:
        return self.user_factors_[u] if u >= 0 else np.zeros(self.n_factors)

    def _row(self, u):
        return _kernels.factor_row(self._base(u), self._user_vec(u),
                                   self.item_factors_, self._gate(u))

    def _oov_item_value(self, u):
        return self.global_mean_ + (self.user_bias_[u] if u >= 0 else 0.0)

    def training_objective(self, X, y) -> float:
        """Regularized squared error of Eq.-style SGD objective on (X, y)."""
        u = X[:, 0]
        i = X[:, 1]
        pred = (self.global_mean_ + self.user_bias_[u] + self.item_bias_[i]
                + np.einsum("ij,ij->i", self.user_factors_[u], self.item_factors_[i]))
        sq = float(((y - pred) ** 2).sum())
        reg = float(self.reg) * float(
            (self.user_bias_[u] ** 2).sum() + (self.item_bias_[i] ** 2).sum()
            + (self.user_factors_[u] ** 2).sum() + (self.item_factors_[i] ** 2).sum())
        return sq + reg


class SvdppPredictor(SvdPredictor):
    """Factor model with implicit feedback: the user vector is augmented by
    the normalized sum of implicit item factors over the items they rated."""

    algorithm = "svdpp"

    def _fit(self, X, y):
        P, Q, rng = self._init_factors(2)
        Y = rng.normal(0.0, 0.1, (self.n_items_, self.n_factors))
        bu = np.zeros(self.n_users_)
        bi = np.zeros(self.n_items_)
        iu_ptr, iu_items = csr_by(X[:, 0], self.n_users_, X[:, 1])
        _kernels.sgd_svdpp(X[:, 0], X[:, 1], y, self.global_mean_, bu, bi, P, Q, Y,
                           iu_ptr, iu_items, int(self.n_epochs),
                           float(self.learning_rate), float(self.reg))
        self.user_bias_, self.item_bias_ = bu, bi
        self.user_factors_, self.item_factors_ = P, Q
        self.implicit_factors_ = Y
        self.user_implicit_ = _kernels.user_implicit_profiles(Y, iu_ptr, iu_items, self.n_users_)

    def _user_vec(self, u):
        if u < 0:
            return np.zeros(self.n_factors)
        return self.user_factors_[u] + self.user_implicit_[u]


class NmfPredictor(RatingPredictor):
    """q_i^T p_u with strictly positive factors kept positive by
    multiplicative updates; unknown users/items fall back to the mean."""

    algorithm = "nmf"

    def __init__(self, n_factors: int = 15, n_epochs: int = 50,
                 reg_user: float = 0.06, reg_item: float = 0.06,
                 clamp: bool = True, seed: int = 0):
        self.n_factors = n_factors
        self.n_epochs = n_epochs
        self.reg_user = reg_user
        self.reg_item = reg_item
        self.clamp = clamp
        self.seed = seed

    def _fit(self, X, y):
        rng = np.random.default_rng(derive_seed(self.seed, 3))
        # uniform in (0, 1): strictly positive start
        P = rng.uniform(np.finfo(np.float64).tiny, 1.0, (self.n_users_, self.n_factors))
        Q = rng.uniform(np.finfo(np.float64).tiny, 1.0, (self.n_items_, self.n_factors))
        _kernels.nmf_fit(X[:, 0], X[:, 1], y, P, Q, int(self.n_epochs),
                         float(self.reg_user), float(self.reg_item),
                         self.user_counts_.astype(np.float64),
                         self.item_counts_.astype(np.float64))
        self.user_factors_, self.item_factors_ = P, Q

    def _row(self, u):
        uk = u >= 0 and self.user_known_[u]
        gate = self.item_known_ if uk else np.zeros(self.n_items_, dtype=bool)
        pu = self.user_factors_[u] if u >= 0 else np.zeros(self.n_factors)
        return _kernels.nmf_row(pu, self.item_factors_, gate, self.global_mean_)

    def _oov_item_value(self, u):
        return self.global_mean_
