"""Estimator base class and the shared hyperparameter bag.

The predictors follow the scikit-learn estimator protocol: constructor
arguments are stored verbatim, ``fit(X, y)`` learns state into
underscore-suffixed attributes, and ``get_params``/``set_params`` allow the
estimators to compose with the wider ecosystem.  ``X`` is an
``(n_samples, 2)`` integer array of ``[user_index, item_index]`` and ``y``
the rating values.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass, fields

import numpy as np

from ..dataset import RATING_MAX, RATING_MIN
from ..exceptions import DataError
from ..validation import check_pairs, check_ratings


@dataclass(frozen=True)
class HyperParams:
    """Defaults for every component algorithm, mirrored from the reference
    conventions; the factory maps the relevant subset into each estimator."""

    k_neighbors: int = 40
    min_k: int = 1
    n_factors: int = 100
    nmf_factors: int = 15
    n_epochs: int = 20
    nmf_epochs: int = 50
    learning_rate: float = 0.005
    reg: float = 0.02
    nmf_reg_user: float = 0.06
    nmf_reg_item: float = 0.06
    n_user_clusters: int = 3
    n_item_clusters: int = 3
    cluster_epochs: int = 20
    baseline_epochs: int = 10
    baseline_reg: float = 10.0
    similarity: str = "msd"
    user_based: bool = True
    clamp: bool = True

    def replace(self, **kw) -> "HyperParams":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return HyperParams(**d)


class ParamsMixin:
    """get_params/set_params over the constructor signature (sklearn style)."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p.name for p in sig.parameters.values() if p.name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class RatingPredictor(ParamsMixin):
    """Base class for the initial predictors.

    Subclasses implement ``_fit`` and ``_row``; everything else (validation,
    shared statistics, clamping, pair/matrix prediction) lives here.  After
    ``fit`` the estimator is immutable and safe for concurrent prediction.

    Fitted state common to all algorithms: ``global_mean_``, per-user and
    per-item means/stds (population, training split only), and known-entity
    masks; unknown users or items fall back per algorithm.
    """

    # set by subclasses
    algorithm = None

    def fit(self, X, y, n_users: int | None = None, n_items: int | None = None):
        X = check_pairs(X, n_users, n_items)
        y = check_ratings(y, len(X))
        if len(X) == 0:
            raise DataError("empty training set")
        self.n_users_ = int(n_users if n_users is not None else X[:, 0].max() + 1)
        self.n_items_ = int(n_items if n_items is not None else X[:, 1].max() + 1)
        u = X[:, 0]
        i = X[:, 1]
        self.global_mean_ = float(y.mean())
        u_cnt = np.bincount(u, minlength=self.n_users_)
        i_cnt = np.bincount(i, minlength=self.n_items_)
        self.user_counts_ = u_cnt
        self.item_counts_ = i_cnt
        self.user_known_ = u_cnt > 0
        self.item_known_ = i_cnt > 0
        u_sum = np.bincount(u, weights=y, minlength=self.n_users_)
        i_sum = np.bincount(i, weights=y, minlength=self.n_items_)
        with np.errstate(invalid="ignore"):
            self.user_means_ = np.where(u_cnt > 0, u_sum / np.maximum(u_cnt, 1), self.global_mean_)
            self.item_means_ = np.where(i_cnt > 0, i_sum / np.maximum(i_cnt, 1), self.global_mean_)
        u_sq = np.bincount(u, weights=y * y, minlength=self.n_users_)
        i_sq = np.bincount(i, weights=y * y, minlength=self.n_items_)
        u_var = np.maximum(u_sq / np.maximum(u_cnt, 1) - self.user_means_**2, 0.0)
        i_var = np.maximum(i_sq / np.maximum(i_cnt, 1) - self.item_means_**2, 0.0)
        self.user_stds_ = np.where(u_cnt > 0, np.sqrt(u_var), 0.0)
        self.item_stds_ = np.where(i_cnt > 0, np.sqrt(i_var), 0.0)
        self._fit(X, y)
        return self

    def _fit(self, X, y):
        raise NotImplementedError

    def _row(self, u: int) -> np.ndarray:
        """Unclamped scores of user ``u`` (possibly -1 = unknown) vs all items."""
        raise NotImplementedError

    def _oov_item_value(self, u: int) -> float:
        """Unclamped fallback for an item outside the fitted index space."""
        raise NotImplementedError

    def _check_fitted(self):
        if not hasattr(self, "n_users_"):
            raise DataError(f"{type(self).__name__} is not fitted")

    def _user_arg(self, u) -> int:
        if u is None:
            return -1
        u = int(u)
        return u if 0 <= u < self.n_users_ else -1

    def predict_row(self, u) -> np.ndarray:
        """Scores of one user against every item (the canonical kernel).

        Full-matrix generation stacks these rows, so per-cell predictions are
        bit-identical whether computed alone, per row, or in parallel.
        """
        self._check_fitted()
        row = self._row(self._user_arg(u))
        if self.clamp:
            np.clip(row, RATING_MIN, RATING_MAX, out=row)
        return row

    def predict(self, u, i) -> float:
        """Score for one (user, item) pair; unknown indices use fallbacks."""
        self._check_fitted()
        if i is not None and 0 <= int(i) < self.n_items_:
            return float(self.predict_row(u)[int(i)])
        v = self._oov_item_value(self._user_arg(u))
        if self.clamp:
            v = min(max(v, RATING_MIN), RATING_MAX)
        return float(v)

    def predict_pairs(self, X) -> np.ndarray:
        """Scores for an array of [user_index, item_index] pairs."""
        self._check_fitted()
        X = check_pairs(X, self.n_users_, self.n_items_)
        out = np.empty(len(X))
        for u in np.unique(X[:, 0]):
            mask = X[:, 0] == u
            out[mask] = self.predict_row(int(u))[X[mask, 1]]
        return out

    def predict_matrix(self) -> np.ndarray:
        """Dense (n_users, n_items) float64 score matrix, row by row."""
        self._check_fitted()
        out = np.empty((self.n_users_, self.n_items_))
        for u in range(self.n_users_):
            out[u] = self.predict_row(u)
        return out


def csr_by(keys: np.ndarray, n_groups: int, *cols: np.ndarray):
    """Group parallel arrays by ``keys``: returns (ptr, sorted cols...).

    Within a group the original (storage) order is preserved, which keeps
    every downstream kernel deterministic.
    """
    order = np.argsort(keys, kind="stable")
    cnt = np.bincount(keys, minlength=n_groups)
    ptr = np.zeros(n_groups + 1, dtype=np.int64)
    np.cumsum(cnt, out=ptr[1:])
    return (ptr,) + tuple(np.ascontiguousarray(c[order]) for c in cols)
