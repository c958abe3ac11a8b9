"""Cascaded refinement model: gradient-boosted regression trees on the
context features, squared-error boosting with greedy variance-reduction
splits.

Determinism contract: training rows are first put into a canonical
lexicographic order, so fitting is invariant to input row permutation
(bit-identical trees); all split statistics accumulate in that order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._binio import Reader, Writer
from .exceptions import DataError, FormatError
from .rng import derive_seed
from .validation import check_feature_matrix, check_ratings

MAGIC = b"RPGB"
VERSION = 1


@dataclass(frozen=True)
class GBTConfig:
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    subsample: float = 1.0
    min_samples_leaf: int = 20
    seed: int = 0

    def validate(self):
        if self.n_trees < 0:
            raise ValueError("n_trees must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")


@dataclass
class GBTModel:
    """Boosted ensemble: heap-layout trees over a fixed feature width.

    ``feature[nd] >= 0`` marks an internal node splitting on that feature at
    ``threshold[nd]`` (x <= threshold goes left, children at 2*nd+1/2*nd+2);
    -1 marks a leaf holding the mean residual in ``value[nd]``.  Leaf values
    are unscaled; prediction applies the learning rate.
    """

    base_prediction: float
    trees: list[tuple[np.ndarray, np.ndarray, np.ndarray]]  # (feature, threshold, value)
    config: GBTConfig
    feature_width: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


@njit(cache=True, nogil=True)
def _grow_tree(X, res, presorted, node_of_row, max_depth, min_leaf,
               feature, threshold, value):
    n, n_features = X.shape
    for depth in range(max_depth + 1):
        lo = (1 << depth) - 1
        hi = (1 << (depth + 1)) - 1
        width = hi - lo
        cnt = np.zeros(width, dtype=np.int64)
        ssum = np.zeros(width)
        for row in range(n):
            nd = node_of_row[row]
            if lo <= nd < hi:
                cnt[nd - lo] += 1
                ssum[nd - lo] += res[row]
        if cnt.sum() == 0:
            for jj in range(width):
                feature[lo + jj] = -2
            continue
        best_gain = np.full(width, -np.inf)
        best_f = np.full(width, -1, dtype=np.int64)
        best_thr = np.zeros(width)
        if depth < max_depth:
            run_cnt = np.zeros(width, dtype=np.int64)
            run_sum = np.zeros(width)
            last_val = np.zeros(width)
            for f in range(n_features):
                for jj in range(width):
                    run_cnt[jj] = 0
                    run_sum[jj] = 0.0
                for t in range(n):
                    row = presorted[f, t]
                    nd = node_of_row[row]
                    if nd < lo or nd >= hi:
                        continue
                    jj = nd - lo
                    v = X[row, f]
                    c = run_cnt[jj]
                    if c > 0 and v > last_val[jj]:
                        nl = c
                        nr = cnt[jj] - c
                        if nl >= min_leaf and nr >= min_leaf:
                            sl = run_sum[jj]
                            sr = ssum[jj] - sl
                            gain = sl * sl / nl + sr * sr / nr
                            if gain > best_gain[jj]:
                                best_gain[jj] = gain
                                best_f[jj] = f
                                best_thr[jj] = 0.5 * (last_val[jj] + v)
                    run_cnt[jj] = c + 1
                    run_sum[jj] += res[row]
                    last_val[jj] = v
        for jj in range(width):
            nd = lo + jj
            if cnt[jj] == 0:
                feature[nd] = -2
                continue
            parent_gain = ssum[jj] * ssum[jj] / cnt[jj]
            if best_f[jj] >= 0 and best_gain[jj] > parent_gain:
                feature[nd] = best_f[jj]
                threshold[nd] = best_thr[jj]
            else:
                feature[nd] = -1
                value[nd] = ssum[jj] / cnt[jj]
        for row in range(n):
            nd = node_of_row[row]
            if lo <= nd < hi:
                f = feature[nd]
                if f >= 0:
                    node_of_row[row] = 2 * nd + 1 if X[row, f] <= threshold[nd] else 2 * nd + 2
                else:
                    node_of_row[row] = -1  # settled in a leaf


@njit(cache=True, nogil=True)
def _tree_add(X, feature, threshold, value, scale, out):
    for r in range(X.shape[0]):
        nd = 0
        while feature[nd] >= 0:
            if X[r, feature[nd]] <= threshold[nd]:
                nd = 2 * nd + 1
            else:
                nd = 2 * nd + 2
        out[r] += scale * value[nd]


def gbt_fit(X, y, config: GBTConfig = GBTConfig()) -> GBTModel:
    """Fit the boosted ensemble: each tree fits the residuals of the running
    prediction; leaf values are mean residuals."""
    config.validate()
    X = check_feature_matrix(X)
    y = check_ratings(y, X.shape[0])
    n, width = X.shape
    if n == 0:
        raise DataError("empty training set for the cascade")
    # canonical row order: model becomes a function of the row multiset
    order = np.lexsort((y, *(X[:, f] for f in range(width - 1, -1, -1))))
    Xc = np.ascontiguousarray(X[order])
    yc = y[order]
    presorted = np.empty((width, n), dtype=np.int64)
    for f in range(width):
        presorted[f] = np.argsort(Xc[:, f], kind="stable")
    base = float(yc.mean())
    pred = np.full(n, base)
    max_nodes = (1 << (config.max_depth + 1)) - 1
    trees = []
    for t in range(config.n_trees):
        res = yc - pred
        node_of_row = np.zeros(n, dtype=np.int64)
        if config.subsample < 1.0:
            rng = np.random.default_rng(derive_seed(config.seed, t))
            n_in = max(1, int(round(config.subsample * n)))
            out_rows = rng.permutation(n)[n_in:]
            node_of_row[out_rows] = -1
        feature = np.full(max_nodes, -2, dtype=np.int64)
        threshold = np.zeros(max_nodes)
        value = np.zeros(max_nodes)
        _grow_tree(Xc, res, presorted, node_of_row, config.max_depth,
                   config.min_samples_leaf, feature, threshold, value)
        _tree_add(Xc, feature, threshold, value, config.learning_rate, pred)
        trees.append((feature, threshold, value))
    return GBTModel(base, trees, config, width)


def gbt_predict(model: GBTModel, X, n_trees: int | None = None,
                clamp: bool = False) -> np.ndarray:
    """Predictions of the ensemble (optionally truncated to the first
    ``n_trees`` trees, or clamped to the rating range for reporting)."""
    X = check_feature_matrix(X, model.feature_width)
    use = model.n_trees if n_trees is None else min(n_trees, model.n_trees)
    out = np.full(X.shape[0], model.base_prediction)
    for feature, threshold, value in model.trees[:use]:
        _tree_add(X, feature, threshold, value, model.config.learning_rate, out)
    if clamp:
        np.clip(out, 1.0, 5.0, out=out)
    return out


def save_gbt(model: GBTModel, path: str | os.PathLike) -> None:
    w = Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    c = model.config
    w.u32(c.n_trees)
    w.u32(c.max_depth)
    w.f64(c.learning_rate)
    w.f64(c.subsample)
    w.u32(c.min_samples_leaf)
    w.u64(c.seed & 0xFFFFFFFFFFFFFFFF)
    w.u32(model.feature_width)
    w.f64(model.base_prediction)
    w.u32(model.n_trees)
    for feature, threshold, value in model.trees:
        w.array(feature)
        w.array(threshold)
        w.array(value)
    with open(path, "wb") as fh:
        fh.write(w.getvalue())


def load_gbt(path: str | os.PathLike) -> GBTModel:
    with open(path, "rb") as fh:
        data = fh.read()
    r = Reader(data, str(path))
    r.expect_magic(MAGIC)
    r.expect_version(VERSION)
    config = GBTConfig(
        n_trees=r.u32(), max_depth=r.u32(), learning_rate=r.f64(),
        subsample=r.f64(), min_samples_leaf=r.u32(), seed=r.u64())
    width = r.u32()
    base = r.f64()
    n_stored = r.u32()
    trees = []
    for _ in range(n_stored):
        feature = r.array()
        threshold = r.array()
        value = r.array()
        if not all(isinstance(a, np.ndarray) for a in (feature, threshold, value)):
            raise FormatError(f"{path}: malformed tree block")
        trees.append((feature, threshold, value))
    r.done()
    return GBTModel(base, trees, config, width)
