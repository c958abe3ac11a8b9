"""Pairwise user-user / item-item similarity over co-ratings."""

from __future__ import annotations

import numpy as np

from ..dataset import Dataset
from . import _kernels
from .base import csr_by

METRICS = ("msd", "cosine")


def similarity_matrix(dataset: Dataset, kind: str, metric: str = "msd") -> np.ndarray:
    """Full similarity table for one side of the bipartite graph.

    ``kind`` is ``"user"`` or ``"item"``; ``metric`` is mean-squared-
    difference (default, sim = 1/(msd+1)) or cosine.  Elements with no
    co-ratings score 0.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown similarity metric {metric!r}")
    if kind == "user":
        ptr, idxs, vals = csr_by(dataset.item_idx, dataset.n_items, dataset.user_idx, dataset.ratings)
        n = dataset.n_users
    elif kind == "item":
        ptr, idxs, vals = csr_by(dataset.user_idx, dataset.n_users, dataset.item_idx, dataset.ratings)
        n = dataset.n_items
    else:
        raise ValueError(f"kind must be 'user' or 'item', got {kind!r}")
    fn = _kernels.msd_sim if metric == "msd" else _kernels.cosine_sim
    return fn(ptr, idxs, vals, n)


def similarity(kind: str, a: int, b: int, dataset: Dataset, metric: str = "msd") -> float:
    """Similarity between two users or two items of a dataset."""
    if metric not in METRICS:
        raise ValueError(f"unknown similarity metric {metric!r}")
    if kind == "user":
        own, other = dataset.user_idx, dataset.item_idx
    elif kind == "item":
        own, other = dataset.item_idx, dataset.user_idx
    else:
        raise ValueError(f"kind must be 'user' or 'item', got {kind!r}")
    va = {o: r for o, r in zip(other[own == a], dataset.ratings[own == a])}
    vb = {o: r for o, r in zip(other[own == b], dataset.ratings[own == b])}
    common = sorted(set(va) & set(vb))
    if not common:
        return 0.0
    xa = np.array([va[c] for c in common])
    xb = np.array([vb[c] for c in common])
    if metric == "msd":
        msd = float(np.mean((xa - xb) ** 2))
        return 1.0 / (msd + 1.0)
    den = float(np.sqrt((xa * xa).sum() * (xb * xb).sum()))
    return float(xa @ xb / den) if den > 0 else 0.0
