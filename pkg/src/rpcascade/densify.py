"""k-core reduction of a ratings dataset and density-targeted threshold search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, DatasetStats, stats
from .exceptions import DataError


@dataclass(frozen=True)
class DensifyResult:
    threshold_k: int
    dataset: Dataset
    stats_before: DatasetStats
    stats_after: DatasetStats


def kcore(dataset: Dataset, k: int) -> Dataset:
    """Maximal sub-dataset where every user and item has at least k ratings.

    Users and items below the threshold are deleted in passes until a fixed
    point is reached (one pass can create new violations).  The result keeps
    the surviving ids in their original order; it may be empty.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    u = dataset.user_idx
    i = dataset.item_idx
    keep = np.ones(dataset.n_ratings, dtype=bool)
    while True:
        u_deg = np.bincount(u[keep], minlength=dataset.n_users)
        i_deg = np.bincount(i[keep], minlength=dataset.n_items)
        bad = keep & ((u_deg[u] < k) | (i_deg[i] < k))
        if not bad.any():
            break
        keep &= ~bad
    return _rebuild(dataset, keep)


def _rebuild(dataset: Dataset, keep: np.ndarray) -> Dataset:
    """Dataset restricted to ``keep`` ratings with compacted id tables."""
    u = dataset.user_idx[keep]
    i = dataset.item_idx[keep]
    r = dataset.ratings[keep]
    u_alive = np.unique(u)
    i_alive = np.unique(i)
    u_map = np.full(dataset.n_users, -1, dtype=np.int64)
    u_map[u_alive] = np.arange(len(u_alive))
    i_map = np.full(dataset.n_items, -1, dtype=np.int64)
    i_map[i_alive] = np.arange(len(i_alive))
    return Dataset(
        [dataset.users[j] for j in u_alive],
        [dataset.items[j] for j in i_alive],
        u_map[u],
        i_map[i],
        r,
    )


def densify_to(
    dataset: Dataset, target_density: float, convention: str = "full"
) -> DensifyResult:
    """Smallest threshold k whose k-core reaches the target density index.

    ``convention`` selects the density definition: ``"full"`` means
    ratings / (n*m), ``"half"`` means ratings / floor(n*m/2).  k is scanned
    linearly from 1; thresholds in practice are small.
    """
    if not 0.0 < target_density < 1.0:
        raise ValueError(f"target density must be in (0, 1), got {target_density}")
    if convention not in ("full", "half"):
        raise ValueError(f"convention must be 'full' or 'half', got {convention!r}")
    before = stats(dataset)
    k = 1
    current = dataset
    while True:
        current = kcore(current, k)  # k-cores are nested, so reduce incrementally
        if current.n_ratings == 0:
            raise DataError(
                f"target density {target_density} ({convention}) unreachable: "
                f"k-core is empty at k={k}"
            )
        after = stats(current)
        density = after.density_full if convention == "full" else after.density_half
        if density >= target_density:
            return DensifyResult(k, current, before, after)
        k += 1
