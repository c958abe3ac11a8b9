"""Synthetic five-point ratings benchmarks.

Generates datasets with the statistical fingerprints of the public movie /
book ratings benchmarks, at any requested shape, so the full pipeline can be
exercised when the original files are not redistributable.  Deterministic
in the seed.

The response model mixes three channels real ratings exhibit:

* an affinity channel: user and item biases plus a low-rank interaction;
* a relative-standing channel: part of the rating depends on where the item
  ranks inside the user's own affinity distribution (users grade on their
  personal curve), which is a per-user monotone squash that no linear factor
  model can represent exactly;
* heterogeneous scale usage: users differ in how much of the 1..5 range
  they use.

Rated pairs are drawn with popularity x affinity selection bias (users
mostly rate what they choose to consume).
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .rng import derive_seed


def _exact_counts(weights: np.ndarray, total: int, low: int, high: int) -> np.ndarray:
    """Integer counts proportional to weights, each in [low, high], summing
    exactly to total (largest-remainder apportionment)."""
    n = len(weights)
    if not low * n <= total <= high * n:
        raise ValueError(f"cannot place {total} ratings among {n} elements within [{low}, {high}]")
    counts = np.full(n, low, dtype=np.int64)
    remaining = total - low * n
    w = weights / weights.sum()
    share = w * remaining
    counts += np.minimum(np.floor(share).astype(np.int64), high - low)
    # distribute the leftover by largest fractional remainder, index as tiebreak
    while counts.sum() < total:
        frac = share - np.floor(share)
        room = counts < high
        frac = np.where(room, frac, -1.0)
        order = np.lexsort((np.arange(n), -frac))
        for idx in order:
            if counts.sum() >= total:
                break
            if room[idx]:
                counts[idx] += 1
    return counts


def make_synthetic_ratings(
    n_users: int = 943,
    n_items: int = 1682,
    n_ratings: int = 100_000,
    seed: int = 0,
    n_factors: int = 6,
    mean: float = 3.5,
    user_bias_std: float = 0.40,
    item_bias_std: float = 0.45,
    factor_signal_std: float = 0.50,
    scale_spread: float = 0.45,
    rank_weight: float = 0.9,
    affinity_weight: float = 0.45,
    selection_strength: float = 1.2,
    noise_std: float = 0.70,
    min_per_user: int = 20,
    popularity_exponent: float = 0.9,
    activity_sigma: float = 0.9,
) -> Dataset:
    """Five-point ratings with latent, rank-flavored structure.

    The latent response is mean + b_u + s_u * (rank_weight * (2 * pct_u(aff)
    - 1) + affinity_weight * aff) + noise where aff = b_i + p_u . q_i and
    pct_u is the percentile of the item inside user u's own affinity
    distribution.  Ratings are rounded and clipped to {1, ..., 5}; rated
    pairs are sampled with probability proportional to popularity times
    exp(selection_strength * aff); every user rates at least
    ``min_per_user`` distinct items and exactly ``n_ratings`` pairs are
    produced.
    """
    rng = np.random.default_rng(derive_seed(seed, 0xD5EED))
    activity = rng.lognormal(mean=0.0, sigma=activity_sigma, size=n_users)
    counts = _exact_counts(activity, n_ratings, min_per_user, n_items)
    pop = (np.arange(n_items) + 1.0) ** (-popularity_exponent)
    rng.shuffle(pop)
    pop /= pop.sum()

    b_u = rng.normal(0.0, user_bias_std, n_users)
    b_i = rng.normal(0.0, item_bias_std, n_items)
    s_u = np.clip(rng.lognormal(0.0, scale_spread, n_users), 0.35, 2.5)
    sigma_f = np.sqrt(factor_signal_std) / n_factors**0.25
    P = rng.normal(0.0, sigma_f, (n_users, n_factors))
    Q = rng.normal(0.0, sigma_f, (n_items, n_factors))

    user_idx = np.empty(n_ratings, dtype=np.int64)
    item_idx = np.empty(n_ratings, dtype=np.int64)
    rank_term = np.empty(n_ratings)
    affinity = np.empty(n_ratings)
    pos = 0
    for u in range(n_users):
        c = int(counts[u])
        aff_u = b_i + Q @ P[u]
        w = pop * np.exp(selection_strength * np.clip(aff_u, -3.0, 3.0))
        w /= w.sum()
        items = np.sort(rng.choice(n_items, size=c, replace=False, p=w))
        # percentile of each chosen item inside the user's own affinity curve
        pct = np.searchsorted(np.sort(aff_u), aff_u[items], side="left") / (n_items - 1)
        user_idx[pos : pos + c] = u
        item_idx[pos : pos + c] = items
        rank_term[pos : pos + c] = 2.0 * pct - 1.0
        affinity[pos : pos + c] = aff_u[items]
        pos += c
    t = (
        mean
        + b_u[user_idx]
        + s_u[user_idx] * (rank_weight * rank_term + affinity_weight * affinity)
        + rng.normal(0.0, noise_std, n_ratings)
    )
    ratings = np.clip(np.rint(t), 1.0, 5.0)
    users = [f"u{k}" for k in range(n_users)]
    items = [f"i{k}" for k in range(n_items)]
    return Dataset(users, items, user_idx, item_idx, ratings)
