"""One-to-all score profiles and the 14 context features per pair.

A profile is one score-matrix row or column sorted in decreasing order: the
"perspective" of one user or one item.  The pair's shared score is located
inside both perspectives (percentile ranks, distance from each curve's
median baseline, standardized distance from each curve's mean) to form the
feature vector consumed by the cascade.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .cpm import CPM
from .exceptions import DataError
from .validation import check_pairs

FEATURE_NAMES = (
    "ryx", "rxy", "arro", "rxt", "sxt", "ryt", "syt",
    "pdx", "pdy", "fdx", "fdy", "stdx", "stdy", "original_score",
)
N_FEATURES = len(FEATURE_NAMES)

ARRO_EPS = 1e-3
SHARED_SCORE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class O2AProfile:
    """One curve: scores sorted decreasing, plus its summary statistics.

    ``baseline_score`` is the median (the curve's flat region stands in for
    non-links); ``baseline_percentile`` is the percentile of the sorted
    element nearest to that median, ties to the earlier (higher) element.
    """

    sorted_scores: np.ndarray  # float64, non-increasing
    mean: float
    std: float                 # population
    baseline_score: float
    baseline_percentile: float

    @property
    def size(self) -> int:
        return len(self.sorted_scores)


def _rank_percentiles(sorted_desc: np.ndarray, s) -> np.ndarray:
    """Percentile in [0, 1] of each query score against a descending curve.

    Rank 0 (top score) maps to 0.0 and rank N-1 to 1.0.  Queries equal to
    curve entries take the average rank of the tie group; queries between
    entries take the rank of the first entry <= s; N = 1 maps to 0.
    """
    a = sorted_desc
    n = len(a)
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    if n == 1:
        return np.zeros(s.shape)
    asc = a[::-1]
    cnt_lt = np.searchsorted(asc, s, side="left")
    cnt_le = np.searchsorted(asc, s, side="right")
    first_le = n - cnt_le
    first_lt = n - cnt_lt
    tie = cnt_le > cnt_lt
    rank = np.where(tie, 0.5 * (first_le + first_lt - 1), np.minimum(first_le, n - 1))
    return rank / (n - 1)


def build_profile(scores) -> O2AProfile:
    """Sort scores into a decreasing one-to-all curve with summary statistics."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise DataError("cannot build a profile from zero scores")
    if not np.isfinite(scores).all():
        raise DataError("profile scores must be finite")
    a = np.sort(scores)[::-1].copy()
    a.setflags(write=False)
    mean = float(a.mean())
    std = float(a.std())
    med = float(np.median(a))
    # element nearest the median; ties go to the earlier (higher) element
    asc = a[::-1]
    pos = len(a) - int(np.searchsorted(asc, med, side="right"))  # first entry <= med
    cand = [j for j in (pos - 1, pos) if 0 <= j < len(a)]
    best = min(cand, key=lambda j: (abs(a[j] - med), j))
    baseline_pct = float(_rank_percentiles(a, a[best])[0])
    return O2AProfile(a, mean, std, med, baseline_pct)


def percentile_of(profile: O2AProfile, s: float) -> float:
    """Normalized percentile rank of a score within a profile."""
    return float(_rank_percentiles(profile.sorted_scores, s)[0])


@dataclass(frozen=True)
class RPFeatureVector:
    """The 14 features of one pair, in fixed order (see FEATURE_NAMES)."""

    ryx: float
    rxy: float
    arro: float
    rxt: float
    sxt: float
    ryt: float
    syt: float
    pdx: float
    pdy: float
    fdx: float
    fdy: float
    stdx: float
    stdy: float
    original_score: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in FEATURE_NAMES])


def _assemble(ryx, rxy, s, row_mean, row_std, rxt, sxt, col_mean, col_std, ryt, syt):
    """Vectorized feature assembly; all inputs broadcast to the pair count."""
    arro = 1.0 / ((ryx + ARRO_EPS) * (rxy + ARRO_EPS))
    pdx = ryx - rxt
    pdy = rxy - ryt
    # fold distance from baseline; absolute difference when the baseline is 0
    fdx = np.where(sxt != 0.0, (s - sxt) / np.where(sxt != 0.0, sxt, 1.0), s - sxt)
    fdy = np.where(syt != 0.0, (s - syt) / np.where(syt != 0.0, syt, 1.0), s - syt)
    stdx = np.where(row_std > 0.0, (s - row_mean) / np.where(row_std > 0.0, row_std, 1.0), 0.0)
    stdy = np.where(col_std > 0.0, (s - col_mean) / np.where(col_std > 0.0, col_std, 1.0), 0.0)
    return np.column_stack([ryx, rxy, arro, rxt, sxt, ryt, syt,
                            pdx, pdy, fdx, fdy, stdx, stdy, s])


def extract(row_profile: O2AProfile, col_profile: O2AProfile, s: float) -> RPFeatureVector:
    """All 14 features for a pair whose shared score is ``s``.

    ``s`` must be present in both curves (the pair's cell belongs to its row
    and its column); absence signals a matrix/profile mismatch.
    """
    s = float(s)
    for name, prof in (("row", row_profile), ("column", col_profile)):
        if np.abs(prof.sorted_scores - s).min() > SHARED_SCORE_TOLERANCE:
            raise DataError(
                f"score {s} is absent from the {name} profile (profile/matrix mismatch)")
    row = _assemble(
        _rank_percentiles(row_profile.sorted_scores, s),
        _rank_percentiles(col_profile.sorted_scores, s),
        np.array([s]),
        row_profile.mean, row_profile.std,
        row_profile.baseline_percentile, row_profile.baseline_score,
        col_profile.mean, col_profile.std,
        col_profile.baseline_percentile, col_profile.baseline_score,
    )[0]
    return RPFeatureVector(*map(float, row))


class ProfileCache:
    """Lazily built row/column profiles of one score matrix.

    Each distinct row or column is profiled once and reused; the build
    counters make the caching observable.
    """

    def __init__(self, cpm: CPM):
        self.cpm = cpm
        self._rows: dict[int, O2AProfile] = {}
        self._cols: dict[int, O2AProfile] = {}
        self.rows_built = 0
        self.cols_built = 0

    def row(self, u: int) -> O2AProfile:
        prof = self._rows.get(u)
        if prof is None:
            prof = build_profile(self.cpm.scores[u])
            self._rows[u] = prof
            self.rows_built += 1
        return prof

    def col(self, i: int) -> O2AProfile:
        prof = self._cols.get(i)
        if prof is None:
            prof = build_profile(self.cpm.scores[:, i])
            self._cols[i] = prof
            self.cols_built += 1
        return prof


def feature_matrix(cpm: CPM, pairs, cache: ProfileCache | None = None) -> np.ndarray:
    """(n_pairs, 14) float64 feature rows for labelled pairs of one matrix.

    Profiles are built once per distinct row/column and reused across pairs.
    """
    pairs = check_pairs(pairs, cpm.n_users, cpm.n_items)
    if cache is None:
        cache = ProfileCache(cpm)
    elif cache.cpm is not cpm:
        raise ValueError("profile cache belongs to a different score matrix")
    n = len(pairs)
    if n == 0:
        return np.empty((0, N_FEATURES))
    s = cpm.scores[pairs[:, 0], pairs[:, 1]].astype(np.float64)
    ryx = np.empty(n)
    rxt = np.empty(n)
    sxt = np.empty(n)
    row_mean = np.empty(n)
    row_std = np.empty(n)
    for u in np.unique(pairs[:, 0]):
        prof = cache.row(int(u))
        idx = np.flatnonzero(pairs[:, 0] == u)
        ryx[idx] = _rank_percentiles(prof.sorted_scores, s[idx])
        rxt[idx] = prof.baseline_percentile
        sxt[idx] = prof.baseline_score
        row_mean[idx] = prof.mean
        row_std[idx] = prof.std
    rxy = np.empty(n)
    ryt = np.empty(n)
    syt = np.empty(n)
    col_mean = np.empty(n)
    col_std = np.empty(n)
    for i in np.unique(pairs[:, 1]):
        prof = cache.col(int(i))
        idx = np.flatnonzero(pairs[:, 1] == i)
        rxy[idx] = _rank_percentiles(prof.sorted_scores, s[idx])
        ryt[idx] = prof.baseline_percentile
        syt[idx] = prof.baseline_score
        col_mean[idx] = prof.mean
        col_std[idx] = prof.std
    return _assemble(ryx, rxy, s, row_mean, row_std, rxt, sxt,
                     col_mean, col_std, ryt, syt)


def stack(feature_blocks) -> np.ndarray:
    """Concatenate the 12 per-algorithm feature blocks into one wide matrix."""
    blocks = [np.asarray(b, dtype=np.float64) for b in feature_blocks]
    if len(blocks) != 12:
        raise ValueError(f"shape mismatch: expected 12 aligned feature blocks, got {len(blocks)}")
    rows = {b.shape[0] for b in blocks}
    widths = {b.shape[1] if b.ndim == 2 else -1 for b in blocks}
    if len(rows) != 1 or widths != {N_FEATURES}:
        raise ValueError("shape mismatch: blocks must share a row count and be 14 wide")
    return np.hstack(blocks)


def write_features(path: str | os.PathLike, users, items, blocks, algorithms) -> None:
    """Delimited feature dump: user, item, then one 14-column block per
    algorithm with the original score column named score_<algorithm>."""
    blocks = [np.asarray(b) for b in blocks]
    algorithms = [str(a) for a in algorithms]
    if len(blocks) != len(algorithms):
        raise ValueError("one algorithm name per feature block is required")
    cols = ["user", "item"]
    for algo in algorithms:
        cols += list(FEATURE_NAMES[:-1]) + [f"score_{algo}"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(cols) + "\n")
        for k in range(blocks[0].shape[0]):
            row = [str(users[k]), str(items[k])]
            for b in blocks:
                row += [repr(float(v)) for v in b[k]]
            fh.write("\t".join(row) + "\n")
