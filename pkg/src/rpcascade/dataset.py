"""Ratings ingestion, dense index maps, matrix statistics and fold assignment."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .rng import FOLD_PRNG_NAME, random_permutation

RATING_MIN = 1.0
RATING_MAX = 5.0

N_FOLDS = 6
HOLDOUT_FOLD = N_FOLDS - 1  # reserved test fold; folds 0..4 are the CV folds


@dataclass(frozen=True)
class RatingTriple:
    """One user-item rating on the five-point scale."""

    user: str
    item: str
    rating: float
    timestamp: int | None = None


@dataclass(frozen=True)
class RatingsFormat:
    """Shape of a delimited ratings file: columns user, item, rating[, timestamp]."""

    delimiter: str = "\t"
    skip_header: bool = False


class Dataset:
    """De-duplicated ratings with dense 0-based user/item index maps.

    External ids are kept in first-seen order; ``user_idx[k], item_idx[k],
    ratings[k]`` describe the k-th distinct (user, item) pair.  Instances are
    immutable after construction and safe for concurrent reads.
    """

    def __init__(self, users, items, user_idx, item_idx, ratings):
        self.users: tuple[str, ...] = tuple(users)
        self.items: tuple[str, ...] = tuple(items)
        self.user_idx = np.ascontiguousarray(user_idx, dtype=np.int64)
        self.item_idx = np.ascontiguousarray(item_idx, dtype=np.int64)
        self.ratings = np.ascontiguousarray(ratings, dtype=np.float64)
        if not (len(self.user_idx) == len(self.item_idx) == len(self.ratings)):
            raise ValueError("user_idx, item_idx and ratings must have equal length")
        if len(self.user_idx) and (
            self.user_idx.max() >= len(self.users) or self.item_idx.max() >= len(self.items)
        ):
            raise ValueError("rating index out of range of the id tables")
        for a in (self.user_idx, self.item_idx, self.ratings):
            a.setflags(write=False)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def n_ratings(self) -> int:
        return len(self.ratings)

    def pairs(self) -> np.ndarray:
        """(n_ratings, 2) array of [user_index, item_index]."""
        return np.column_stack([self.user_idx, self.item_idx])

    def subset(self, mask_or_indices) -> "Dataset":
        """New Dataset restricted to the selected ratings; id tables unchanged."""
        return Dataset(
            self.users,
            self.items,
            self.user_idx[mask_or_indices],
            self.item_idx[mask_or_indices],
            self.ratings[mask_or_indices],
        )

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.users == other.users
            and self.items == other.items
            and np.array_equal(self.user_idx, other.user_idx)
            and np.array_equal(self.item_idx, other.item_idx)
            and np.array_equal(self.ratings, other.ratings)
        )

    def __repr__(self):
        return f"Dataset(n_users={self.n_users}, n_items={self.n_items}, n_ratings={self.n_ratings})"


@dataclass(frozen=True)
class DatasetStats:
    """Counts plus both density conventions.

    ``density_half`` divides by floor(n*m/2) (the convention of the benchmark
    summary tables); ``density_full`` divides by n*m (the convention of the
    densification tables).  Reports must label which one they quote.
    """

    n_users: int
    n_items: int
    n_ratings: int
    cpm_elements_half: int
    cpm_elements_full: int
    density_full: float
    density_half: float
    sparsity_full: float

    def as_dict(self) -> dict:
        return {
            "n_users": self.n_users,
            "n_items": self.n_items,
            "n_ratings": self.n_ratings,
            "cpm_elements_half": self.cpm_elements_half,
            "cpm_elements_full": self.cpm_elements_full,
            "density_full": self.density_full,
            "density_half": self.density_half,
            "sparsity_full": self.sparsity_full,
        }


def ingest(path: str | os.PathLike, fmt: RatingsFormat = RatingsFormat()) -> Dataset:
    """Parse a delimited ratings file into a Dataset.

    Duplicate (user, item) pairs keep the value of the last occurrence
    (re-rating semantics); pair order follows first occurrence.  Ratings
    outside [1, 5] and malformed lines are rejected with their line number.
    """
    users: dict[str, int] = {}
    items: dict[str, int] = {}
    pair_values: dict[tuple[int, int], float] = {}

    with open(path, "r", encoding="utf-8") as fh:
        lineno = 0
        for raw in fh:
            lineno += 1
            if lineno == 1 and fmt.skip_header:
                continue
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split(fmt.delimiter)
            if len(parts) < 3:
                raise DataError(
                    f"{path}: malformed line {lineno}: expected at least 3 "
                    f"{fmt.delimiter!r}-separated columns, got {len(parts)}"
                )
            user, item, rating_s = parts[0], parts[1], parts[2]
            try:
                rating = float(rating_s)
            except ValueError:
                raise DataError(f"{path}: malformed line {lineno}: bad rating {rating_s!r}") from None
            if not (RATING_MIN <= rating <= RATING_MAX):
                raise DataError(
                    f"{path}: line {lineno}: rating out of range: {rating} not in "
                    f"[{RATING_MIN}, {RATING_MAX}]"
                )
            u = users.setdefault(user, len(users))
            i = items.setdefault(item, len(items))
            pair_values[(u, i)] = rating  # keep the last occurrence

    if not pair_values:
        raise DataError(f"{path}: empty ratings file")

    n = len(pair_values)
    user_idx = np.empty(n, dtype=np.int64)
    item_idx = np.empty(n, dtype=np.int64)
    ratings = np.empty(n, dtype=np.float64)
    for k, ((u, i), r) in enumerate(pair_values.items()):
        user_idx[k] = u
        item_idx[k] = i
        ratings[k] = r
    return Dataset(list(users), list(items), user_idx, item_idx, ratings)


def save_ratings(dataset: Dataset, path: str | os.PathLike, fmt: RatingsFormat = RatingsFormat()) -> None:
    """Write a Dataset back out as a delimited ratings file."""
    d = fmt.delimiter
    with open(path, "w", encoding="utf-8") as fh:
        if fmt.skip_header:
            fh.write(d.join(["user", "item", "rating"]) + "\n")
        for u, i, r in zip(dataset.user_idx, dataset.item_idx, dataset.ratings):
            r = float(r)
            r_s = str(int(r)) if r.is_integer() else repr(r)
            fh.write(f"{dataset.users[u]}{d}{dataset.items[i]}{d}{r_s}\n")


def stats_from_counts(n_users: int, n_items: int, n_ratings: int) -> DatasetStats:
    """Matrix statistics from counts alone (no ratings needed)."""
    if n_users <= 0 or n_items <= 0:
        raise DataError("dataset has zero users or items")
    full = n_users * n_items
    half = math.floor(full / 2)
    return DatasetStats(
        n_users=n_users,
        n_items=n_items,
        n_ratings=n_ratings,
        cpm_elements_half=half,
        cpm_elements_full=full,
        density_full=n_ratings / full,
        density_half=n_ratings / half if half else float("inf"),
        sparsity_full=1.0 - n_ratings / full,
    )


def stats(dataset: Dataset) -> DatasetStats:
    """Matrix statistics of a dataset, both density conventions included."""
    return stats_from_counts(dataset.n_users, dataset.n_items, dataset.n_ratings)


class FoldAssignment:
    """Assignment of every rating to one of six folds (sizes differ by <= 1).

    Fold 5 is the reserved held-out test fold; folds 0-4 are the CV folds.
    Immutable and reproducible from (n_ratings, seed) with the recorded PRNG.
    """

    def __init__(self, fold_of_rating, seed: int, prng_name: str = FOLD_PRNG_NAME):
        self.fold_of_rating = np.ascontiguousarray(fold_of_rating, dtype=np.int8)
        self.fold_of_rating.setflags(write=False)
        self.seed = int(seed)
        self.prng_name = prng_name

    @property
    def n_folds(self) -> int:
        return N_FOLDS

    def indices_of(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of_rating == fold)

    def indices_in(self, folds) -> np.ndarray:
        return np.flatnonzero(np.isin(self.fold_of_rating, list(folds)))

    def fold_sizes(self) -> list[int]:
        return [int((self.fold_of_rating == f).sum()) for f in range(N_FOLDS)]


def make_folds(dataset: Dataset, seed: int) -> FoldAssignment:
    """Randomized equi-sized six-fold partition of the ratings.

    A uniformly shuffled permutation is cut into six contiguous blocks; the
    first ``n mod 6`` blocks are one element larger.  Deterministic for a
    fixed seed.
    """
    n = dataset.n_ratings
    if n < N_FOLDS:
        raise DataError(f"cannot split {n} ratings into {N_FOLDS} folds")
    perm = random_permutation(n, seed)
    base, rem = divmod(n, N_FOLDS)
    fold_of_rating = np.empty(n, dtype=np.int8)
    start = 0
    for f in range(N_FOLDS):
        size = base + (1 if f < rem else 0)
        fold_of_rating[perm[start : start + size]] = f
        start += size
    return FoldAssignment(fold_of_rating, seed)


def save_folds(folds: FoldAssignment, path: str | os.PathLike) -> None:
    """Write ``rating_index<TAB>fold`` lines under a metadata header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# seed={folds.seed} prng={folds.prng_name} folds={folds.n_folds}\n")
        for idx, f in enumerate(folds.fold_of_rating):
            fh.write(f"{idx}\t{int(f)}\n")


def load_folds(path: str | os.PathLike) -> FoldAssignment:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise DataError(f"{path}: missing fold metadata header")
        meta = dict(tok.split("=", 1) for tok in header[1:].split() if "=" in tok)
        try:
            seed = int(meta["seed"])
            prng = meta["prng"]
        except KeyError as e:
            raise DataError(f"{path}: fold header lacks {e.args[0]}") from None
        assignments = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                idx_s, fold_s = line.split("\t")
                idx, fold = int(idx_s), int(fold_s)
            except ValueError:
                raise DataError(f"{path}: malformed fold line {lineno}") from None
            if idx != len(assignments):
                raise DataError(f"{path}: fold line {lineno} out of order")
            if not 0 <= fold < N_FOLDS:
                raise DataError(f"{path}: fold line {lineno}: fold {fold} out of range")
            assignments.append(fold)
    return FoldAssignment(np.array(assignments, dtype=np.int8), seed, prng)
