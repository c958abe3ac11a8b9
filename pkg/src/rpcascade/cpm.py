"""The comprehensive prediction matrix: every user-item score, dense.

Cells are 32-bit floats (4 bytes each, the storage accounting used for
size budgeting); feature extraction promotes to 64-bit.  Generation is
row-parallel and bit-identical regardless of worker count because each row
comes from the predictor's canonical row kernel.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._binio import Reader, Writer
from .exceptions import BudgetExceededError, FormatError
from .recsys import ALGORITHM_ORDER, ALGORITHM_TAG, AlgorithmId

MAGIC = b"RPCM"
VERSION = 1

DEFAULT_BUDGET_BYTES = 4 << 30

CELL_BYTES = 4


@dataclass(frozen=True)
class CPM:
    """Dense score matrix over the full user x item cross product."""

    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    scores: np.ndarray  # float32, shape (n_users, n_items), read-only
    algorithm: AlgorithmId
    seed: int

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def n_cells(self) -> int:
        return self.n_users * self.n_items

    @property
    def n_cells_half(self) -> int:
        return self.n_cells // 2


def projected_bytes(n_users: int, n_items: int) -> int:
    """On-disk / in-memory cell payload for an n x m matrix at 4 B per cell."""
    return n_users * n_items * CELL_BYTES


def check_budget(n_users: int, n_items: int, budget_bytes: int | None):
    size = projected_bytes(n_users, n_items)
    if budget_bytes is not None and size > budget_bytes:
        raise BudgetExceededError(
            f"projected size {size:.1e} bytes ({n_users} x {n_items} cells at "
            f"{CELL_BYTES} B) exceeds budget {float(budget_bytes):.1e} bytes")


def generate_cpm(predictor, user_ids, item_ids, *,
                 budget_bytes: int | None = DEFAULT_BUDGET_BYTES,
                 workers: int = 1) -> CPM:
    """Score every (user, item) pair of the id tables with a fitted predictor.

    Positions in the id tables are the predictor's internal indices.  Refuses
    to start when the projected cell payload exceeds ``budget_bytes``.
    """
    user_ids = tuple(str(s) for s in user_ids)
    item_ids = tuple(str(s) for s in item_ids)
    n, m = len(user_ids), len(item_ids)
    if n == 0 or m == 0:
        raise ValueError("user and item id tables must be non-empty")
    if n != predictor.n_users_ or m != predictor.n_items_:
        raise ValueError(
            f"id tables ({n} x {m}) do not match the fitted index space "
            f"({predictor.n_users_} x {predictor.n_items_})")
    check_budget(n, m, budget_bytes)
    scores = np.empty((n, m), dtype=np.float32)

    def fill(rows):
        for u in rows:
            scores[u] = predictor.predict_row(u)

    if workers <= 1:
        fill(range(n))
    else:
        blocks = np.array_split(np.arange(n), workers * 4)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, (b for b in blocks if len(b))))
    scores.setflags(write=False)
    return CPM(user_ids, item_ids, scores, AlgorithmId(predictor.algorithm),
               int(getattr(predictor, "seed", 0)))


def slice_row(cpm: CPM, u: int) -> np.ndarray:
    """Copy of row u (all scores involving user u), in column order."""
    if not 0 <= u < cpm.n_users:
        raise IndexError(f"row index {u} out of range for {cpm.n_users} users")
    return cpm.scores[u].copy()


def slice_col(cpm: CPM, i: int) -> np.ndarray:
    """Copy of column i (all scores involving item i), in row order."""
    if not 0 <= i < cpm.n_items:
        raise IndexError(f"column index {i} out of range for {cpm.n_items} items")
    return cpm.scores[:, i].copy()


def save_cpm(cpm: CPM, path: str | os.PathLike) -> None:
    """Header (magic, version, algorithm tag, seed, shape, id tables) followed
    by the row-major little-endian float32 cells."""
    w = Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    w.u8(ALGORITHM_TAG[cpm.algorithm])
    w.u64(cpm.seed & 0xFFFFFFFFFFFFFFFF)
    w.u64(cpm.n_users)
    w.u64(cpm.n_items)
    for ids in (cpm.user_ids, cpm.item_ids):
        for s in ids:
            w.string(s)
    w.raw(np.ascontiguousarray(cpm.scores, dtype="<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(w.getvalue())


def load_cpm(path: str | os.PathLike) -> CPM:
    with open(path, "rb") as fh:
        data = fh.read()
    r = Reader(data, str(path))
    r.expect_magic(MAGIC)
    r.expect_version(VERSION)
    tag = r.u8()
    if tag >= len(ALGORITHM_ORDER):
        raise FormatError(f"{path}: unknown algorithm tag {tag}")
    seed = r.u64()
    n = r.u64()
    m = r.u64()
    user_ids = tuple(r.string() for _ in range(n))
    item_ids = tuple(r.string() for _ in range(m))
    raw = r.take(n * m * CELL_BYTES)
    r.done()
    scores = np.frombuffer(raw, dtype="<f4").reshape(n, m).copy()
    scores.setflags(write=False)
    return CPM(user_ids, item_ids, scores, ALGORITHM_ORDER[tag], seed)
