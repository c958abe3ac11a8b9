"""Error metric and the paired significance test."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

EXACT_LIMIT = 20  # largest n for the exact signed-rank distribution


def rmse(y, yhat) -> float:
    """Root mean squared error between aligned truth and predictions."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise ValueError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size == 0:
        raise ValueError("rmse of empty arrays is undefined")
    return float(np.sqrt(np.mean((yhat - y) ** 2)))


class WilcoxonResult(NamedTuple):
    w: float            # min(W+, W-)
    p: float            # two-sided
    n: int              # pairs with non-zero difference
    w_plus: float
    w_minus: float
    method: str         # "exact" or "approx"


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        ranks[order[i : j + 1]] = avg
        i = j + 1
    return ranks


def _exact_p(ranks: np.ndarray, w: float) -> float:
    """P(min(W+, W-) <= w) over all 2^n equiprobable sign assignments.

    Ranks are tie-averaged so twice a rank is an integer; the distribution of
    2*W+ is built by convolution over those integers, which enumerates the
    sign assignments without walking all 2^n of them.
    """
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    total = int(r2.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for v in r2:
        shifted = np.zeros_like(counts)
        shifted[v:] = counts[: total + 1 - v]
        counts = counts + shifted
    w2 = int(math.floor(round(2.0 * w, 9)))
    p_low = counts[: w2 + 1].sum() / counts.sum()
    return min(1.0, 2.0 * p_low)


def wilcoxon_signed_rank(a, b, method: str = "auto") -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on matched samples.

    Zero differences are dropped; absolute differences are ranked with
    average-rank ties; W = min(W+, W-).  The null distribution is exact for
    n <= 20 and a normal approximation with tie-corrected variance and
    continuity correction above; all-zero differences give p = 1.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    d = a - b
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, 0.0, 0.0, "exact")
    ranks = _average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if method == "exact" or (method == "auto" and n <= EXACT_LIMIT):
        return WilcoxonResult(w, _exact_p(ranks, w), n, w_plus, w_minus, "exact")
    mean = ranks.sum() / 2.0
    var = float((ranks**2).sum()) / 4.0  # equals the tie-corrected variance
    if var <= 0.0:
        return WilcoxonResult(w, 1.0, n, w_plus, w_minus, "approx")
    z = (w - mean + 0.5) / math.sqrt(var)  # continuity correction toward the center
    p = 2.0 * 0.5 * math.erfc(-z / math.sqrt(2.0))
    return WilcoxonResult(w, max(min(p, 1.0), 5e-324), n, w_plus, w_minus, "approx")
