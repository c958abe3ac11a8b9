"""Reciprocal-perspective cascade for five-point rating prediction.

Pipeline: ingest ratings -> (optionally) densify to a k-core -> fit initial
predictors -> generate comprehensive prediction matrices -> extract one-to-
all context features per pair -> train a gradient-boosted cascade that
refines the initial scores -> evaluate with cross-validation and paired
significance tests.
"""

__version__ = "0.1.0"

from .dataset import (Dataset, DatasetStats, FoldAssignment, RatingsFormat,
                      RatingTriple, ingest, load_folds, make_folds,
                      save_folds, save_ratings, stats, stats_from_counts)
from .densify import DensifyResult, densify_to, kcore
from .exceptions import (BadMagicError, BudgetExceededError, DataError,
                         FormatError, RpError, TruncatedPayloadError,
                         VersionMismatchError)

__all__ = [
    "__version__",
    "Dataset", "DatasetStats", "FoldAssignment", "RatingsFormat", "RatingTriple",
    "ingest", "save_ratings", "stats", "stats_from_counts",
    "make_folds", "save_folds", "load_folds",
    "DensifyResult", "kcore", "densify_to",
    "RpError", "DataError", "FormatError", "BadMagicError",
    "VersionMismatchError", "TruncatedPayloadError", "BudgetExceededError",
]
