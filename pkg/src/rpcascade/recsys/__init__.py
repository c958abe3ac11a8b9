"""The thirteen initial predictors behind a common estimator interface."""

from __future__ import annotations

from enum import Enum

from ..dataset import Dataset
from .base import HyperParams, RatingPredictor
from .baseline import BaselinePredictor
from .co_clustering import CoClusteringPredictor
from .ensemble import EnsemblePredictor
from .factorization import NmfPredictor, SvdPredictor, SvdppPredictor
from .knn import (KnnBaselinePredictor, KnnBasicPredictor, KnnMeansPredictor,
                  KnnZscorePredictor)
from .random_preds import NegativeControlPredictor, RandomNormalPredictor
from .similarity import similarity, similarity_matrix
from .slope_one import SlopeOnePredictor


class AlgorithmId(str, Enum):
    NEGATIVE_CONTROL = "negative_control"
    RANDOM_NORMAL = "random_normal"
    BASELINE = "baseline"
    KNN_BASIC = "knn_basic"
    KNN_MEANS = "knn_means"
    KNN_ZSCORE = "knn_zscore"
    KNN_BASELINE = "knn_baseline"
    SVD = "svd"
    SVDPP = "svdpp"
    NMF = "nmf"
    SLOPE_ONE = "slope_one"
    CO_CLUSTERING = "co_clustering"
    ENSEMBLE = "ensemble"

    def __str__(self) -> str:
        return self.value


# Canonical order: fixes feature-block layout, file tags and ensemble makeup.
ALGORITHM_ORDER: tuple[AlgorithmId, ...] = tuple(AlgorithmId)
COMPONENT_ALGORITHMS: tuple[AlgorithmId, ...] = ALGORITHM_ORDER[:-1]

ALGORITHM_TAG = {a: t for t, a in enumerate(ALGORITHM_ORDER)}

_CLASSES: dict[AlgorithmId, type] = {
    AlgorithmId.NEGATIVE_CONTROL: NegativeControlPredictor,
    AlgorithmId.RANDOM_NORMAL: RandomNormalPredictor,
    AlgorithmId.BASELINE: BaselinePredictor,
    AlgorithmId.KNN_BASIC: KnnBasicPredictor,
    AlgorithmId.KNN_MEANS: KnnMeansPredictor,
    AlgorithmId.KNN_ZSCORE: KnnZscorePredictor,
    AlgorithmId.KNN_BASELINE: KnnBaselinePredictor,
    AlgorithmId.SVD: SvdPredictor,
    AlgorithmId.SVDPP: SvdppPredictor,
    AlgorithmId.NMF: NmfPredictor,
    AlgorithmId.SLOPE_ONE: SlopeOnePredictor,
    AlgorithmId.CO_CLUSTERING: CoClusteringPredictor,
    AlgorithmId.ENSEMBLE: EnsemblePredictor,
}


def make_predictor(algorithm: AlgorithmId | str, hyperparams: HyperParams = HyperParams(),
                   seed: int = 0) -> RatingPredictor:
    """Unfitted estimator for an algorithm id, configured from a HyperParams bag."""
    algorithm = AlgorithmId(algorithm)
    hp = hyperparams
    common = dict(clamp=hp.clamp, seed=seed)
    if algorithm in (AlgorithmId.NEGATIVE_CONTROL, AlgorithmId.RANDOM_NORMAL,
                     AlgorithmId.SLOPE_ONE):
        return _CLASSES[algorithm](**common)
    if algorithm == AlgorithmId.BASELINE:
        return BaselinePredictor(hp.baseline_epochs, hp.baseline_reg, **common)
    if algorithm in (AlgorithmId.KNN_BASIC, AlgorithmId.KNN_MEANS,
                     AlgorithmId.KNN_ZSCORE, AlgorithmId.KNN_BASELINE):
        return _CLASSES[algorithm](hp.k_neighbors, hp.min_k, hp.similarity,
                                   hp.user_based, hp.baseline_epochs,
                                   hp.baseline_reg, **common)
    if algorithm in (AlgorithmId.SVD, AlgorithmId.SVDPP):
        return _CLASSES[algorithm](hp.n_factors, hp.n_epochs, hp.learning_rate,
                                   hp.reg, **common)
    if algorithm == AlgorithmId.NMF:
        return NmfPredictor(hp.nmf_factors, hp.nmf_epochs, hp.nmf_reg_user,
                            hp.nmf_reg_item, **common)
    if algorithm == AlgorithmId.CO_CLUSTERING:
        return CoClusteringPredictor(hp.n_user_clusters, hp.n_item_clusters,
                                     hp.cluster_epochs, **common)
    return EnsemblePredictor(hp, **common)


def fit(algorithm: AlgorithmId | str, hyperparams: HyperParams, train: Dataset,
        seed: int = 0) -> RatingPredictor:
    """Fit one initial predictor on a training dataset."""
    predictor = make_predictor(algorithm, hyperparams, seed)
    return predictor.fit(train.pairs(), train.ratings, train.n_users, train.n_items)


__all__ = [
    "AlgorithmId", "ALGORITHM_ORDER", "COMPONENT_ALGORITHMS", "ALGORITHM_TAG",
    "HyperParams", "RatingPredictor", "make_predictor", "fit",
    "similarity", "similarity_matrix",
    "NegativeControlPredictor", "RandomNormalPredictor", "BaselinePredictor",
    "KnnBasicPredictor", "KnnMeansPredictor", "KnnZscorePredictor",
    "KnnBaselinePredictor", "SvdPredictor", "SvdppPredictor", "NmfPredictor",
    "SlopeOnePredictor", "CoClusteringPredictor", "EnsemblePredictor",
]
