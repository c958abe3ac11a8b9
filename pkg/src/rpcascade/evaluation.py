"""Experiment orchestration: cross-validated refinement runs, significance
testing, negative controls and the comparison report.

Protocol per split: fit the initial predictor on the training folds only,
generate its full score matrix, extract context features for training and
evaluation pairs from that same matrix, fit the cascade on the training
pairs, then score both conditions on the evaluation pairs.  Five rotating
CV splits over folds 0-4 are followed by the holdout split (train 0-4,
evaluate fold 5); significance comes from the holdout's paired per-rating
absolute errors.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .cascade import GBTConfig, gbt_fit, gbt_predict
from .cpm import generate_cpm
from .dataset import HOLDOUT_FOLD, Dataset, FoldAssignment, make_folds
from .exceptions import DataError
from .recsys import (ALGORITHM_ORDER, ALGORITHM_TAG, COMPONENT_ALGORITHMS,
                     AlgorithmId, EnsemblePredictor, HyperParams, make_predictor)
from .rng import derive_seed, splitmix64, to_unit
from .rpfeat import N_FEATURES, ProfileCache, feature_matrix, stack
from .stats import rmse, wilcoxon_signed_rank

P_THRESHOLD = 0.05

CATEGORIES = ("sig_better", "better_ns", "worse_ns", "sig_worse")

VARIANT_SINGLE = "single"
VARIANT_STACKED = "stacked"
VARIANT_RANDOM_FEATURES = "random_features"


def categorize(delta_rmse: float, p_value: float) -> str:
    """Four-way legend: delta sign crossed with significance at p < 0.05."""
    better = delta_rmse < 0.0
    significant = p_value < P_THRESHOLD
    if better:
        return "sig_better" if significant else "better_ns"
    return "sig_worse" if significant else "worse_ns"


@dataclass(frozen=True)
class ExperimentResult:
    """Outcome of one dataset x algorithm experiment.

    The RMSE tuples hold the five CV splits followed by the holdout split;
    ``delta_rmse`` is mean(refined) - mean(alone) over those entries
    (negative = improvement) and the p-value is the holdout Wilcoxon test on
    paired absolute errors.
    """

    dataset_id: str
    algorithm: AlgorithmId
    variant: str
    rmse_rs_alone: tuple[float, ...]
    rmse_rs_plus_rp: tuple[float, ...]
    delta_rmse: float
    p_value: float
    category: str
    seed: int

    @property
    def holdout_rmse_rs(self) -> float:
        return self.rmse_rs_alone[-1]

    @property
    def holdout_rmse_rp(self) -> float:
        return self.rmse_rs_plus_rp[-1]

    @property
    def label(self) -> str:
        return self.algorithm.value if self.variant == VARIANT_SINGLE else self.variant


@dataclass(frozen=True)
class NegativeControlResult:
    """Random-feature control plus the distribution facts the report quotes."""

    result: ExperimentResult
    prediction_mean: float
    prediction_std: float
    train_label_mean: float
    train_label_std: float
    eval_label_std: float
    mean_predictor_rmse: float


@dataclass(frozen=True)
class BenchmarkResult:
    dataset_id: str
    seed: int
    results: tuple[ExperimentResult, ...]
    stacked: ExperimentResult | None
    control: NegativeControlResult | None

    def by_algorithm(self) -> dict[AlgorithmId, ExperimentResult]:
        return {r.algorithm: r for r in self.results}


def _splits(folds: FoldAssignment):
    cv = [f for f in range(folds.n_folds) if f != HOLDOUT_FOLD]
    out = [(tuple(t for t in cv if t != v), v) for v in cv]
    out.append((tuple(cv), HOLDOUT_FOLD))
    return out


def _check_no_leak(train_pairs: np.ndarray, eval_pairs: np.ndarray):
    """Training labels and evaluation pairs must not intersect."""
    train_set = {(int(u), int(i)) for u, i in train_pairs}
    for u, i in eval_pairs:
        if (int(u), int(i)) in train_set:
            raise AssertionError(f"data leak: pair ({u}, {i}) is in both training and evaluation")


def _random_features(n_rows: int, seed: int) -> np.ndarray:
    """Seeded uniform [0, 1) stand-ins for the 14 context features."""
    h = splitmix64(seed, np.arange(n_rows * N_FEATURES, dtype=np.uint64))
    return to_unit(h).reshape(n_rows, N_FEATURES)


class _SplitRun:
    """All per-split work, with fitted components shared across algorithms."""

    def __init__(self, dataset: Dataset, train_idx, eval_idx, hyperparams, seed, workers):
        self.dataset = dataset
        self.hp = hyperparams
        self.seed = seed
        self.workers = max(1, workers)
        pairs = dataset.pairs()
        self.train_pairs = pairs[train_idx]
        self.eval_pairs = pairs[eval_idx]
        self.y_train = dataset.ratings[train_idx]
        self.y_eval = dataset.ratings[eval_idx]
        if np.intersect1d(train_idx, eval_idx).size:
            raise AssertionError("data leak: a rating is assigned to both conditions")
        _check_no_leak(self.train_pairs, self.eval_pairs)
        self.predictors: dict[AlgorithmId, object] = {}
        self.features: dict[AlgorithmId, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def fit_components(self, algorithms):
        components = [a for a in algorithms if a is not AlgorithmId.ENSEMBLE]

        def fit_one(algo):
            pred = make_predictor(algo, self.hp, self.seed)
            pred.fit(self.train_pairs, self.y_train,
                     self.dataset.n_users, self.dataset.n_items)
            return algo, pred

        if self.workers > 1 and len(components) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                for algo, pred in pool.map(fit_one, components):
                    self.predictors[algo] = pred
        else:
            for algo in components:
                self.predictors[algo] = fit_one(algo)[1]
        if AlgorithmId.ENSEMBLE in algorithms:
            missing = [a for a in COMPONENT_ALGORITHMS if a not in self.predictors]
            if missing:
                self.fit_components(missing)
            comps = [self.predictors[a] for a in COMPONENT_ALGORITHMS]
            self.predictors[AlgorithmId.ENSEMBLE] = EnsemblePredictor.from_fitted(
                comps, self.hp, self.hp.clamp, self.seed)

    def compute_features(self, algo: AlgorithmId):
        """(train features, eval features, alone eval scores) for one algorithm."""
        if algo in self.features:
            return self.features[algo]
        cpm = generate_cpm(self.predictors[algo], self.dataset.users,
                           self.dataset.items, budget_bytes=None,
                           workers=self.workers)
        cache = ProfileCache(cpm)
        f_train = feature_matrix(cpm, self.train_pairs, cache)
        f_eval = feature_matrix(cpm, self.eval_pairs, cache)
        alone = cpm.scores[self.eval_pairs[:, 0], self.eval_pairs[:, 1]].astype(np.float64)
        self.features[algo] = (f_train, f_eval, alone)
        return self.features[algo]

    def cascade_scores(self, algo: AlgorithmId, gbt_config: GBTConfig, split_idx: int):
        f_train, f_eval, alone = self.compute_features(algo)
        cfg = replace(gbt_config, seed=derive_seed(gbt_config.seed, ALGORITHM_TAG[algo], split_idx))
        model = gbt_fit(f_train, self.y_train, cfg)
        refined = gbt_predict(model, f_eval)
        return alone, refined

    def stacked_scores(self, gbt_config: GBTConfig, split_idx: int):
        blocks_train = []
        blocks_eval = []
        for algo in COMPONENT_ALGORITHMS:
            f_train, f_eval, _ = self.compute_features(algo)
            blocks_train.append(f_train)
            blocks_eval.append(f_eval)
        _, _, ensemble_alone = self.compute_features(AlgorithmId.ENSEMBLE)
        cfg = replace(gbt_config, seed=derive_seed(gbt_config.seed, 100, split_idx))
        model = gbt_fit(stack(blocks_train), self.y_train, cfg)
        refined = gbt_predict(model, stack(blocks_eval))
        return ensemble_alone, refined

    def random_feature_scores(self, gbt_config: GBTConfig, split_idx: int):
        rf_seed = derive_seed(self.seed, 200, split_idx)
        f_train = _random_features(len(self.train_pairs), rf_seed)
        f_eval = _random_features(len(self.eval_pairs), derive_seed(rf_seed, 1))
        cfg = replace(gbt_config, seed=derive_seed(gbt_config.seed, 200, split_idx))
        model = gbt_fit(f_train, self.y_train, cfg)
        refined = gbt_predict(model, f_eval)
        alone = np.full(len(self.eval_pairs), float(self.y_train.mean()))
        return alone, refined


def _finish(dataset_id, algo, variant, rs_list, rp_list, holdout_pair, seed):
    alone, refined, y_eval = holdout_pair
    test = wilcoxon_signed_rank(np.abs(alone - y_eval), np.abs(refined - y_eval))
    delta = float(np.mean(rp_list) - np.mean(rs_list))
    return ExperimentResult(
        dataset_id=dataset_id, algorithm=algo, variant=variant,
        rmse_rs_alone=tuple(rs_list), rmse_rs_plus_rp=tuple(rp_list),
        delta_rmse=delta, p_value=test.p,
        category=categorize(delta, test.p), seed=seed)


def run_benchmark(
    dataset: Dataset,
    algorithms=ALGORITHM_ORDER,
    *,
    hyperparams: HyperParams = HyperParams(),
    gbt_config: GBTConfig = GBTConfig(),
    seed: int = 0,
    dataset_id: str = "dataset",
    folds: FoldAssignment | None = None,
    stacked: bool = False,
    negative_control: bool = False,
    workers: int = 1,
) -> BenchmarkResult:
    """Run the full protocol for many algorithms with shared fitted state.

    Initial predictors are fitted once per split and their score matrices
    reused by every consumer (single-algorithm cascades, the ensemble, the
    stacked cascade).
    """
    algorithms = [AlgorithmId(a) for a in algorithms]
    if folds is None:
        folds = make_folds(dataset, seed)
    elif len(folds.fold_of_rating) != dataset.n_ratings:
        raise DataError("fold assignment does not match the dataset")
    rs_lists = {a: [] for a in algorithms}
    rp_lists = {a: [] for a in algorithms}
    stack_rs, stack_rp = [], []
    ctrl_rs, ctrl_rp = [], []
    holdouts = {}
    needed = list(algorithms)
    if stacked and AlgorithmId.ENSEMBLE not in needed:
        needed.append(AlgorithmId.ENSEMBLE)

    if stacked:
        needed += [a for a in COMPONENT_ALGORITHMS if a not in needed]

    for split_idx, (train_folds, eval_fold) in enumerate(_splits(folds)):
        run = _SplitRun(dataset, folds.indices_in(train_folds),
                        folds.indices_of(eval_fold), hyperparams, seed, workers)
        run.fit_components(needed)
        # features are extracted once per algorithm and shared by every
        # consumer; this stage is sequential (each matrix is row-parallel)
        for algo in needed:
            run.compute_features(algo)
        work = [(a, VARIANT_SINGLE) for a in algorithms]
        if stacked:
            work.append((None, VARIANT_STACKED))
        if negative_control:
            work.append((None, VARIANT_RANDOM_FEATURES))

        def run_one(item):
            algo, variant = item
            if variant == VARIANT_SINGLE:
                alone, refined = run.cascade_scores(algo, gbt_config, split_idx)
            elif variant == VARIANT_STACKED:
                alone, refined = run.stacked_scores(gbt_config, split_idx)
            else:
                alone, refined = run.random_feature_scores(gbt_config, split_idx)
            return item, alone, refined

        if workers <= 1 or len(work) <= 1:
            results_here = list(map(run_one, work))
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results_here = list(pool.map(run_one, work))
        for (algo, variant), alone, refined in results_here:
            r_alone = rmse(run.y_eval, alone)
            r_ref = rmse(run.y_eval, refined)
            if variant == VARIANT_SINGLE:
                rs_lists[algo].append(r_alone)
                rp_lists[algo].append(r_ref)
            elif variant == VARIANT_STACKED:
                stack_rs.append(r_alone)
                stack_rp.append(r_ref)
            else:
                ctrl_rs.append(r_alone)
                ctrl_rp.append(r_ref)
            if eval_fold == HOLDOUT_FOLD:
                holdouts[(algo, variant)] = (alone, refined, run.y_eval)

    results = tuple(
        _finish(dataset_id, a, VARIANT_SINGLE, rs_lists[a], rp_lists[a],
                holdouts[(a, VARIANT_SINGLE)], seed)
        for a in algorithms)
    stacked_result = None
    if stacked:
        stacked_result = _finish(dataset_id, AlgorithmId.ENSEMBLE, VARIANT_STACKED,
                                 stack_rs, stack_rp, holdouts[(None, VARIANT_STACKED)], seed)
    control_result = None
    if negative_control:
        alone, refined, y_eval = holdouts[(None, VARIANT_RANDOM_FEATURES)]
        base = _finish(dataset_id, AlgorithmId.NEGATIVE_CONTROL, VARIANT_RANDOM_FEATURES,
                       ctrl_rs, ctrl_rp, holdouts[(None, VARIANT_RANDOM_FEATURES)], seed)
        # training labels of the holdout split = folds 0..4
        y_train = dataset.ratings[folds.indices_in(tuple(range(HOLDOUT_FOLD)))]
        control_result = NegativeControlResult(
            result=base,
            prediction_mean=float(refined.mean()),
            prediction_std=float(refined.std()),
            train_label_mean=float(y_train.mean()),
            train_label_std=float(y_train.std()),
            eval_label_std=float(y_eval.std()),
            mean_predictor_rmse=rmse(y_eval, alone),
        )
    return BenchmarkResult(dataset_id, seed, results, stacked_result, control_result)


def run_experiment(dataset: Dataset, algorithm, *, hyperparams: HyperParams = HyperParams(),
                   gbt_config: GBTConfig = GBTConfig(), seed: int = 0,
                   dataset_id: str = "dataset", folds: FoldAssignment | None = None,
                   workers: int = 1) -> ExperimentResult:
    """Full protocol for one algorithm: alone vs with the cascaded refinement."""
    bench = run_benchmark(dataset, [algorithm], hyperparams=hyperparams,
                          gbt_config=gbt_config, seed=seed, dataset_id=dataset_id,
                          folds=folds, workers=workers)
    return bench.results[0]


def run_stacked_experiment(dataset: Dataset, *, hyperparams: HyperParams = HyperParams(),
                           gbt_config: GBTConfig = GBTConfig(), seed: int = 0,
                           dataset_id: str = "dataset", folds: FoldAssignment | None = None,
                           workers: int = 1) -> ExperimentResult:
    """Stacked variant: all 12 component feature blocks feed one cascade and
    the non-refined condition is the equi-weighted ensemble."""
    bench = run_benchmark(dataset, [], hyperparams=hyperparams, gbt_config=gbt_config,
                          seed=seed, dataset_id=dataset_id, folds=folds,
                          stacked=True, workers=workers)
    return bench.stacked


def negative_control_random_features(dataset: Dataset, *, hyperparams: HyperParams = HyperParams(),
                                     gbt_config: GBTConfig = GBTConfig(), seed: int = 0,
                                     dataset_id: str = "dataset",
                                     folds: FoldAssignment | None = None,
                                     workers: int = 1) -> NegativeControlResult:
    """Cascade trained on seeded random features: isolates the mean-reverting
    behaviour of the refinement layer from genuine contextual signal."""
    bench = run_benchmark(dataset, [], hyperparams=hyperparams, gbt_config=gbt_config,
                          seed=seed, dataset_id=dataset_id, folds=folds,
                          negative_control=True, workers=workers)
    return bench.control


REPORT_COLUMNS = ("dataset", "algorithm", "rmse_rs", "rmse_rs_rp", "delta",
                  "p_value", "category", "seed")


def report_table(results) -> str:
    """Machine-readable table: one row per experiment, holdout RMSEs, the
    mean-over-splits delta, holdout p-value and the four-way category."""
    lines = ["\t".join(REPORT_COLUMNS)]
    for r in results:
        lines.append("\t".join([
            r.dataset_id, r.label, repr(r.holdout_rmse_rs), repr(r.holdout_rmse_rp),
            repr(r.delta_rmse), repr(r.p_value), r.category, str(r.seed)]))
    return "\n".join(lines) + "\n"


_CATEGORY_MARK = {"sig_better": "[++]", "better_ns": "[+]",
                  "worse_ns": "[-]", "sig_worse": "[--]"}


def report_grid(results) -> str:
    """Rendered grid mirroring the four-colour comparison tables: rows are
    datasets, columns algorithms, cells the delta RMSE with its category."""
    results = list(results)
    datasets = sorted({r.dataset_id for r in results})
    labels = []
    for r in results:
        if r.label not in labels:
            labels.append(r.label)
    by_key = {(r.dataset_id, r.label): r for r in results}
    lines = []
    lines.append("| dataset | " + " | ".join(labels) + " |")
    lines.append("|" + "---|" * (len(labels) + 1))
    for ds in datasets:
        cells = []
        for lab in labels:
            r = by_key.get((ds, lab))
            cells.append(f"{r.delta_rmse:+.4f} {_CATEGORY_MARK[r.category]}" if r else "")
        lines.append(f"| {ds} | " + " | ".join(cells) + " |")
    improved = sum(1 for r in results if r.delta_rmse < 0)
    sig = sum(1 for r in results if r.category == "sig_better")
    lines.append("")
    lines.append(f"improved: {improved}/{len(results)} experiments; "
                 f"significantly improved (p < {P_THRESHOLD}): {sig}/{len(results)}")
    lines.append("legend: [++] significantly better, [+] better, "
                 "[-] worse, [--] significantly worse (two-sided p < 0.05)")
    lines.append("columns: delta = mean over splits of (refined - alone) RMSE; "
                 "negative is better")
    return "\n".join(lines) + "\n"


def report(results) -> dict[str, str]:
    """Both report renderings keyed by artifact name."""
    results = list(results)
    if not results:
        raise ValueError("report requires at least one result")
    return {"results.tsv": report_table(results), "report.md": report_grid(results)}
