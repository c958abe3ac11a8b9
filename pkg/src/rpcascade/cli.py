"""Command line entry point wiring the pipeline stages.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 size-budget
refusal.  Global options resolve as flag > RP_* environment variable >
config file ("key=value" lines) > default, and every resolved value lands in
the artifact's manifest sidecar.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields

import numpy as np

from . import __version__
from .cascade import GBTConfig, gbt_fit, save_gbt
from .cpm import DEFAULT_BUDGET_BYTES, generate_cpm, load_cpm, save_cpm
from .dataset import (RatingsFormat, ingest, make_folds, save_folds,
                      save_ratings, stats)
from .densify import densify_to
from .evaluation import report, run_benchmark
from .exceptions import BudgetExceededError, DataError, FormatError, RpError
from .manifest import RunManifest, write_manifest
from .recsys import ALGORITHM_ORDER, AlgorithmId, HyperParams
from .recsys import fit as fit_predictor
from .recsys.model_io import load_model, save_model
from .rpfeat import feature_matrix, write_features
from .validation import check_feature_matrix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BUDGET = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_GLOBALS = {
    # dest: (flag, env var, config key, parser, default)
    "seed": ("--seed", "RP_SEED", "seed", int, 0),
    "workers": ("--workers", "RP_WORKERS", "workers", int, os.cpu_count() or 1),
    "budget_bytes": ("--budget-bytes", "RP_BUDGET_BYTES", "budget_bytes", int,
                     DEFAULT_BUDGET_BYTES),
    "convention": ("--convention", "RP_CONVENTION", "convention", str, "full"),
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}: line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _resolve_globals(args) -> dict:
    cfg_file = _read_config_file(args.config) if args.config else {}
    resolved = {}
    for dest, (_flag, env, key, parse, default) in _GLOBALS.items():
        value = getattr(args, dest)
        if value is None and env in os.environ:
            value = parse(os.environ[env])
        if value is None and key in cfg_file:
            value = parse(cfg_file[key])
        resolved[dest] = default if value is None else value
    clamp = args.clamp
    if clamp is None and "RP_CLAMP" in os.environ:
        clamp = _parse_bool(os.environ["RP_CLAMP"])
    if clamp is None and "clamp" in cfg_file:
        clamp = _parse_bool(cfg_file["clamp"])
    resolved["clamp"] = True if clamp is None else clamp
    if resolved["convention"] not in ("full", "half"):
        raise DataError(f"convention must be 'full' or 'half', got {resolved['convention']!r}")
    return resolved


def _fmt(args) -> RatingsFormat:
    delim = {"tab": "\t", "comma": ","}[args.delimiter]
    return RatingsFormat(delimiter=delim, skip_header=args.skip_header)


def _hyperparams(resolved, sets) -> HyperParams:
    hp = HyperParams(clamp=resolved["clamp"])
    if not sets:
        return hp
    valid = {f.name: f.type for f in fields(HyperParams)}
    kw = {}
    for item in sets:
        if "=" not in item:
            raise DataError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        if key not in valid:
            raise DataError(f"unknown hyperparameter {key!r}")
        current = getattr(hp, key)
        kw[key] = _parse_bool(value) if isinstance(current, bool) else type(current)(value)
    return hp.replace(**kw)


def _manifest(args, resolved, inputs=()) -> RunManifest:
    m = RunManifest(command=args.command, seed=resolved["seed"],
                    config={k: v for k, v in resolved.items()})
    for path in inputs:
        m.add_input(path)
    return m


def _cmd_stats(args, resolved) -> int:
    st = stats(ingest(args.input, _fmt(args)))
    for key, value in st.as_dict().items():
        print(f"{key}={value}")
    return EXIT_OK


def _cmd_densify(args, resolved) -> int:
    ds = ingest(args.input, _fmt(args))
    result = densify_to(ds, args.target, resolved["convention"])
    save_ratings(result.dataset, args.output, _fmt(args))
    sidecar = {
        "threshold_k": result.threshold_k,
        "convention": resolved["convention"],
        "target_density": args.target,
        "stats_before": result.stats_before.as_dict(),
        "stats_after": result.stats_after.as_dict(),
    }
    with open(str(args.output) + ".densify.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    m = _manifest(args, resolved, [args.input])
    write_manifest(args.output, m)
    print(f"threshold_k={result.threshold_k}")
    print(f"n_users={result.dataset.n_users}")
    print(f"n_items={result.dataset.n_items}")
    print(f"n_ratings={result.dataset.n_ratings}")
    return EXIT_OK


def _cmd_folds(args, resolved) -> int:
    ds = ingest(args.input, _fmt(args))
    folds = make_folds(ds, resolved["seed"])
    save_folds(folds, args.output)
    write_manifest(args.output, _manifest(args, resolved, [args.input]))
    return EXIT_OK


def _cmd_train(args, resolved) -> int:
    ds = ingest(args.input, _fmt(args))
    hp = _hyperparams(resolved, args.set)
    predictor = fit_predictor(args.algo, hp, ds, resolved["seed"])
    save_model(predictor, args.output, ds.users, ds.items)
    write_manifest(args.output, _manifest(args, resolved, [args.input]))
    return EXIT_OK


def _cmd_cpm(args, resolved) -> int:
    predictor, user_ids, item_ids = load_model(args.model)
    if user_ids is None or item_ids is None:
        if not args.data:
            raise DataError("model has no id tables; pass --data to supply them")
        ds = ingest(args.data, _fmt(args))
        user_ids, item_ids = ds.users, ds.items
    cpm = generate_cpm(predictor, user_ids, item_ids,
                       budget_bytes=resolved["budget_bytes"],
                       workers=resolved["workers"])
    save_cpm(cpm, args.out)
    inputs = [args.model] + ([args.data] if args.data else [])
    write_manifest(args.out, _manifest(args, resolved, inputs))
    return EXIT_OK


def _cmd_rp_extract(args, resolved) -> int:
    cpms = [load_cpm(p) for p in args.cpm]
    first = cpms[0]
    for c in cpms[1:]:
        if c.user_ids != first.user_ids or c.item_ids != first.item_ids:
            raise DataError("all score matrices must share the same id tables")
    ds = ingest(args.pairs, _fmt(args))
    u_pos = {uid: k for k, uid in enumerate(first.user_ids)}
    i_pos = {iid: k for k, iid in enumerate(first.item_ids)}
    try:
        pairs = [(u_pos[ds.users[u]], i_pos[ds.items[i]])
                 for u, i in zip(ds.user_idx, ds.item_idx)]
    except KeyError as e:
        raise DataError(f"id {e.args[0]!r} from {args.pairs} is absent from the score matrix") from None
    pairs = np.array(pairs, dtype=np.int64)
    blocks = [feature_matrix(c, pairs) for c in cpms]
    users = [ds.users[u] for u in ds.user_idx]
    items = [ds.items[i] for i in ds.item_idx]
    write_features(args.out, users, items, blocks, [c.algorithm.value for c in cpms])
    write_manifest(args.out, _manifest(args, resolved, list(args.cpm) + [args.pairs]))
    return EXIT_OK


def _cmd_cascade(args, resolved) -> int:
    with open(args.features, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[:2] != ["user", "item"]:
            raise DataError(f"{args.features}: expected a feature dump with user/item columns")
        rows = []
        keys = []
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            keys.append((parts[0], parts[1]))
            rows.append([float(v) for v in parts[2:]])
    X = check_feature_matrix(np.array(rows, dtype=np.float64))
    labels_ds = ingest(args.labels, _fmt(args))
    label_of = {(labels_ds.users[u], labels_ds.items[i]): r
                for u, i, r in zip(labels_ds.user_idx, labels_ds.item_idx, labels_ds.ratings)}
    try:
        y = np.array([label_of[k] for k in keys])
    except KeyError as e:
        raise DataError(f"pair {e.args[0]!r} has no label in {args.labels}") from None
    config = GBTConfig(n_trees=args.trees, max_depth=args.depth,
                       learning_rate=args.learning_rate, subsample=args.subsample,
                       min_samples_leaf=args.min_leaf, seed=resolved["seed"])
    model = gbt_fit(X, y, config)
    save_gbt(model, args.out)
    write_manifest(args.out, _manifest(args, resolved, [args.features, args.labels]))
    return EXIT_OK


def _cmd_evaluate(args, resolved) -> int:
    ds = ingest(args.data, _fmt(args))
    if args.algos.strip() == "all":
        algos = list(ALGORITHM_ORDER)
    else:
        algos = [AlgorithmId(a.strip()) for a in args.algos.split(",") if a.strip()]
    hp = _hyperparams(resolved, args.set)
    gbt = GBTConfig(n_trees=args.trees, max_depth=args.depth,
                    learning_rate=args.learning_rate, subsample=args.subsample,
                    min_samples_leaf=args.min_leaf, seed=resolved["seed"])
    bench = run_benchmark(
        ds, algos, hyperparams=hp, gbt_config=gbt, seed=resolved["seed"],
        dataset_id=args.dataset_id or os.path.basename(str(args.data)),
        stacked=args.stacked, negative_control=args.negative_control,
        workers=resolved["workers"])
    results = list(bench.results)
    if bench.stacked is not None:
        results.append(bench.stacked)
    if bench.control is not None:
        results.append(bench.control.result)
    os.makedirs(args.out, exist_ok=True)
    docs = report(results)
    if bench.control is not None:
        c = bench.control
        docs["negative_control.json"] = json.dumps({
            "prediction_mean": c.prediction_mean,
            "prediction_std": c.prediction_std,
            "train_label_mean": c.train_label_mean,
            "train_label_std": c.train_label_std,
            "eval_label_std": c.eval_label_std,
            "mean_predictor_rmse": c.mean_predictor_rmse,
        }, indent=2, sort_keys=True) + "\n"
    for name, text in docs.items():
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
    write_manifest(os.path.join(args.out, "results.tsv"),
                   _manifest(args, resolved, [args.data]))
    for r in results:
        print(f"{r.dataset_id}\t{r.label}\t{r.category}\tdelta={r.delta_rmse:+.4f}\tp={r.p_value:.3g}")
    return EXIT_OK


def _cmd_report(args, resolved) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        rows = [dict(zip(header, line.rstrip("\n").split("\t"))) for line in fh if line.strip()]
    if not rows:
        raise DataError(f"{args.input}: no result rows")
    lines = ["| dataset | algorithm | rmse alone | rmse refined | delta | p | category |",
             "|---|---|---|---|---|---|---|"]
    for row in rows:
        lines.append("| {dataset} | {algorithm} | {rmse_rs} | {rmse_rs_rp} | "
                     "{delta} | {p_value} | {category} |".format(**row))
    text = "\n".join(lines) + "\n"
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    write_manifest(args.out, _manifest(args, resolved, [args.input]))
    return EXIT_OK


def _add_io_flags(p: argparse.ArgumentParser):
    p.add_argument("--delimiter", choices=["tab", "comma"], default="tab",
                   help="ratings file delimiter")
    p.add_argument("--skip-header", action="store_true",
                   help="skip one header line in ratings files")


def _add_gbt_flags(p: argparse.ArgumentParser):
    p.add_argument("--trees", type=int, default=GBTConfig.n_trees)
    p.add_argument("--depth", type=int, default=GBTConfig.max_depth)
    p.add_argument("--learning-rate", type=float, default=GBTConfig.learning_rate)
    p.add_argument("--subsample", type=float, default=GBTConfig.subsample)
    p.add_argument("--min-leaf", type=int, default=GBTConfig.min_samples_leaf)


def build_parser() -> _Parser:
    parser = _Parser(prog="rp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rp {__version__}")
    for dest, (flag, _env, _key, parse, _default) in _GLOBALS.items():
        kw = {"type": parse, "default": None, "dest": dest}
        if dest == "convention":
            kw = {"choices": ["full", "half"], "default": None, "dest": dest}
        parser.add_argument(flag, **kw)
    parser.add_argument("--clamp", action=argparse.BooleanOptionalAction, default=None,
                        help="clamp predictor scores to [1, 5] (default on)")
    parser.add_argument("--config", default=None, help="key=value config file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics (both density conventions)")
    p.add_argument("input")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("densify", help="reduce to the smallest k-core meeting a density target")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("input")
    p.add_argument("output")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_densify)

    p = sub.add_parser("folds", help="assign ratings to the six folds")
    p.add_argument("input")
    p.add_argument("output")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_folds)

    p = sub.add_parser("train", help="fit one initial predictor")
    p.add_argument("--algo", required=True, choices=[a.value for a in ALGORITHM_ORDER])
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a hyperparameter")
    p.add_argument("input")
    p.add_argument("output")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("cpm", help="generate the full score matrix from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--data", default=None, help="ratings file supplying id tables")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_cpm)

    p = sub.add_parser("rp-extract", help="extract the 14 context features for labelled pairs")
    p.add_argument("--cpm", action="append", required=True,
                   help="score matrix file; repeat for stacked blocks")
    p.add_argument("--pairs", required=True, help="ratings file naming the pairs")
    p.add_argument("--out", required=True)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_rp_extract)

    p = sub.add_parser("cascade", help="fit the boosted refinement model on a feature dump")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True, help="ratings file with the true labels")
    p.add_argument("--out", required=True)
    _add_gbt_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_cascade)

    p = sub.add_parser("evaluate", help="cross-validated comparison of alone vs refined")
    p.add_argument("--data", required=True)
    p.add_argument("--algos", default="all")
    p.add_argument("--out", required=True)
    p.add_argument("--dataset-id", default=None)
    p.add_argument("--stacked", action="store_true")
    p.add_argument("--negative-control", action="store_true")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    _add_gbt_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="re-render a results table as a grid")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        resolved = _resolve_globals(args)
        return args.func(args, resolved)
    except SystemExit as e:
        return int(e.code or 0)
    except BudgetExceededError as e:
        print(f"rp: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (DataError, FormatError, FileNotFoundError, ValueError, RpError) as e:
        print(f"rp: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
