"""Versioned binary container for fitted predictors (magic ``RPRS``)."""

from __future__ import annotations

import json
import os

import numpy as np

from .._binio import Reader, Writer
from ..exceptions import FormatError
from . import ALGORITHM_ORDER, ALGORITHM_TAG, AlgorithmId, make_predictor
from .base import HyperParams
from .ensemble import EnsemblePredictor

MAGIC = b"RPRS"
VERSION = 1


def _fitted_state(predictor):
    """Split a fitted estimator's trailing-underscore state into arrays and scalars."""
    arrays: dict[str, np.ndarray] = {}
    scalars: dict[str, float | int | bool] = {}
    for name, val in sorted(vars(predictor).items()):
        if not name.endswith("_") or name.endswith("__"):
            continue
        if isinstance(val, np.ndarray):
            arrays[name] = val
        elif isinstance(val, (bool, np.bool_)):
            scalars[name] = bool(val)
        elif isinstance(val, (int, np.integer)):
            scalars[name] = int(val)
        elif isinstance(val, (float, np.floating)):
            scalars[name] = float(val)
    return arrays, scalars


def _serialize(predictor) -> bytes:
    w = Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    algo = AlgorithmId(predictor.algorithm)
    w.u8(ALGORITHM_TAG[algo])
    arrays, scalars = _fitted_state(predictor)
    params = predictor.get_params()
    if algo is AlgorithmId.ENSEMBLE:
        params = {k: v for k, v in params.items() if k != "hyperparams"}
        params["hyperparams"] = vars(predictor.hyperparams)
    meta = {"params": params, "scalars": scalars}
    w.string(json.dumps(meta, sort_keys=True))
    blocks: list[tuple[str, object]] = sorted(arrays.items())
    if algo is AlgorithmId.ENSEMBLE:
        blocks += [(f"component_{t:02d}", _serialize(c))
                   for t, c in enumerate(predictor.components_)]
    w.u16(len(blocks))
    for name, arr in blocks:
        w.string(name)
        w.array(arr)
    return w.getvalue()


def _deserialize(r: Reader):
    r.expect_magic(MAGIC)
    r.expect_version(VERSION)
    tag = r.u8()
    if tag >= len(ALGORITHM_ORDER):
        raise FormatError(f"{r.source}: unknown algorithm tag {tag}")
    algo = ALGORITHM_ORDER[tag]
    meta = json.loads(r.string())
    params = dict(meta["params"])
    if algo is AlgorithmId.ENSEMBLE:
        params["hyperparams"] = HyperParams(**params["hyperparams"])
    predictor = make_predictor(algo)
    predictor.set_params(**params)
    components = []
    n_blocks = r.u16()
    for _ in range(n_blocks):
        name = r.string()
        arr = r.array()
        if name.startswith("component_"):
            components.append(_deserialize(Reader(arr, r.source)))
        else:
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)
            setattr(predictor, name, arr)
    for name, val in meta["scalars"].items():
        setattr(predictor, name, val)
    if algo is AlgorithmId.ENSEMBLE:
        predictor.components_ = components
    if hasattr(predictor, "_rebind"):
        predictor._rebind()
    return predictor


def save_model(predictor, path: str | os.PathLike,
               user_ids=None, item_ids=None) -> None:
    """Write a fitted predictor; optional id tables make it self-contained
    for score-matrix generation."""
    predictor._check_fitted()
    w = Writer()
    w.raw(_serialize(predictor))
    for ids in (user_ids, item_ids):
        ids = list(ids) if ids is not None else []
        w.u64(len(ids))
        for s in ids:
            w.string(str(s))
    with open(path, "wb") as fh:
        fh.write(w.getvalue())


def load_model(path: str | os.PathLike):
    """Read a fitted predictor; returns (predictor, user_ids, item_ids)."""
    with open(path, "rb") as fh:
        data = fh.read()
    r = Reader(data, str(path))
    predictor = _deserialize(r)
    tables = []
    for _ in range(2):
        n = r.u64()
        tables.append(tuple(r.string() for _ in range(n)))
    r.done()
    user_ids, item_ids = tables
    return predictor, (user_ids or None), (item_ids or None)
