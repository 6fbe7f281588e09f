"""Versioned JSON round-trip for every model kind."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ContractError
from ..volume import NormalizationParams, atomic_write_json
from .forest import ForestModel, Tree
from .linear import LinearModel
from .predict import Model
from .svm import KernelModel

SCHEMA_VERSION = 1


def _norm_to_json(norm: tuple[NormalizationParams, ...] | None):
    if norm is None:
        return None
    return {"mean": [p.mean for p in norm], "stddev": [p.stddev for p in norm]}


def _norm_from_json(obj) -> tuple[NormalizationParams, ...] | None:
    if obj is None:
        return None
    return tuple(NormalizationParams(mean=m, stddev=s)
                 for m, s in zip(obj["mean"], obj["stddev"]))


def model_to_jsonable(model: Model) -> dict:
    base = {
        "schema_version": SCHEMA_VERSION,
        "feature_names": list(model.feature_names),
        "normalization": _norm_to_json(model.normalization),
    }
    if isinstance(model, LinearModel):
        base.update(kind="linear", weights=model.weights.tolist(),
                    intercept=model.intercept, l1_lambda=model.l1_lambda)
    elif isinstance(model, KernelModel):
        base.update(kind="kernel",
                    support_vectors=model.support_vectors.tolist(),
                    dual_coef=model.dual_coef.tolist(),
                    intercept=model.intercept, kernel=model.kernel,
                    gamma=model.gamma, C=model.C)
    elif isinstance(model, ForestModel):
        base.update(kind="forest", n_trees=model.n_trees, seed=model.seed,
                    trees=[{
                        "feature": t.feature.tolist(),
                        "threshold": t.threshold.tolist(),
                        "left": t.left.tolist(),
                        "right": t.right.tolist(),
                        "prob1": t.prob1.tolist(),
                    } for t in model.trees])
    else:
        raise ContractError(f"unknown model type {type(model).__name__}")
    return base


def model_from_jsonable(obj: dict) -> Model:
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ContractError(f"unsupported model schema version {version!r}")
    names = tuple(obj["feature_names"])
    norm = _norm_from_json(obj.get("normalization"))
    kind = obj.get("kind")
    if kind == "linear":
        return LinearModel(weights=np.asarray(obj["weights"], dtype=np.float64),
                           intercept=float(obj["intercept"]),
                           l1_lambda=float(obj["l1_lambda"]),
                           feature_names=names, normalization=norm)
    if kind == "kernel":
        sv = np.asarray(obj["support_vectors"], dtype=np.float64)
        if sv.size == 0:
            sv = sv.reshape(0, len(names))
        return KernelModel(support_vectors=sv,
                           dual_coef=np.asarray(obj["dual_coef"], dtype=np.float64),
                           intercept=float(obj["intercept"]),
                           kernel=str(obj["kernel"]), gamma=float(obj["gamma"]),
                           C=float(obj["C"]), feature_names=names,
                           normalization=norm)
    if kind == "forest":
        trees = tuple(
            Tree(feature=np.asarray(t["feature"], dtype=np.int32),
                 threshold=np.asarray(t["threshold"], dtype=np.float64),
                 left=np.asarray(t["left"], dtype=np.int32),
                 right=np.asarray(t["right"], dtype=np.int32),
                 prob1=np.asarray(t["prob1"], dtype=np.float64))
            for t in obj["trees"])
        return ForestModel(trees=trees, n_trees=int(obj["n_trees"]),
                           seed=int(obj["seed"]), feature_names=names,
                           normalization=norm)
    raise ContractError(f"unknown model kind {kind!r}")


def save_model(model: Model, path: str | Path) -> None:
    atomic_write_json(Path(path), model_to_jsonable(model))


def load_model(path: str | Path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return model_from_jsonable(json.load(fh))
