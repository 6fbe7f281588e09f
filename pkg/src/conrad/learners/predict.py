"""Scoring and labeling for every model kind, with a strict column contract."""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .design import DesignMatrix
from .forest import ForestModel
from .linear import LinearModel, _sigmoid
from .svm import KernelModel, kernel_matrix

Model = LinearModel | KernelModel | ForestModel


def check_columns(model: Model, X: DesignMatrix) -> None:
    expected = model.feature_names
    got = X.columns
    if got == expected:
        return
    for k, (e, g) in enumerate(zip(expected, got)):
        if e != g:
            raise ContractError(
                f"column {k} mismatch: model expects {e!r}, matrix has {g!r}")
    if len(got) < len(expected):
        raise ContractError(f"missing column {expected[len(got)]!r}")
    raise ContractError(f"unexpected column {got[len(expected)]!r}")


def predict_scores(model: Model, X: DesignMatrix) -> np.ndarray:
    """Probabilities for logistic and forest, decision values for SVM."""
    check_columns(model, X)
    if isinstance(model, LinearModel):
        return _sigmoid(X.values @ model.weights + model.intercept)
    if isinstance(model, KernelModel):
        if model.support_vectors.shape[0] == 0:
            return np.full(X.n, model.intercept)
        K = kernel_matrix(model.kernel, model.gamma, X.values,
                          model.support_vectors)
        return K @ model.dual_coef + model.intercept
    if isinstance(model, ForestModel):
        acc = np.zeros(X.n)
        for tree in model.trees:
            acc += tree.predict_prob1(X.values)
        return acc / model.n_trees
    raise ContractError(f"unknown model type {type(model).__name__}")


def score_threshold(model: Model) -> float:
    """Natural decision boundary: 0 for margins, 0.5 for probabilities."""
    return 0.0 if isinstance(model, KernelModel) else 0.5


def predict_labels(model: Model, X: DesignMatrix,
                   threshold: float | None = None) -> np.ndarray:
    if threshold is None:
        threshold = score_threshold(model)
    return (predict_scores(model, X) > threshold).astype(np.int64)
