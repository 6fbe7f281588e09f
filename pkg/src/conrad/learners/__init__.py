"""Binary classifiers trained deterministically from feature matrices."""

from .design import DesignMatrix, check_labels
from .forest import ForestModel, Tree, forest_fit
from .linear import (
    LinearModel,
    lambda_max,
    lasso_kkt_violation,
    logistic_fit,
)
from .predict import (
    Model,
    check_columns,
    predict_labels,
    predict_scores,
    score_threshold,
)
from .serialize import (
    load_model,
    model_from_jsonable,
    model_to_jsonable,
    save_model,
)
from .svm import KernelModel, kernel_matrix, svm_fit

__all__ = [
    "DesignMatrix", "check_labels",
    "LinearModel", "logistic_fit", "lambda_max", "lasso_kkt_violation",
    "KernelModel", "svm_fit", "kernel_matrix",
    "ForestModel", "Tree", "forest_fit",
    "Model", "predict_scores", "predict_labels", "score_threshold",
    "check_columns",
    "save_model", "load_model", "model_to_jsonable", "model_from_jsonable",
]
