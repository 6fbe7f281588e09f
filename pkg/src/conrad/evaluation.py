"""Feature fusion, cross-validation, and reporting.

The seven ablation feature sets and five classifiers meet here: tables are
inner-joined per ablation, folds are stratified and seeded, normalization is
fit on training rows only, and every report carries the confusion counts its
metrics were computed from.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, InvalidInputError
from .learners import (
    DesignMatrix,
    LinearModel,
    Model,
    forest_fit,
    logistic_fit,
    predict_scores,
    score_threshold,
    svm_fit,
)
from .volume import NormalizationParams, atomic_write_json, atomic_write_text

SOURCE_TAGS = ("radiomic", "biomarker", "cnn")

# ablation name -> source tags joined, in column order
ABLATIONS: dict[str, tuple[str, ...]] = {
    "bio+rad": ("biomarker", "radiomic"),
    "radiomics": ("radiomic",),
    "biomarkers": ("biomarker",),
    "cnn": ("cnn",),
    "cnn+rad": ("cnn", "radiomic"),
    "bio+cnn": ("biomarker", "cnn"),
    "all": ("cnn", "biomarker", "radiomic"),
}

CLASSIFIERS = ("svm-linear", "svm-rbf", "logreg", "logreg-lasso", "forest")

FPR_GRID = tuple(round(0.01 * i, 2) for i in range(101))


@dataclass(frozen=True)
class FeatureTable:
    """Finite feature matrix keyed by nodule id, every column source-tagged."""

    ids: tuple[str, ...]
    columns: tuple[str, ...]
    sources: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        ids = tuple(str(i) for i in self.ids)
        if len(set(ids)) != len(ids):
            raise InvalidInputError("nodule ids must be unique")
        columns = tuple(str(c) for c in self.columns)
        if len(set(columns)) != len(columns):
            raise InvalidInputError("column names must be unique")
        sources = tuple(self.sources)
        if len(sources) != len(columns):
            raise InvalidInputError("every column needs a source tag")
        for s in sources:
            if s not in SOURCE_TAGS:
                raise InvalidInputError(f"unknown source tag {s!r}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(ids), len(columns)):
            raise InvalidInputError(
                f"values shape {values.shape} != ({len(ids)}, {len(columns)})")
        if not np.isfinite(values).all():
            raise InvalidInputError("feature values must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def d(self) -> int:
        return len(self.columns)

    def design_matrix(self) -> DesignMatrix:
        return DesignMatrix(values=self.values, columns=self.columns)

    def subset(self, ids: list[str]) -> "FeatureTable":
        index = {i: k for k, i in enumerate(self.ids)}
        rows = [index[i] for i in ids]
        return FeatureTable(ids=tuple(ids), columns=self.columns,
                            sources=self.sources, values=self.values[rows])


def read_feature_csv(path: str | Path, source: str) -> FeatureTable:
    """Load a nodule_id-keyed CSV, tagging every column with one source."""
    if source not in SOURCE_TAGS:
        raise InvalidInputError(f"unknown source tag {source!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "nodule_id":
            raise InvalidInputError(f"{path}: first column must be nodule_id")
        columns = tuple(header[1:])
        ids, rows = [], []
        for line in reader:
            if len(line) != len(header):
                raise InvalidInputError(f"{path}: ragged row for id {line[:1]}")
            ids.append(line[0])
            rows.append([float(v) for v in line[1:]])
    values = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, len(columns)))
    return FeatureTable(ids=tuple(ids), columns=columns,
                        sources=(source,) * len(columns), values=values)


def write_feature_csv(table: FeatureTable, path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("nodule_id",) + table.columns)
    for i, row in zip(table.ids, table.values):
        writer.writerow([i] + [repr(float(v)) for v in row])
    atomic_write_text(Path(path), buf.getvalue())


def fuse(sources: list[FeatureTable], ablation: str) -> FeatureTable:
    """Inner-join the tables an ablation needs, in its canonical column order.

    When biomarkers and radiomics are both present the biomarker `diameter`
    column is dropped (it duplicates the radiomic size measurements).
    """
    if ablation not in ABLATIONS:
        raise ConfigError(
            f"unknown ablation {ablation!r}; valid: {', '.join(sorted(ABLATIONS))}")
    wanted = ABLATIONS[ablation]
    by_tag: dict[str, FeatureTable] = {}
    for t in sources:
        tags = set(t.sources)
        if len(tags) != 1:
            raise InvalidInputError("fuse inputs must be single-source tables")
        tag = tags.pop()
        if tag in by_tag:
            raise InvalidInputError(f"duplicate source table for {tag!r}")
        by_tag[tag] = t
    missing = [t for t in wanted if t not in by_tag]
    if missing:
        raise ConfigError(f"ablation {ablation!r} needs missing source(s): {missing}")

    picked = [by_tag[t] for t in wanted]
    shared = set(picked[0].ids)
    for t in picked[1:]:
        shared &= set(t.ids)
    ids = sorted(shared)

    drop_diameter = "biomarker" in wanted and "radiomic" in wanted
    columns: list[str] = []
    col_sources: list[str] = []
    blocks: list[np.ndarray] = []
    for t in picked:
        sub = t.subset(ids)
        keep = [k for k, c in enumerate(sub.columns)
                if not (drop_diameter and sub.sources[k] == "biomarker"
                        and c == "diameter")]
        columns.extend(sub.columns[k] for k in keep)
        col_sources.extend(sub.sources[k] for k in keep)
        blocks.append(sub.values[:, keep])
    if len(set(columns)) != len(columns):
        dupes = sorted({c for c in columns if columns.count(c) > 1})
        raise ContractError(f"duplicate column names across sources: {dupes}")
    values = np.hstack(blocks) if blocks else np.empty((len(ids), 0))
    return FeatureTable(ids=tuple(ids), columns=tuple(columns),
                        sources=tuple(col_sources), values=values)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: dict[str, int]
    seed: int
    stratified: bool

    def fold_ids(self, fold: int) -> list[str]:
        return [i for i, f in self.assignment.items() if f == fold]

    def to_jsonable(self) -> dict:
        return {"k": self.k, "seed": self.seed, "stratified": self.stratified,
                "assignment": dict(self.assignment)}

    @staticmethod
    def from_jsonable(obj: dict) -> "FoldPlan":
        return FoldPlan(k=int(obj["k"]),
                        assignment={str(i): int(f)
                                    for i, f in obj["assignment"].items()},
                        seed=int(obj["seed"]), stratified=bool(obj["stratified"]))


def save_fold_plan(plan: FoldPlan, path: str | Path) -> None:
    atomic_write_json(Path(path), plan.to_jsonable())


def load_fold_plan(path: str | Path) -> FoldPlan:
    with open(path, encoding="utf-8") as fh:
        return FoldPlan.from_jsonable(json.load(fh))


def make_folds(ids: list[str], labels: dict[str, int], k: int = 5,
               seed: int = 0, stratified: bool = True) -> FoldPlan:
    """Seeded k-fold partition; stratification round-robins within each class."""
    ids = [str(i) for i in ids]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("ids must be unique")
    if len(ids) < k:
        raise InvalidInputError(f"need at least k={k} samples, got {len(ids)}")
    for i in ids:
        if i not in labels:
            raise InvalidInputError(f"no label for id {i!r}")
    rng = np.random.default_rng(seed)
    assignment: dict[str, int] = {}
    if stratified:
        for cls in (0, 1):
            members = [i for i in ids if labels[i] == cls]
            if not members:
                continue
            if len(members) < k:
                raise InvalidInputError(
                    f"class {cls} has {len(members)} members, fewer than k={k}")
            order = rng.permutation(len(members))
            for pos, idx in enumerate(order):
                assignment[members[idx]] = pos % k
    else:
        order = rng.permutation(len(ids))
        for pos, idx in enumerate(order):
            assignment[ids[idx]] = pos % k
    return FoldPlan(k=k, assignment={i: assignment[i] for i in ids},
                    seed=seed, stratified=stratified)


@dataclass(frozen=True)
class ModelSpec:
    classifier: str
    C: float = 1.0
    l1_lambda: float = 0.1
    gamma: float | None = None
    n_trees: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(
                f"unknown classifier {self.classifier!r}; "
                f"valid: {', '.join(CLASSIFIERS)}")


def fit_spec(spec: ModelSpec, X: DesignMatrix, y: np.ndarray) -> Model:
    if spec.classifier == "svm-linear":
        return svm_fit(X, y, C=spec.C, kernel="linear")
    if spec.classifier == "svm-rbf":
        return svm_fit(X, y, C=spec.C, kernel="rbf", gamma=spec.gamma)
    if spec.classifier == "logreg":
        return logistic_fit(X, y, l1_lambda=0.0)
    if spec.classifier == "logreg-lasso":
        return logistic_fit(X, y, l1_lambda=spec.l1_lambda)
    return forest_fit(X, y, n_trees=spec.n_trees, seed=spec.seed)


def fit_normalization(values: np.ndarray) -> tuple[NormalizationParams, ...]:
    """Per-column population mean/stddev."""
    return tuple(NormalizationParams(mean=float(values[:, j].mean()),
                                     stddev=float(values[:, j].std()))
                 for j in range(values.shape[1]))


def apply_normalization(values: np.ndarray,
                        norm: tuple[NormalizationParams, ...]) -> np.ndarray:
    out = np.empty_like(values, dtype=np.float64)
    for j, p in enumerate(norm):
        col = values[:, j] - p.mean
        out[:, j] = col / p.stddev if p.stddev > 0 else 0.0
    return out


def roc_points(scores: np.ndarray, labels: np.ndarray) -> list[tuple[float, float, float]]:
    """(threshold, fpr, tpr) triples sorted by descending threshold.

    Thresholds are +inf, every distinct score, -inf; a point counts positive
    when score >= threshold, so the curve runs (0,0) -> (1,1).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise InvalidInputError("ROC needs both classes present")
    thresholds = [math.inf] + sorted(set(scores.tolist()), reverse=True) + [-math.inf]
    points = []
    for t in thresholds:
        pred = scores >= t
        tp = int((pred & (labels == 1)).sum())
        fp = int((pred & (labels == 0)).sum())
        points.append((t, fp / n_neg, tp / n_pos))
    return points


def auc_trapezoid(points: list[tuple[float, float, float]]) -> float:
    fpr = np.array([p[1] for p in points])
    tpr = np.array([p[2] for p in points])
    return float(np.trapezoid(tpr, fpr))


@dataclass(frozen=True)
class FoldMetrics:
    fold: int
    n_test: int
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    recall: float | None
    precision: float | None
    auc: float | None
    degenerate: bool
    roc: tuple[tuple[float, float, float], ...]


@dataclass(frozen=True)
class FoldArtifact:
    """Training-side state of one fold, exposed for leakage auditing."""

    fold: int
    normalization: tuple[NormalizationParams, ...]
    model: Model


@dataclass(frozen=True)
class LassoCensus:
    selected: tuple[str, ...]
    count: int
    total: int
    percentage: float
    by_source: dict[str, tuple[str, ...]]

    def to_jsonable(self) -> dict:
        return {"selected": list(self.selected), "count": self.count,
                "total": self.total, "percentage": self.percentage,
                "by_source": {k: list(v) for k, v in self.by_source.items()}}


@dataclass(frozen=True)
class EvalReport:
    classifier: str
    feature_set: str
    seed: int
    k: int
    folds: tuple[FoldMetrics, ...]
    mean_accuracy: float
    mean_recall: float | None
    mean_precision: float | None
    mean_auc: float | None
    census: LassoCensus | None
    artifacts: tuple[FoldArtifact, ...]
    spec: ModelSpec
    nested_selected: tuple[float, ...] | None = None

    def to_jsonable(self) -> dict:
        return {
            "classifier": self.classifier,
            "feature_set": self.feature_set,
            "seed": self.seed,
            "k": self.k,
            "hyperparameters": {
                "C": self.spec.C, "l1_lambda": self.spec.l1_lambda,
                "gamma": self.spec.gamma, "n_trees": self.spec.n_trees,
            },
            "folds": [{
                "fold": f.fold, "n_test": f.n_test,
                "tp": f.tp, "fp": f.fp, "tn": f.tn, "fn": f.fn,
                "accuracy": f.accuracy, "recall": f.recall,
                "precision": f.precision, "auc": f.auc,
                "degenerate": f.degenerate,
                "roc": [[t if math.isfinite(t) else repr(t), fpr, tpr]
                        for t, fpr, tpr in f.roc],
            } for f in self.folds],
            "mean_accuracy": self.mean_accuracy,
            "mean_recall": self.mean_recall,
            "mean_precision": self.mean_precision,
            "mean_auc": self.mean_auc,
            "degenerate_folds": [f.fold for f in self.folds if f.degenerate],
            "census": self.census.to_jsonable() if self.census else None,
            "nested_selected": (list(self.nested_selected)
                                if self.nested_selected is not None else None),
        }


def _mean_or_none(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def _check_plan(table: FeatureTable, labels: dict[str, int],
                plan: FoldPlan) -> None:
    for i in table.ids:
        if i not in labels:
            raise InvalidInputError(f"no label for id {i!r}")
    known = set(table.ids)
    missing = [i for i in plan.assignment if i not in known]
    if missing:
        raise InvalidInputError(f"fold plan covers unknown ids: {missing[:3]}")


def _evaluate_fold(table: FeatureTable, labels: dict[str, int],
                   plan: FoldPlan, fold: int,
                   spec: ModelSpec) -> tuple[FoldMetrics, FoldArtifact]:
    test_ids = [i for i in table.ids if plan.assignment[i] == fold]
    train_ids = [i for i in table.ids if plan.assignment[i] != fold]
    if not test_ids or not train_ids:
        raise InvalidInputError(f"fold {fold} is empty on one side")
    train = table.subset(train_ids)
    test = table.subset(test_ids)
    y_train = np.array([labels[i] for i in train_ids])
    y_test = np.array([labels[i] for i in test_ids])

    norm = fit_normalization(train.values)
    Xtr = DesignMatrix(values=apply_normalization(train.values, norm),
                       columns=table.columns)
    Xte = DesignMatrix(values=apply_normalization(test.values, norm),
                       columns=table.columns)
    model = fit_spec(spec, Xtr, y_train)
    scores = predict_scores(model, Xte)
    pred = (scores > score_threshold(model)).astype(np.int64)

    tp = int(((pred == 1) & (y_test == 1)).sum())
    fp = int(((pred == 1) & (y_test == 0)).sum())
    tn = int(((pred == 0) & (y_test == 0)).sum())
    fn = int(((pred == 0) & (y_test == 1)).sum())
    accuracy = (tp + tn) / len(test_ids)
    degenerate = bool(y_test.min() == y_test.max())
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    if degenerate:
        auc = None
        roc: tuple = ()
    else:
        pts = roc_points(scores, y_test)
        auc = auc_trapezoid(pts)
        roc = tuple(pts)
    metrics = FoldMetrics(fold=fold, n_test=len(test_ids), tp=tp, fp=fp,
                          tn=tn, fn=fn, accuracy=accuracy, recall=recall,
                          precision=precision, auc=auc,
                          degenerate=degenerate, roc=roc)
    return metrics, FoldArtifact(fold=fold, normalization=norm, model=model)


def _assemble_report(feature_set: str, plan: FoldPlan, spec: ModelSpec,
                     folds: list[FoldMetrics], artifacts: list[FoldArtifact],
                     nested_selected: tuple[float, ...] | None = None) -> EvalReport:
    return EvalReport(
        classifier=spec.classifier, feature_set=feature_set, seed=plan.seed,
        k=plan.k, folds=tuple(folds),
        mean_accuracy=float(np.mean([f.accuracy for f in folds])),
        mean_recall=_mean_or_none([f.recall for f in folds]),
        mean_precision=_mean_or_none([f.precision for f in folds]),
        mean_auc=_mean_or_none([f.auc for f in folds]),
        census=None, artifacts=tuple(artifacts), spec=spec,
        nested_selected=nested_selected)


def cross_validate(table: FeatureTable, labels: dict[str, int],
                   spec: ModelSpec, plan: FoldPlan,
                   feature_set: str = "") -> EvalReport:
    """Per-fold fit and held-out scoring with train-only normalization."""
    _check_plan(table, labels, plan)
    folds, artifacts = [], []
    for fold in range(plan.k):
        metrics, artifact = _evaluate_fold(table, labels, plan, fold, spec)
        folds.append(metrics)
        artifacts.append(artifact)
    return _assemble_report(feature_set, plan, spec, folds, artifacts)


def grid_select(table: FeatureTable, labels: dict[str, int], spec: ModelSpec,
                param: str, grid: list[float], k: int = 5,
                stratified: bool = True) -> tuple[float, dict[float, float]]:
    """Pick the grid value with the best mean CV accuracy.

    Ties break toward stronger regularization: the larger l1_lambda, the
    smaller C, the smaller gamma.
    """
    if param not in ("C", "l1_lambda", "gamma"):
        raise ConfigError(f"cannot grid-search parameter {param!r}")
    if not grid:
        raise ConfigError("hyperparameter grid is empty")
    plan = make_folds(list(table.ids), labels, k=k, seed=spec.seed,
                      stratified=stratified)
    means: dict[float, float] = {}
    for value in grid:
        candidate = replace(spec, **{param: value})
        report = cross_validate(table, labels, candidate, plan)
        means[value] = report.mean_accuracy
    prefer_large = param == "l1_lambda"
    best = None
    for value, acc in means.items():
        if best is None:
            best = value
            continue
        if acc > means[best]:
            best = value
        elif acc == means[best]:
            if (value > best) if prefer_large else (value < best):
                best = value
    return float(best), means


def nested_cross_validate(table: FeatureTable, labels: dict[str, int],
                          spec: ModelSpec, param: str, grid: list[float],
                          plan: FoldPlan, feature_set: str = "",
                          inner_k: int = 5) -> EvalReport:
    """Outer CV with per-fold hyperparameter selection on the train split only."""
    _check_plan(table, labels, plan)
    folds, artifacts, selected = [], [], []
    for fold in range(plan.k):
        train_ids = [i for i in table.ids if plan.assignment[i] != fold]
        best, _ = grid_select(table.subset(train_ids), labels, spec,
                              param, grid, k=inner_k,
                              stratified=plan.stratified)
        fold_spec = replace(spec, **{param: best})
        selected.append(best)
        metrics, artifact = _evaluate_fold(table, labels, plan, fold, fold_spec)
        folds.append(metrics)
        artifacts.append(artifact)
    return _assemble_report(feature_set, plan, spec, folds, artifacts,
                            nested_selected=tuple(selected))


def lasso_census(model: LinearModel, table: FeatureTable) -> LassoCensus:
    """Which columns the L1 penalty kept, grouped by source tag."""
    if not isinstance(model, LinearModel) or model.l1_lambda <= 0:
        raise ContractError("census requires a model trained with an L1 penalty")
    if model.feature_names != table.columns:
        raise ContractError("model feature names do not match the table")
    selected = tuple(name for name, w in zip(table.columns, model.weights)
                     if w != 0.0)
    by_source: dict[str, list[str]] = {}
    src = dict(zip(table.columns, table.sources))
    for name in selected:
        by_source.setdefault(src[name], []).append(name)
    return LassoCensus(selected=selected, count=len(selected), total=table.d,
                       percentage=100.0 * len(selected) / table.d if table.d else 0.0,
                       by_source={k: tuple(v) for k, v in sorted(by_source.items())})


def interpolate_tpr(roc: tuple[tuple[float, float, float], ...],
                    fpr_grid: tuple[float, ...] = FPR_GRID) -> np.ndarray:
    """Staircase TPR at fixed FPR points: max TPR among points with fpr <= g."""
    fpr = np.array([p[1] for p in roc])
    tpr = np.array([p[2] for p in roc])
    out = np.zeros(len(fpr_grid))
    for k, g in enumerate(fpr_grid):
        ok = fpr <= g + 1e-12
        out[k] = tpr[ok].max() if ok.any() else 0.0
    return out


def write_roc_csv(report: EvalReport, path: str | Path) -> None:
    """Fold TPR curves interpolated onto the 0..1 step-0.01 FPR grid."""
    usable = [f for f in report.folds if not f.degenerate]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fpr", "tpr_mean"] + [f"tpr_fold_{f.fold}" for f in usable])
    curves = [interpolate_tpr(f.roc) for f in usable]
    for k, g in enumerate(FPR_GRID):
        per_fold = [c[k] for c in curves]
        mean = float(np.mean(per_fold)) if per_fold else 0.0
        writer.writerow([f"{g:.2f}", repr(mean)] + [repr(float(v)) for v in per_fold])
    atomic_write_text(Path(path), buf.getvalue())


def metrics_csv_rows(reports: list[EvalReport]) -> str:
    """Flat (classifier, feature_set, recall, precision, accuracy) table."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["classifier", "feature_set", "recall", "precision",
                     "accuracy", "auc"])
    for r in reports:
        writer.writerow([
            r.classifier, r.feature_set,
            "" if r.mean_recall is None else f"{r.mean_recall:.6f}",
            "" if r.mean_precision is None else f"{r.mean_precision:.6f}",
            f"{r.mean_accuracy:.6f}",
            "" if r.mean_auc is None else f"{r.mean_auc:.6f}",
        ])
    return buf.getvalue()
