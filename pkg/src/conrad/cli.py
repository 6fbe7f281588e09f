"""Batch command line: ingest -> extract -> fuse -> evaluate -> matrix.

Every command is deterministic given its config, inputs, and seed; outputs
are written atomically so an interrupted run never leaves partial files.
Exit codes: 0 success, 1 fatal error, 2 finished with per-record failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from multiprocessing import get_context

import numpy as np

from . import cohort as coh
from . import evaluation as ev
from . import volume as vol
from .config import ExperimentConfig, require, resolve_config
from .errors import ConfigError, ConradError
from .fixtures import PhantomSpec, generate_fixture_cohort
from .learners import DesignMatrix, lambda_max, logistic_fit
from .radiomics import FEATURE_NAMES, RadiomicsConfig, extract_all

OK, FATAL, PARTIAL = 0, 1, 2


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# fixtures

def cmd_fixtures(config: ExperimentConfig) -> int:
    require(config, "output_dir")
    spec = PhantomSpec(n_nodules=config.n_nodules, seed=config.seed,
                       cnn_width=config.cnn_width)
    manifest = generate_fixture_cohort(config.output_dir, spec)
    _progress(f"wrote {manifest['n_nodules']} phantoms to {config.output_dir}")
    return OK


# ---------------------------------------------------------------------------
# ingest

def cmd_ingest(config: ExperimentConfig) -> int:
    require(config, "annotations_dir", "output_dir")
    if not os.path.isdir(config.annotations_dir):
        raise ConfigError(f"annotations dir not found: {config.annotations_dir}")
    os.makedirs(config.output_dir, exist_ok=True)
    records, summary = coh.build_cohort(config.annotations_dir,
                                        target_spacing=config.target_spacing,
                                        consensus_level=config.consensus_level)
    for record in records:
        coh.save_record(record, config.output_dir)

    ids = [r.nodule_id for r in records]
    bio_values = np.array([[r.annotated_biomarkers[n] for n in coh.BIOMARKER_NAMES]
                           for r in records]).reshape(len(records), len(coh.BIOMARKER_NAMES))
    ev.write_feature_csv(
        ev.FeatureTable(ids=tuple(ids), columns=coh.BIOMARKER_NAMES,
                        sources=("biomarker",) * len(coh.BIOMARKER_NAMES),
                        values=bio_values),
        os.path.join(config.output_dir, "biomarkers.csv"))
    labels_lines = ["nodule_id,label"] + [f"{r.nodule_id},{r.label}" for r in records]
    vol.atomic_write_text(os.path.join(config.output_dir, "labels.csv"),
                          "\n".join(labels_lines) + "\n")
    vol.atomic_write_json(os.path.join(config.output_dir, "summary.json"),
                          summary.to_json())
    _progress(f"ingested {summary.n_total} nodules "
              f"({summary.n_benign} benign, {summary.n_malignant} malignant, "
              f"{summary.n_discarded} discarded, {len(summary.failures)} failed)")
    return PARTIAL if summary.failures else OK


# ---------------------------------------------------------------------------
# extract

def _extract_one(args: tuple[str, float]) -> tuple[str, str, list[float] | str]:
    record_path, bin_width = args
    nodule_id = os.path.basename(record_path)[: -len(".record.json")]
    try:
        record = coh.load_record(record_path)
        feats = extract_all(record.volume, record.consensus_mask,
                            RadiomicsConfig(bin_width=bin_width))
        return ("ok", record.nodule_id, list(feats.values()))
    except Exception as exc:
        return ("err", nodule_id, str(exc))


def cmd_extract(config: ExperimentConfig) -> int:
    require(config, "cohort_dir", "radiomics_csv")
    if not os.path.isdir(config.cohort_dir):
        raise ConfigError(f"cohort dir not found: {config.cohort_dir}")
    paths = sorted(
        os.path.join(config.cohort_dir, f)
        for f in os.listdir(config.cohort_dir)
        if f.endswith(".record.json")
    )
    tasks = [(p, config.bin_width) for p in paths]
    if config.jobs > 1 and len(tasks) > 1:
        with get_context("fork").Pool(config.jobs) as pool:
            results = pool.map(_extract_one, tasks)
    else:
        results = []
        for k, task in enumerate(tasks):
            results.append(_extract_one(task))
            if (k + 1) % 25 == 0 or k + 1 == len(tasks):
                _progress(f"extracted {k + 1}/{len(tasks)}")

    rows = {nid: values for status, nid, values in results if status == "ok"}
    failures = [{"nodule_id": nid, "error": values}
                for status, nid, values in results if status == "err"]
    table = ev.FeatureTable(
        ids=tuple(sorted(rows)), columns=FEATURE_NAMES,
        sources=("radiomic",) * len(FEATURE_NAMES),
        values=np.array([rows[i] for i in sorted(rows)]).reshape(len(rows), len(FEATURE_NAMES)))
    ev.write_feature_csv(table, config.radiomics_csv)
    if failures:
        vol.atomic_write_json(config.radiomics_csv + ".failures.json", failures)
        _err(f"{len(failures)} nodule(s) failed extraction")
        return PARTIAL
    return OK


# ---------------------------------------------------------------------------
# fuse / evaluate / matrix plumbing

def _load_labels(cohort_dir: str) -> dict[str, int]:
    path = os.path.join(cohort_dir, "labels.csv")
    labels: dict[str, int] = {}
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            header = fh.readline()
            if header.strip() != "nodule_id,label":
                raise ConfigError(f"unexpected labels.csv header: {header.strip()!r}")
            for line in fh:
                if line.strip():
                    nid, lab = line.strip().split(",")
                    labels[nid] = int(lab)
        return labels
    for record in coh.load_cohort(cohort_dir):
        labels[record.nodule_id] = record.label
    if not labels:
        raise ConfigError(f"no cohort records found in {cohort_dir}")
    return labels


def _load_sources(config: ExperimentConfig, ablation: str) -> list[ev.FeatureTable]:
    wanted = ev.ABLATIONS[ablation]
    sources = []
    for tag in wanted:
        if tag == "radiomic":
            require(config, "radiomics_csv")
            sources.append(ev.read_feature_csv(config.radiomics_csv, "radiomic"))
        elif tag == "biomarker":
            path = config.biomarkers_csv
            if path is None and config.cohort_dir is not None:
                candidate = os.path.join(config.cohort_dir, "biomarkers.csv")
                path = candidate if os.path.exists(candidate) else None
            if path is None:
                raise ConfigError(f"ablation {ablation!r} needs a biomarkers CSV")
            sources.append(ev.read_feature_csv(path, "biomarker"))
        else:
            require(config, "cnn_csv")
            sources.append(ev.read_feature_csv(config.cnn_csv, "cnn"))
    return sources


def cmd_fuse(config: ExperimentConfig) -> int:
    require(config, "ablation", "output_dir")
    fused = ev.fuse(_load_sources(config, config.ablation), config.ablation)
    os.makedirs(config.output_dir, exist_ok=True)
    out = os.path.join(config.output_dir,
                       f"fused_{config.ablation.replace('+', '_')}.csv")
    ev.write_feature_csv(fused, out)
    _progress(f"fused {fused.n} rows x {fused.d} columns -> {out}")
    return OK


def _full_table_lasso(table: ev.FeatureTable, labels: dict[str, int],
                      lam: float, seed: int):
    norm = ev.fit_normalization(table.values)
    X = DesignMatrix(values=ev.apply_normalization(table.values, norm),
                     columns=table.columns)
    y = np.array([labels[i] for i in table.ids])
    return logistic_fit(X, y, l1_lambda=lam)


def _select_hyperparameters(table: ev.FeatureTable, labels: dict[str, int],
                            spec: ev.ModelSpec,
                            config: ExperimentConfig) -> tuple[ev.ModelSpec, str | None, list[float]]:
    """Whole-dataset grid selection, per the documented protocol."""
    if spec.classifier in ("svm-linear", "svm-rbf"):
        grid = list(config.grid_c)
        param = "C"
    elif spec.classifier == "logreg-lasso":
        norm = ev.fit_normalization(table.values)
        X = DesignMatrix(values=ev.apply_normalization(table.values, norm),
                         columns=table.columns)
        y = np.array([labels[i] for i in table.ids])
        lmax = lambda_max(X, y)
        grid = [f * lmax for f in config.grid_lambda]
        param = "l1_lambda"
    else:
        return spec, None, []
    if len(grid) == 1:
        return dataclasses.replace(spec, **{param: grid[0]}), param, grid
    if config.nested:
        return spec, param, grid  # nested CV selects per fold
    best, _ = ev.grid_select(table, labels, spec, param, grid,
                             k=config.k_folds, stratified=config.stratified)
    return dataclasses.replace(spec, **{param: best}), param, grid


def _run_eval(config: ExperimentConfig, ablation: str, classifier: str,
              out_dir: str) -> ev.EvalReport:
    require(config, "cohort_dir")
    labels = _load_labels(config.cohort_dir)
    fused = ev.fuse(_load_sources(config, ablation), ablation)
    known = [i for i in fused.ids if i in labels]
    if len(known) < len(fused.ids):
        raise ConfigError("feature rows without labels present")

    spec = ev.ModelSpec(classifier=classifier, gamma=None,
                        n_trees=config.n_trees, seed=config.seed)
    spec, param, grid = _select_hyperparameters(fused, labels, spec, config)
    plan = ev.make_folds(list(fused.ids), labels, k=config.k_folds,
                         seed=config.seed, stratified=config.stratified)
    if config.nested and param is not None and len(grid) > 1:
        report = ev.nested_cross_validate(fused, labels, spec, param, grid,
                                          plan, feature_set=ablation)
    else:
        report = ev.cross_validate(fused, labels, spec, plan,
                                   feature_set=ablation)
    if classifier == "logreg-lasso" and not config.nested:
        model = _full_table_lasso(fused, labels, report.spec.l1_lambda,
                                  config.seed)
        census = ev.lasso_census(model, fused)
        report = dataclasses.replace(report, census=census)

    os.makedirs(out_dir, exist_ok=True)
    vol.atomic_write_json(os.path.join(out_dir, "report.json"),
                          report.to_jsonable())
    vol.atomic_write_text(os.path.join(out_dir, "metrics.csv"),
                          ev.metrics_csv_rows([report]))
    ev.write_roc_csv(report, os.path.join(out_dir, "roc.csv"))
    ev.save_fold_plan(plan, os.path.join(out_dir, "fold_plan.json"))
    return report


def cmd_evaluate(config: ExperimentConfig) -> int:
    require(config, "ablation", "classifier", "output_dir")
    report = _run_eval(config, config.ablation, config.classifier,
                       config.output_dir)
    acc = f"{report.mean_accuracy:.4f}"
    auc = "n/a" if report.mean_auc is None else f"{report.mean_auc:.4f}"
    _progress(f"{config.classifier} on {config.ablation}: "
              f"mean accuracy {acc}, mean AUC {auc}")
    return OK


def _matrix_one(args: tuple[dict, str, str, str]) -> tuple[str, str, str]:
    config_fields, ablation, classifier, combo_dir = args
    config = ExperimentConfig(**config_fields)
    try:
        _run_eval(config, ablation, classifier, combo_dir)
        return (ablation, classifier, "")
    except Exception as exc:
        return (ablation, classifier, str(exc))


def cmd_matrix(config: ExperimentConfig) -> int:
    require(config, "cohort_dir", "output_dir")
    combos = [(a, c) for a in ev.ABLATIONS for c in ev.CLASSIFIERS]
    todo = []
    for ablation, classifier in combos:
        combo_dir = os.path.join(config.output_dir,
                                 ablation.replace("+", "_"), classifier)
        if os.path.exists(os.path.join(combo_dir, "report.json")):
            continue  # resumable: finished combos are skipped
        todo.append((dataclasses.asdict(config), ablation, classifier, combo_dir))

    failures = []
    if config.jobs > 1 and len(todo) > 1:
        with get_context("fork").Pool(config.jobs) as pool:
            outcomes = pool.map(_matrix_one, todo)
    else:
        outcomes = []
        for k, task in enumerate(todo):
            outcomes.append(_matrix_one(task))
            _progress(f"matrix {k + 1}/{len(todo)}: {task[1]} x {task[2]}")
    failures = [{"ablation": a, "classifier": c, "error": e}
                for a, c, e in outcomes if e]

    # assemble the consolidated sweep table from every combo's report
    rows = []
    for ablation, classifier in combos:
        path = os.path.join(config.output_dir, ablation.replace("+", "_"),
                            classifier, "report.json")
        if not os.path.exists(path):
            continue
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        rows.append(doc)
    lines = ["classifier,feature_set,recall,precision,accuracy,auc"]
    for doc in rows:
        def fmt(v):
            return "" if v is None else f"{v:.6f}"
        lines.append(",".join([
            doc["classifier"], doc["feature_set"], fmt(doc["mean_recall"]),
            fmt(doc["mean_precision"]), fmt(doc["mean_accuracy"]),
            fmt(doc["mean_auc"])]))
    vol.atomic_write_text(os.path.join(config.output_dir, "matrix.csv"),
                          "\n".join(lines) + "\n")
    if failures:
        vol.atomic_write_json(os.path.join(config.output_dir, "matrix_failures.json"),
                              failures)
        _err(f"{len(failures)} combination(s) failed")
        return PARTIAL
    return OK


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--seed", type=int, help="rng seed (env CONRAD_SEED is the fallback)")
    p.add_argument("--jobs", type=int, help="worker processes for fan-out commands")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conrad",
        description="Interpretable lung-nodule pipeline: ingest, extract, "
                    "fuse, evaluate, matrix, fixtures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixtures", help="generate a synthetic phantom cohort")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--n-nodules", type=int, dest="n_nodules")
    p.add_argument("--cnn-width", type=int, dest="cnn_width")
    _add_common(p)

    p = sub.add_parser("ingest", help="build cohort records from annotations")
    p.add_argument("--annotations", dest="annotations_dir")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--target-spacing", type=float, dest="target_spacing")
    p.add_argument("--consensus-level", type=float, dest="consensus_level")
    _add_common(p)

    p = sub.add_parser("extract", help="compute the radiomic feature CSV")
    p.add_argument("--cohort", dest="cohort_dir")
    p.add_argument("--out", dest="radiomics_csv")
    p.add_argument("--bin-width", type=float, dest="bin_width")
    _add_common(p)

    p = sub.add_parser("fuse", help="join feature sources for one ablation")
    p.add_argument("--ablation")
    p.add_argument("--radiomics", dest="radiomics_csv")
    p.add_argument("--biomarkers", dest="biomarkers_csv")
    p.add_argument("--cnn", dest="cnn_csv")
    p.add_argument("--cohort", dest="cohort_dir")
    p.add_argument("--out", dest="output_dir")
    _add_common(p)

    p = sub.add_parser("evaluate", help="cross-validate one ablation x classifier")
    p.add_argument("--ablation", dest="ablation")
    p.add_argument("--classifier", dest="classifier")
    p.add_argument("--cohort", dest="cohort_dir")
    p.add_argument("--radiomics", dest="radiomics_csv")
    p.add_argument("--biomarkers", dest="biomarkers_csv")
    p.add_argument("--cnn", dest="cnn_csv")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--k-folds", type=int, dest="k_folds")
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--nested", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--n-trees", type=int, dest="n_trees")
    _add_common(p)

    p = sub.add_parser("matrix", help="run the full ablation x classifier sweep")
    p.add_argument("--cohort", dest="cohort_dir")
    p.add_argument("--radiomics", dest="radiomics_csv")
    p.add_argument("--biomarkers", dest="biomarkers_csv")
    p.add_argument("--cnn", dest="cnn_csv")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--k-folds", type=int, dest="k_folds")
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--nested", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--n-trees", type=int, dest="n_trees")
    _add_common(p)

    return parser


_COMMANDS = {
    "fixtures": cmd_fixtures,
    "ingest": cmd_ingest,
    "extract": cmd_extract,
    "fuse": cmd_fuse,
    "evaluate": cmd_evaluate,
    "matrix": cmd_matrix,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(ns).items()
                 if k not in ("command", "config")}
    try:
        config = resolve_config(ns.config, overrides)
        return _COMMANDS[ns.command](config)
    except ConradError as exc:
        _err(str(exc))
        return FATAL
    except FileNotFoundError as exc:
        _err(str(exc))
        return FATAL


if __name__ == "__main__":
    sys.exit(main())
