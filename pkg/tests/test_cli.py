"""End-to-end command line runs on a tiny phantom cohort."""

import json
import os

import pytest

from conrad import cli
from conrad.evaluation import read_feature_csv
from conrad.radiomics import FEATURE_NAMES


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """fixtures -> ingest -> extract, shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    fx = root / "fixtures"
    cohort = root / "cohort"
    rad_csv = root / "radiomics.csv"
    assert cli.main(["fixtures", "--out", str(fx), "--n-nodules", "8",
                     "--cnn-width", "12", "--seed", "3"]) == cli.OK
    assert cli.main(["ingest", "--annotations", str(fx / "annotations"),
                     "--out", str(cohort)]) == cli.OK
    assert cli.main(["extract", "--cohort", str(cohort),
                     "--out", str(rad_csv)]) == cli.OK
    return root, fx, cohort, rad_csv


class TestPipelineOutputs:
    def test_ingest_outputs(self, pipeline):
        _, _, cohort, _ = pipeline
        labels = (cohort / "labels.csv").read_text().strip().split("\n")
        assert labels[0] == "nodule_id,label"
        assert len(labels) == 9
        assert {line.split(",")[1] for line in labels[1:]} == {"0", "1"}
        summary = json.loads((cohort / "summary.json").read_text())
        assert summary["n_total"] == 8
        assert summary["failures"] == []
        assert len(list(cohort.glob("*.record.json"))) == 8
        bio = read_feature_csv(cohort / "biomarkers.csv", "biomarker")
        assert bio.d == 8

    def test_extract_output(self, pipeline):
        _, _, _, rad_csv = pipeline
        table = read_feature_csv(rad_csv, "radiomic")
        assert table.columns == FEATURE_NAMES
        assert table.n == 8

    def test_fuse_writes_joined_csv(self, pipeline):
        root, _, cohort, rad_csv = pipeline
        out = root / "fused"
        rc = cli.main(["fuse", "--ablation", "bio+rad",
                       "--cohort", str(cohort), "--radiomics", str(rad_csv),
                       "--out", str(out)])
        assert rc == cli.OK
        fused = read_feature_csv(out / "fused_bio_rad.csv", "radiomic")
        assert fused.d == 114

    def test_evaluate_writes_report_bundle(self, pipeline):
        root, _, cohort, rad_csv = pipeline
        out = root / "eval"
        rc = cli.main(["evaluate", "--ablation", "bio+rad",
                       "--classifier", "logreg", "--cohort", str(cohort),
                       "--radiomics", str(rad_csv), "--out", str(out),
                       "--k-folds", "2"])
        assert rc == cli.OK
        for name in ("report.json", "metrics.csv", "roc.csv", "fold_plan.json"):
            assert (out / name).exists(), name
        doc = json.loads((out / "report.json").read_text())
        assert doc["classifier"] == "logreg"
        assert doc["feature_set"] == "bio+rad"
        assert doc["k"] == 2
        assert len(doc["folds"]) == 2

    def test_evaluate_lasso_reports_census(self, pipeline):
        root, _, cohort, rad_csv = pipeline
        out = root / "eval_lasso"
        rc = cli.main(["evaluate", "--ablation", "bio+rad",
                       "--classifier", "logreg-lasso", "--cohort", str(cohort),
                       "--radiomics", str(rad_csv), "--out", str(out),
                       "--k-folds", "2"])
        assert rc == cli.OK
        doc = json.loads((out / "report.json").read_text())
        census = doc["census"]
        assert census["total"] == 114
        assert census["count"] == len(census["selected"])
        assert set(census["by_source"]) <= {"biomarker", "radiomic"}

    def test_toml_config_drives_commands(self, pipeline, tmp_path):
        root, _, cohort, rad_csv = pipeline
        out = tmp_path / "eval_toml"
        conf = tmp_path / "run.toml"
        conf.write_text(
            f'cohort_dir = "{cohort}"\nradiomics_csv = "{rad_csv}"\n'
            f'output_dir = "{out}"\nablation = "biomarkers"\n'
            'classifier = "forest"\nk_folds = 2\nn_trees = 10\n')
        assert cli.main(["evaluate", "--config", str(conf)]) == cli.OK
        doc = json.loads((out / "report.json").read_text())
        assert doc["classifier"] == "forest"


class TestExitCodes:
    def test_missing_required_settings_fatal(self, capsys):
        assert cli.main(["evaluate"]) == cli.FATAL
        assert "error:" in capsys.readouterr().err

    def test_unknown_ablation_fatal(self, capsys):
        assert cli.main(["fuse", "--ablation", "nope", "--out", "/tmp/x"]) == cli.FATAL
        assert "unknown ablation" in capsys.readouterr().err

    def test_missing_annotations_dir_fatal(self, tmp_path, capsys):
        rc = cli.main(["ingest", "--annotations", str(tmp_path / "nope"),
                       "--out", str(tmp_path / "out")])
        assert rc == cli.FATAL

    def test_ingest_partial_on_bad_annotation(self, pipeline, tmp_path, capsys):
        _, fx, _, _ = pipeline
        ann = tmp_path / "annotations"
        ann.mkdir()
        for path in (fx / "annotations").iterdir():
            (ann / path.name).write_bytes(path.read_bytes())
        (ann / "phantom-0001.nodule.json").write_text("{ not json")
        out = tmp_path / "cohort"
        rc = cli.main(["ingest", "--annotations", str(ann), "--out", str(out)])
        assert rc == cli.PARTIAL
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["failures"]) == 1
        assert summary["failures"][0]["file"] == "phantom-0001.nodule.json"
        # the other records still landed
        assert len(list(out.glob("*.record.json"))) == 7

    def test_extract_partial_on_bad_record(self, pipeline, tmp_path, capsys):
        _, _, cohort, _ = pipeline
        broken = tmp_path / "cohort"
        broken.mkdir()
        for path in cohort.iterdir():
            (broken / path.name).write_bytes(path.read_bytes())
        first = sorted(broken.glob("*.record.json"))[0]
        first.write_text("{ not json")
        out_csv = tmp_path / "rad.csv"
        rc = cli.main(["extract", "--cohort", str(broken), "--out", str(out_csv)])
        assert rc == cli.PARTIAL
        failures = json.loads((tmp_path / "rad.csv.failures.json").read_text())
        assert len(failures) == 1
        table = read_feature_csv(out_csv, "radiomic")
        assert table.n == 7


class TestMatrix:
    def test_matrix_skips_finished_combos(self, pipeline, tmp_path):
        root, fx, cohort, rad_csv = pipeline
        out = tmp_path / "matrix"
        # pre-seed every combo with a finished report; the sweep must skip
        # all of them and assemble matrix.csv from what is on disk
        from conrad.evaluation import ABLATIONS, CLASSIFIERS
        for ablation in ABLATIONS:
            for classifier in CLASSIFIERS:
                combo = out / ablation.replace("+", "_") / classifier
                combo.mkdir(parents=True)
                (combo / "report.json").write_text(json.dumps({
                    "classifier": classifier, "feature_set": ablation,
                    "mean_recall": None, "mean_precision": None,
                    "mean_accuracy": 0.123456, "mean_auc": None}))
        rc = cli.main(["matrix", "--cohort", str(cohort),
                       "--radiomics", str(rad_csv),
                       "--cnn", str(fx / "cnn_features.csv"),
                       "--out", str(out), "--k-folds", "2"])
        assert rc == cli.OK
        lines = (out / "matrix.csv").read_text().strip().split("\n")
        assert lines[0] == "classifier,feature_set,recall,precision,accuracy,auc"
        assert len(lines) == 1 + 35
        assert all(",0.123456," in line for line in lines[1:])

    def test_matrix_runs_real_combos(self, pipeline, tmp_path):
        root, fx, cohort, rad_csv = pipeline
        out = tmp_path / "matrix"
        rc = cli.main(["matrix", "--cohort", str(cohort),
                       "--radiomics", str(rad_csv),
                       "--cnn", str(fx / "cnn_features.csv"),
                       "--out", str(out), "--k-folds", "2", "--n-trees", "10"])
        assert rc == cli.OK
        lines = (out / "matrix.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 35
        assert not (out / "matrix_failures.json").exists()
        report = json.loads(
            (out / "bio_rad" / "svm-rbf" / "report.json").read_text())
        assert report["feature_set"] == "bio+rad"
