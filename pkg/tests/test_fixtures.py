"""Phantom cohort generator: determinism, label structure, file layout."""

import filecmp
import json
import os

import numpy as np
import pytest

from conrad.cohort import BIOMARKER_NAMES
from conrad.errors import InvalidInputError
from conrad.evaluation import read_feature_csv
from conrad.fixtures import (
    FIXTURE_SPACING,
    N_INFORMATIVE_CNN,
    PhantomSpec,
    generate_fixture_cohort,
)


@pytest.fixture(scope="module")
def cohort(tmp_path_factory):
    out = tmp_path_factory.mktemp("phantoms")
    manifest = generate_fixture_cohort(str(out), PhantomSpec(n_nodules=10, seed=4))
    return out, manifest


class TestSpecValidation:
    def test_defaults(self):
        spec = PhantomSpec()
        assert spec.n_nodules == 200
        assert spec.cnn_width == 128

    def test_zero_nodules_rejected(self):
        with pytest.raises(InvalidInputError):
            PhantomSpec(n_nodules=0)

    def test_cnn_width_floor(self):
        with pytest.raises(InvalidInputError):
            PhantomSpec(cnn_width=N_INFORMATIVE_CNN - 1)


class TestManifest:
    def test_contents(self, cohort):
        out, manifest = cohort
        assert manifest["n_nodules"] == 10
        assert manifest["n_benign"] == 5
        assert manifest["n_malignant"] == 5
        assert manifest["spacing_mm"] == list(FIXTURE_SPACING)
        on_disk = json.loads((out / "fixtures_manifest.json").read_text())
        assert on_disk == manifest

    def test_annotation_files_present(self, cohort):
        out, _ = cohort
        ann = out / "annotations"
        nodules = sorted(p.name for p in ann.glob("*.nodule.json"))
        assert len(nodules) == 10
        doc = json.loads((ann / nodules[0]).read_text())
        assert (ann / doc["volume"]).exists()
        for a in doc["annotations"]:
            assert (ann / a["mask"]).exists()
            assert set(a["biomarkers"]) == (
                {n for n in BIOMARKER_NAMES if n != "diameter"} | {"diameter_mm"})


class TestLabelStructure:
    def test_ratings_never_ambiguous(self, cohort):
        out, _ = cohort
        for path in sorted((out / "annotations").glob("*.nodule.json")):
            doc = json.loads(path.read_text())
            idx = int(doc["nodule_id"].split("-")[1])
            pool = (1, 2) if idx % 2 == 0 else (4, 5)
            assert 2 <= len(doc["annotations"]) <= 4
            for a in doc["annotations"]:
                assert a["malignancy"] in pool

    def test_csv_shapes(self, cohort):
        out, _ = cohort
        bio = read_feature_csv(out / "predicted_biomarkers.csv", "biomarker")
        cnn = read_feature_csv(out / "cnn_features.csv", "cnn")
        assert bio.columns == BIOMARKER_NAMES
        assert bio.d == 8
        assert cnn.d == 128
        assert cnn.columns[0] == "cnn_0000"
        assert bio.ids == cnn.ids == tuple(f"phantom-{i:04d}" for i in range(10))

    def test_informative_cnn_columns_separate_labels(self, cohort):
        out, _ = cohort
        cnn = read_feature_csv(out / "cnn_features.csv", "cnn")
        labels = np.array([int(i.split("-")[1]) % 2 for i in cnn.ids])
        gaps = np.abs(cnn.values[labels == 1].mean(axis=0)
                      - cnn.values[labels == 0].mean(axis=0))
        assert gaps[:N_INFORMATIVE_CNN].min() > gaps[N_INFORMATIVE_CNN:].mean()


class TestDeterminism:
    def test_same_seed_same_bytes(self, tmp_path, cohort):
        out, _ = cohort
        again = tmp_path / "again"
        generate_fixture_cohort(str(again), PhantomSpec(n_nodules=10, seed=4))
        for name in ("predicted_biomarkers.csv", "cnn_features.csv",
                     "fixtures_manifest.json"):
            assert filecmp.cmp(out / name, again / name, shallow=False), name
        ours = sorted(os.listdir(out / "annotations"))
        theirs = sorted(os.listdir(again / "annotations"))
        assert ours == theirs
        for name in ours[:12]:
            assert filecmp.cmp(out / "annotations" / name,
                               again / "annotations" / name,
                               shallow=False), name

    def test_different_seed_differs(self, tmp_path, cohort):
        out, _ = cohort
        other = tmp_path / "other"
        generate_fixture_cohort(str(other), PhantomSpec(n_nodules=10, seed=5))
        assert not filecmp.cmp(out / "predicted_biomarkers.csv",
                               other / "predicted_biomarkers.csv",
                               shallow=False)
