"""Synthetic phantom cohort with a known, separable signal structure.

Benign phantoms are smooth ellipsoids with low-frequency interior texture;
malignant phantoms are spiculated blobs with high-frequency noise. Ratings
are drawn so the malignancy median is never 3, every nodule has 2 to 4
annotators, and volumes are written on anisotropic spacing so ingestion has
to resample. Alongside the ingestable annotation directory the generator
emits stand-in prediction CSVs: biomarkers (truth plus noise) and CNN
features (a few label-informative columns among pure noise).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import volume as vol
from .cohort import BIOMARKER_NAMES
from .errors import InvalidInputError
from .evaluation import FeatureTable, write_feature_csv
from .volume import ScalarVolume, SegMask

FIXTURE_SPACING = (0.9, 0.9, 1.4)
GRID_DIMS = (48, 48, 32)
HU_AIR = -1000.0

# per-label biomarker truth centers; annotators and the predicted-biomarker
# CSV jitter around these
_BIO_TRUTH = {
    0: {"subtlety": 2.0, "calcification": 5.5, "sphericity": 4.5,
        "margin": 4.5, "lobulation": 1.5, "spiculation": 1.3, "texture": 4.8},
    1: {"subtlety": 4.0, "calcification": 3.0, "sphericity": 2.2,
        "margin": 2.0, "lobulation": 3.8, "spiculation": 4.2, "texture": 3.5},
}
_BIO_RANGE = {"calcification": (1.0, 6.0)}
N_INFORMATIVE_CNN = 8


@dataclass(frozen=True)
class PhantomSpec:
    n_nodules: int = 200
    seed: int = 0
    cnn_width: int = 128

    def __post_init__(self) -> None:
        if self.n_nodules < 1:
            raise InvalidInputError("n_nodules must be positive")
        if self.cnn_width < N_INFORMATIVE_CNN:
            raise InvalidInputError(
                f"cnn_width must be at least {N_INFORMATIVE_CNN}")


def _offsets_mm(center_vox: np.ndarray) -> np.ndarray:
    """(nx, ny, nz, 3) voxel-center offsets from the nodule center, in mm."""
    axes = [(np.arange(n) - c) * s
            for n, c, s in zip(GRID_DIMS, center_vox, FIXTURE_SPACING)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack(grid, axis=-1)


def _ellipsoid_mask(offsets: np.ndarray, semi_axes: np.ndarray) -> np.ndarray:
    return (np.sum((offsets / semi_axes) ** 2, axis=-1) <= 1.0)


def _spiculated_mask(offsets: np.ndarray, r0: float, spikes: list[tuple[np.ndarray, float, float]]) -> np.ndarray:
    r = np.linalg.norm(offsets, axis=-1)
    inside = r <= r0
    safe_r = np.where(r > 0, r, 1.0)
    dirs = offsets / safe_r[..., None]
    for u, cos_width, length in spikes:
        along = dirs @ u
        inside |= (along >= cos_width) & (r <= r0 * (1.0 + length))
    return inside


def _phantom(nodule_id: str, label: int, rng: np.random.Generator):
    """One phantom: volume, per-annotator masks/ratings, biomarker truth."""
    center = np.array(GRID_DIMS) / 2.0 + rng.uniform(-1.5, 1.5, size=3)
    offsets = _offsets_mm(center)

    if label == 0:
        semi = rng.uniform(5.0, 10.0, size=3)
        base_mask = _ellipsoid_mask(offsets, semi)
        diameter = 2.0 * float(semi.max())

        def annotator_mask(g: np.random.Generator) -> np.ndarray:
            return _ellipsoid_mask(offsets, semi * g.uniform(0.93, 1.07))

        interior_hu = -60.0 + 40.0 * _smooth_noise(rng)
    else:
        r0 = rng.uniform(4.5, 8.0)
        spikes = []
        for _ in range(int(rng.integers(8, 15))):
            u = rng.normal(size=3)
            u /= np.linalg.norm(u)
            cos_width = np.cos(rng.uniform(0.15, 0.35))
            spikes.append((u, cos_width, rng.uniform(0.4, 0.9)))
        base_mask = _spiculated_mask(offsets, r0, spikes)
        longest = max(length for _, _, length in spikes)
        diameter = 2.0 * r0 * (1.0 + longest)

        def annotator_mask(g: np.random.Generator) -> np.ndarray:
            return _spiculated_mask(offsets, r0 * g.uniform(0.93, 1.07), spikes)

        interior_hu = 20.0 + rng.normal(0.0, 120.0, size=GRID_DIMS)

    values = np.full(GRID_DIMS, HU_AIR) + np.abs(rng.normal(0.0, 12.0, size=GRID_DIMS))
    values[base_mask] = np.clip(np.broadcast_to(interior_hu, GRID_DIMS),
                                -850.0, 400.0)[base_mask]
    values = np.clip(values, -1000.0, 400.0)

    truth = {k: v + rng.normal(0.0, 0.35) for k, v in _BIO_TRUTH[label].items()}
    truth["diameter"] = diameter

    n_annotators = int(rng.integers(2, 5))
    ratings_pool = (1, 2) if label == 0 else (4, 5)
    annotations = []
    for a in range(n_annotators):
        bio = {}
        for name in BIOMARKER_NAMES:
            if name == "diameter":
                continue
            lo, hi = _BIO_RANGE.get(name, (1.0, 5.0))
            bio[name] = float(np.clip(round(truth[name] + rng.normal(0.0, 0.3)), lo, hi))
        mask_bits = annotator_mask(rng)
        if not mask_bits.any():
            mask_bits = base_mask
        extent = np.argwhere(mask_bits)
        span_mm = ((extent.max(axis=0) - extent.min(axis=0) + 1)
                   * np.array(FIXTURE_SPACING))
        bio["diameter"] = float(span_mm.max())
        annotations.append({
            "annotator_id": f"rater-{a}",
            "malignancy": int(rng.choice(ratings_pool)),
            "biomarkers": bio,
            "mask": mask_bits,
        })
    return ScalarVolume(values, FIXTURE_SPACING), annotations, truth


def _smooth_noise(rng: np.random.Generator) -> np.ndarray:
    raw = rng.normal(size=GRID_DIMS)
    smooth = ndimage.gaussian_filter(raw, sigma=3.0)
    return smooth / max(float(smooth.std()), 1e-12)


def generate_fixture_cohort(out_dir: str, spec: PhantomSpec | None = None) -> dict:
    """Write the annotation directory plus stand-in prediction CSVs.

    Returns a manifest dict (also written to fixtures_manifest.json).
    """
    spec = spec or PhantomSpec()
    ann_dir = os.path.join(out_dir, "annotations")
    os.makedirs(ann_dir, exist_ok=True)

    run_rng = np.random.default_rng(spec.seed)
    cnn_weights = run_rng.uniform(1.5, 3.0, size=N_INFORMATIVE_CNN)
    cnn_weights *= run_rng.choice((-1.0, 1.0), size=N_INFORMATIVE_CNN)

    ids, labels = [], []
    bio_rows, cnn_rows = [], []
    for i in range(spec.n_nodules):
        nodule_id = f"phantom-{i:04d}"
        label = i % 2
        rng = np.random.default_rng([spec.seed, i])
        volume, annotations, truth = _phantom(nodule_id, label, rng)

        vol_name = f"{nodule_id}.cvol.json"
        vol.save_volume(os.path.join(ann_dir, vol_name), volume)
        doc_annotations = []
        for ann in annotations:
            mask_name = f"{nodule_id}.{ann['annotator_id']}.cmask.json"
            vol.save_mask(os.path.join(ann_dir, mask_name),
                          SegMask(ann["mask"]), spacing=FIXTURE_SPACING)
            bio = dict(ann["biomarkers"])
            bio["diameter_mm"] = bio.pop("diameter")
            doc_annotations.append({
                "annotator_id": ann["annotator_id"],
                "malignancy": ann["malignancy"],
                "biomarkers": bio,
                "mask": mask_name,
            })
        vol.atomic_write_json(
            os.path.join(ann_dir, f"{nodule_id}.nodule.json"),
            {"nodule_id": nodule_id, "volume": vol_name,
             "annotations": doc_annotations})

        ids.append(nodule_id)
        labels.append(label)
        bio_rows.append([truth[n] + rng.normal(0.0, 0.4) for n in BIOMARKER_NAMES])
        noise = rng.normal(size=spec.cnn_width)
        noise[:N_INFORMATIVE_CNN] += label * cnn_weights
        cnn_rows.append(noise)

    bio_table = FeatureTable(
        ids=tuple(ids), columns=BIOMARKER_NAMES,
        sources=("biomarker",) * len(BIOMARKER_NAMES),
        values=np.asarray(bio_rows))
    write_feature_csv(bio_table, os.path.join(out_dir, "predicted_biomarkers.csv"))

    cnn_cols = tuple(f"cnn_{j:04d}" for j in range(spec.cnn_width))
    cnn_table = FeatureTable(ids=tuple(ids), columns=cnn_cols,
                             sources=("cnn",) * spec.cnn_width,
                             values=np.asarray(cnn_rows))
    write_feature_csv(cnn_table, os.path.join(out_dir, "cnn_features.csv"))

    manifest = {
        "n_nodules": spec.n_nodules,
        "seed": spec.seed,
        "cnn_width": spec.cnn_width,
        "n_benign": labels.count(0),
        "n_malignant": labels.count(1),
        "spacing_mm": list(FIXTURE_SPACING),
        "annotations_dir": "annotations",
    }
    vol.atomic_write_json(os.path.join(out_dir, "fixtures_manifest.json"), manifest)
    return manifest
