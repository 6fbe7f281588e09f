"""Multi-annotator nodule aggregation: consensus masks, labels, biomarkers.

Inputs arrive pre-clustered per nodule as a JSON annotation file referencing
a volume pair and one mask pair per annotator. Nodules with more than four
annotations are inadmissible and dropped; a median malignancy of exactly
three is ambiguous and discarded.
"""

from __future__ import annotations

import json
import os
import statistics
from dataclasses import dataclass, field

import numpy as np

from . import volume as vol
from .errors import InvalidInputError
from .volume import ScalarVolume, SegMask, ViewCrop

BIOMARKER_NAMES = (
    "subtlety", "calcification", "sphericity", "margin",
    "lobulation", "spiculation", "texture", "diameter",
)
# annotation files carry the diameter under its unit-qualified key
_BIOMARKER_FILE_KEYS = {"diameter": "diameter_mm"}

MAX_ANNOTATORS = 4
BENIGN, MALIGNANT, DISCARD = "benign", "malignant", "discard"


@dataclass(frozen=True)
class AnnotatorEntry:
    annotator_id: str
    malignancy_rating: int
    biomarkers: dict[str, float]
    mask: SegMask

    def __post_init__(self):
        if self.malignancy_rating not in (1, 2, 3, 4, 5):
            raise InvalidInputError(
                f"malignancy rating must be 1..5, got {self.malignancy_rating}")
        missing = [n for n in BIOMARKER_NAMES if n not in self.biomarkers]
        if missing:
            raise InvalidInputError(f"annotator {self.annotator_id} missing biomarkers {missing}")


@dataclass(frozen=True)
class NoduleRecord:
    nodule_id: str
    views: tuple[ViewCrop, ViewCrop, ViewCrop]
    volume: ScalarVolume            # preprocessed (isotropic, clamped), cropped to ROI
    consensus_mask: SegMask         # aligned to `volume`
    label: int                      # 0 benign, 1 malignant
    annotated_biomarkers: dict[str, float]
    malignancy_median: float
    center: tuple[int, int, int]


@dataclass
class CohortSummary:
    n_total: int = 0
    n_benign: int = 0
    n_malignant: int = 0
    n_discarded: int = 0
    failures: list[dict] = field(default_factory=list)
    discard_reasons: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_benign": self.n_benign,
            "n_malignant": self.n_malignant,
            "n_discarded": self.n_discarded,
            "failures": self.failures,
            "discard_reasons": self.discard_reasons,
        }


def consensus_mask(entries: list[AnnotatorEntry], level: float = 0.5) -> SegMask:
    """Voxel is kept iff the fraction of annotators marking it is >= level."""
    if not entries:
        raise InvalidInputError("consensus requires at least one annotator entry")
    dims = entries[0].mask.dims
    for e in entries[1:]:
        if e.mask.dims != dims:
            raise InvalidInputError(
                f"annotator mask dims differ: {e.mask.dims} != {dims}")
    counts = np.zeros(dims, dtype=np.int32)
    for e in entries:
        counts += e.mask.bits
    return SegMask(counts / len(entries) >= level)


def aggregate_malignancy(ratings: list[int]) -> str:
    """Median rule: <3 benign, >3 malignant, =3 discard (even count: mean of central two)."""
    if not ratings:
        raise InvalidInputError("no malignancy ratings given")
    for r in ratings:
        if r not in (1, 2, 3, 4, 5):
            raise InvalidInputError(f"malignancy rating must be 1..5, got {r}")
    med = statistics.median(ratings)
    if med < 3:
        return BENIGN
    if med > 3:
        return MALIGNANT
    return DISCARD


def average_biomarkers(entries: list[AnnotatorEntry]) -> dict[str, float]:
    """Per-biomarker arithmetic mean over annotators."""
    if not entries:
        raise InvalidInputError("cannot average biomarkers over zero annotators")
    return {
        name: float(np.mean([e.biomarkers[name] for e in entries]))
        for name in BIOMARKER_NAMES
    }


def _load_annotation_file(path: str) -> tuple[str, str, list[AnnotatorEntry]]:
    with open(path) as fh:
        doc = json.load(fh)
    for key in ("nodule_id", "volume", "annotations"):
        if key not in doc:
            raise InvalidInputError(f"annotation file missing field {key!r}: {path}")
    base = os.path.dirname(path)
    entries = []
    for ann in doc["annotations"]:
        raw_bio = ann["biomarkers"]
        bio = {}
        for name in BIOMARKER_NAMES:
            key = _BIOMARKER_FILE_KEYS.get(name, name)
            if key not in raw_bio:
                raise InvalidInputError(
                    f"nodule {doc['nodule_id']}: annotator {ann.get('annotator_id')} "
                    f"missing biomarker {key!r}")
            bio[name] = float(raw_bio[key])
        mask = vol.load_mask(os.path.join(base, ann["mask"]))
        entries.append(AnnotatorEntry(
            annotator_id=str(ann.get("annotator_id", "")),
            malignancy_rating=int(ann["malignancy"]),
            biomarkers=bio,
            mask=mask,
        ))
    return str(doc["nodule_id"]), os.path.join(base, doc["volume"]), entries


def _mask_centroid(m: SegMask) -> tuple[int, int, int]:
    coords = np.argwhere(m.bits)
    return tuple(int(round(c)) for c in coords.mean(axis=0))


def _crop_to_roi(v: ScalarVolume, m: SegMask, pad: int = 4) -> tuple[ScalarVolume, SegMask]:
    coords = np.argwhere(m.bits)
    lo = np.maximum(coords.min(axis=0) - pad, 0)
    hi = np.minimum(coords.max(axis=0) + pad + 1, v.dims)
    sl = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
    return ScalarVolume(v.values[sl], v.spacing), SegMask(m.bits[sl])


def process_nodule(nodule_id: str, volume_path: str, entries: list[AnnotatorEntry],
                   target_spacing: float = 1.0, consensus_level: float = 0.5,
                   crop_size: int = 32) -> NoduleRecord | str:
    """Run one nodule through consensus + label + preprocessing.

    Returns a NoduleRecord, or a discard-reason string for ambiguous or
    inadmissible nodules.
    """
    if len(entries) > MAX_ANNOTATORS:
        return "inadmissible: more than four annotations"
    verdict = aggregate_malignancy([e.malignancy_rating for e in entries])
    if verdict == DISCARD:
        return "ambiguous: malignancy median is 3"

    source = vol.load_volume(volume_path)
    for e in entries:
        e.mask.require_compatible(source)
    consensus = consensus_mask(entries, consensus_level)
    if consensus.count() == 0:
        raise InvalidInputError(f"nodule {nodule_id}: consensus mask is empty")

    iso = vol.resample_isotropic(source, target_spacing)
    iso_mask = vol.resample_mask_isotropic(consensus, source.spacing, target_spacing)
    if iso_mask.count() == 0:
        raise InvalidInputError(f"nodule {nodule_id}: mask vanished under resampling")
    clamped = vol.clamp_hu(iso)

    center = _mask_centroid(iso_mask)
    views = vol.extract_views(clamped, center, size=crop_size)
    roi_vol, roi_mask = _crop_to_roi(clamped, iso_mask)

    med = statistics.median([e.malignancy_rating for e in entries])
    return NoduleRecord(
        nodule_id=nodule_id,
        views=views,
        volume=roi_vol,
        consensus_mask=roi_mask,
        label=1 if verdict == MALIGNANT else 0,
        annotated_biomarkers=average_biomarkers(entries),
        malignancy_median=float(med),
        center=center,
    )


def build_cohort(annotations_dir: str, target_spacing: float = 1.0,
                 consensus_level: float = 0.5) -> tuple[list[NoduleRecord], CohortSummary]:
    """Process every *.nodule.json in a directory, in nodule_id order.

    Malformed records are reported in the summary and skipped; processing
    continues.
    """
    summary = CohortSummary()
    paths = sorted(
        os.path.join(annotations_dir, f)
        for f in os.listdir(annotations_dir)
        if f.endswith(".nodule.json")
    )
    loaded = []
    for path in paths:
        try:
            loaded.append(_load_annotation_file(path))
        except Exception as exc:
            summary.failures.append({"file": os.path.basename(path), "error": str(exc)})
    loaded.sort(key=lambda t: t[0])

    records = []
    for nodule_id, volume_path, entries in loaded:
        try:
            result = process_nodule(nodule_id, volume_path, entries,
                                    target_spacing, consensus_level)
        except Exception as exc:
            summary.failures.append({"nodule_id": nodule_id, "error": str(exc)})
            continue
        if isinstance(result, str):
            summary.n_discarded += 1
            summary.discard_reasons.append({"nodule_id": nodule_id, "reason": result})
            continue
        records.append(result)
        summary.n_total += 1
        if result.label == 1:
            summary.n_malignant += 1
        else:
            summary.n_benign += 1
    return records, summary


# ---------------------------------------------------------------------------
# Cohort persistence: one record JSON + preprocessed cvol/cmask pair per nodule.

def save_record(record: NoduleRecord, out_dir: str) -> None:
    vol_name = f"{record.nodule_id}.cvol.json"
    mask_name = f"{record.nodule_id}.cmask.json"
    vol.save_volume(os.path.join(out_dir, vol_name), record.volume)
    vol.save_mask(os.path.join(out_dir, mask_name), record.consensus_mask,
                  spacing=record.volume.spacing)
    doc = {
        "nodule_id": record.nodule_id,
        "label": record.label,
        "malignancy_median": record.malignancy_median,
        "biomarkers": record.annotated_biomarkers,
        "center": list(record.center),
        "volume": vol_name,
        "mask": mask_name,
        "views": {c.plane: c.pixels.tolist() for c in record.views},
    }
    vol.atomic_write_json(os.path.join(out_dir, f"{record.nodule_id}.record.json"), doc)


def load_record(path: str) -> NoduleRecord:
    with open(path) as fh:
        doc = json.load(fh)
    base = os.path.dirname(path)
    volume = vol.load_volume(os.path.join(base, doc["volume"]))
    mask = vol.load_mask(os.path.join(base, doc["mask"]))
    center = tuple(int(c) for c in doc["center"])
    views = tuple(
        ViewCrop(plane, np.asarray(doc["views"][plane], dtype=np.float64), center)
        for plane in ("axial", "coronal", "sagittal")
    )
    return NoduleRecord(
        nodule_id=doc["nodule_id"],
        views=views,
        volume=volume,
        consensus_mask=mask,
        label=int(doc["label"]),
        annotated_biomarkers={k: float(x) for k, x in doc["biomarkers"].items()},
        malignancy_median=float(doc["malignancy_median"]),
        center=center,
    )


def load_cohort(cohort_dir: str) -> list[NoduleRecord]:
    """Load every record in a cohort directory, sorted by nodule_id."""
    paths = sorted(
        os.path.join(cohort_dir, f)
        for f in os.listdir(cohort_dir)
        if f.endswith(".record.json")
    )
    return [load_record(p) for p in paths]
