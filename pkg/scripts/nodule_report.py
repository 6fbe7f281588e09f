#!/usr/bin/env python3
"""Print an interpretable single-nodule readout from a cohort record.

Shows the consensus label and biomarkers next to the highest-signal shape
and first-order radiomics, the quantities a reader can sanity-check by eye.

Usage: scripts/nodule_report.py COHORT_DIR NODULE_ID
"""

import sys

from conrad.cohort import BIOMARKER_NAMES, load_record
from conrad.radiomics import extract_all

SHOWN_FEATURES = (
    "shape.voxel_volume",
    "shape.mesh_volume",
    "shape.surface_area",
    "shape.sphericity",
    "shape.max_diameter_3d",
    "shape.elongation",
    "shape.flatness",
    "firstorder.mean",
    "firstorder.median",
    "firstorder.entropy",
    "firstorder.variance",
    "glcm.contrast",
    "ngtdm.coarseness",
)


def main(argv: list[str]) -> int:
    if len(argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    cohort_dir, nodule_id = argv[1], argv[2]
    record = load_record(f"{cohort_dir}/{nodule_id}.record.json")

    print(f"nodule {record.nodule_id}")
    print(f"  label: {'malignant' if record.label == 1 else 'benign'} "
          f"(median malignancy rating {record.malignancy_median:.1f})")
    print("  annotated biomarkers:")
    for name in BIOMARKER_NAMES:
        print(f"    {name:>14}: {record.annotated_biomarkers[name]:8.3f}")

    features = extract_all(record.volume, record.consensus_mask)
    print("  radiomics highlights:")
    for name in SHOWN_FEATURES:
        print(f"    {name:>28}: {features[name]:12.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
