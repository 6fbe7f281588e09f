"""Fixed-bin-width gray-level discretization of a masked ROI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InvalidInputError
from ..volume import ScalarVolume, SegMask

DEFAULT_BIN_WIDTH = 25.0


@dataclass(frozen=True)
class DiscretizedROI:
    """Masked voxels binned from the ROI minimum with a fixed bin width.

    ``bins3d`` carries bin index 1..n_bins inside the mask and 0 outside;
    ``bin_index`` is the flat per-masked-voxel view of the same assignment.
    """

    bins3d: np.ndarray            # int32, full-volume shape, 0 = outside mask
    mask: np.ndarray              # bool, same shape
    n_bins: int
    bin_width: float
    roi_min: float
    spacing: tuple[float, float, float]

    @property
    def bin_index(self) -> np.ndarray:
        return self.bins3d[self.mask]

    @property
    def n_voxels(self) -> int:
        return int(self.mask.sum())


def discretize(v: ScalarVolume, m: SegMask, bin_width: float = DEFAULT_BIN_WIDTH) -> DiscretizedROI:
    """bin = floor((x - roi_min)/bin_width) + 1, maximum capped into bin n_bins."""
    if bin_width <= 0:
        raise ConfigError(f"bin width must be positive, got {bin_width}")
    m.require_compatible(v)
    if m.count() == 0:
        raise InvalidInputError("cannot discretize an empty mask")
    roi = v.values[m.bits]
    roi_min = float(roi.min())
    n_bins = int(np.floor((float(roi.max()) - roi_min) / bin_width)) + 1
    bins = np.zeros(v.dims, dtype=np.int32)
    idx = np.floor((v.values[m.bits] - roi_min) / bin_width).astype(np.int32) + 1
    bins[m.bits] = np.minimum(idx, n_bins)
    return DiscretizedROI(
        bins3d=bins, mask=m.bits, n_bins=n_bins,
        bin_width=float(bin_width), roi_min=roi_min, spacing=v.spacing,
    )
