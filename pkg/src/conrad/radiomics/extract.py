"""Full feature census for one ROI: 107 values in registry order."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ContractError, InvalidInputError
from ..volume import ScalarVolume, SegMask
from .discretize import DEFAULT_BIN_WIDTH, discretize
from .firstorder import first_order_features
from .registry import CLASS_NAMES, FEATURE_NAMES
from .shape import shape_features
from .texture import (
    gldm_features,
    glcm_features,
    glrlm_features,
    glszm_features,
    ngtdm_features,
)


@dataclass(frozen=True)
class RadiomicsConfig:
    bin_width: float = DEFAULT_BIN_WIDTH
    glcm_distance: int = 1
    connectivity: int = 26
    gldm_alpha: int = 0

    def __post_init__(self) -> None:
        if not self.bin_width > 0:
            raise ConfigError(f"bin_width must be positive, got {self.bin_width}")
        if self.glcm_distance != 1:
            raise ConfigError("only distance-1 co-occurrence is supported")
        if self.connectivity != 26:
            raise ConfigError("only 26-connectivity is supported")
        if self.gldm_alpha < 0:
            raise ConfigError("gldm_alpha must be non-negative")


def extract_all(
    volume: ScalarVolume,
    mask: SegMask,
    config: RadiomicsConfig | None = None,
) -> dict[str, float]:
    """Compute every registry feature for one masked ROI.

    Returns a dict keyed "class.name" whose iteration order matches
    FEATURE_NAMES exactly. All values are finite floats.
    """
    cfg = config or RadiomicsConfig()
    mask.require_compatible(volume)
    if mask.count() == 0:
        raise InvalidInputError("mask selects no voxels")

    roi = discretize(volume, mask, cfg.bin_width)

    by_class = {
        "firstorder": first_order_features(volume, mask, cfg.bin_width),
        "shape": shape_features(mask, volume.spacing),
        "glcm": glcm_features(roi),
        "glrlm": glrlm_features(roi),
        "glszm": glszm_features(roi),
        "ngtdm": ngtdm_features(roi),
        "gldm": gldm_features(roi, alpha=cfg.gldm_alpha),
    }

    out: dict[str, float] = {}
    for cls, names in CLASS_NAMES.items():
        values = by_class[cls]
        missing = [n for n in names if n not in values]
        extra = [n for n in values if n not in names]
        if missing or extra:
            raise ContractError(
                f"{cls} census mismatch: missing={missing} extra={extra}"
            )
        for name in names:
            val = float(values[name])
            if not np.isfinite(val):
                raise ContractError(f"non-finite value for {cls}.{name}: {val}")
            out[f"{cls}.{name}"] = val

    if tuple(out) != FEATURE_NAMES:
        raise ContractError("feature order drifted from registry")
    return out
