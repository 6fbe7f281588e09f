"""107-feature radiomics census over a masked volume.

Classes: 18 first-order, 14 shape, 24 GLCM, 16 GLRLM, 16 GLSZM, 5 NGTDM,
14 GLDM. Names and formulas are frozen in docs/feature_registry.md; output
order follows the registry exactly.
"""

from .discretize import DiscretizedROI, discretize
from .extract import RadiomicsConfig, extract_all
from .firstorder import first_order_features
from .registry import FEATURE_NAMES, feature_names
from .shape import shape_features
from .texture import (
    gldm_features,
    glcm_features,
    glrlm_features,
    glszm_features,
    ngtdm_features,
)

__all__ = [
    "DiscretizedROI",
    "discretize",
    "RadiomicsConfig",
    "extract_all",
    "first_order_features",
    "FEATURE_NAMES",
    "feature_names",
    "shape_features",
    "glcm_features",
    "glrlm_features",
    "glszm_features",
    "ngtdm_features",
    "gldm_features",
]
