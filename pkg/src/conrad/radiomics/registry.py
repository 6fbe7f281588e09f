"""Frozen feature-name registry: the CSV column contract.

The order below is the output order everywhere (vectors, CSV headers).
Formulas per name live in docs/feature_registry.md; changing a name or the
order is a breaking schema change.
"""

FIRSTORDER_NAMES = (
    "energy", "total_energy", "entropy", "minimum", "percentile_10",
    "percentile_90", "maximum", "mean", "median", "interquartile_range",
    "range", "mean_absolute_deviation", "robust_mean_absolute_deviation",
    "root_mean_squared", "skewness", "kurtosis", "variance", "uniformity",
)

SHAPE_NAMES = (
    "mesh_volume", "voxel_volume", "surface_area", "surface_volume_ratio",
    "sphericity", "max_diameter_3d", "max_diameter_2d_axial",
    "max_diameter_2d_coronal", "max_diameter_2d_sagittal",
    "major_axis_length", "minor_axis_length", "least_axis_length",
    "elongation", "flatness",
)

GLCM_NAMES = (
    "autocorrelation", "joint_average", "cluster_prominence", "cluster_shade",
    "cluster_tendency", "contrast", "correlation", "difference_average",
    "difference_entropy", "difference_variance", "joint_energy",
    "joint_entropy", "imc1", "imc2", "idm", "idmn", "id", "idn",
    "inverse_variance", "maximum_probability", "mcc", "sum_average",
    "sum_entropy", "sum_squares",
)

GLRLM_NAMES = (
    "short_run_emphasis", "long_run_emphasis", "gray_level_non_uniformity",
    "gray_level_non_uniformity_normalized", "run_length_non_uniformity",
    "run_length_non_uniformity_normalized", "run_percentage",
    "gray_level_variance", "run_variance", "run_entropy",
    "low_gray_level_run_emphasis", "high_gray_level_run_emphasis",
    "short_run_low_gray_level_emphasis", "short_run_high_gray_level_emphasis",
    "long_run_low_gray_level_emphasis", "long_run_high_gray_level_emphasis",
)

GLSZM_NAMES = (
    "small_area_emphasis", "large_area_emphasis", "gray_level_non_uniformity",
    "gray_level_non_uniformity_normalized", "size_zone_non_uniformity",
    "size_zone_non_uniformity_normalized", "zone_percentage",
    "gray_level_variance", "zone_variance", "zone_entropy",
    "low_gray_level_zone_emphasis", "high_gray_level_zone_emphasis",
    "small_area_low_gray_level_emphasis", "small_area_high_gray_level_emphasis",
    "large_area_low_gray_level_emphasis", "large_area_high_gray_level_emphasis",
)

NGTDM_NAMES = ("coarseness", "contrast", "busyness", "complexity", "strength")

GLDM_NAMES = (
    "small_dependence_emphasis", "large_dependence_emphasis",
    "gray_level_non_uniformity", "dependence_non_uniformity",
    "dependence_non_uniformity_normalized", "gray_level_variance",
    "dependence_variance", "dependence_entropy", "low_gray_level_emphasis",
    "high_gray_level_emphasis", "small_dependence_low_gray_level_emphasis",
    "small_dependence_high_gray_level_emphasis",
    "large_dependence_low_gray_level_emphasis",
    "large_dependence_high_gray_level_emphasis",
)

CLASS_NAMES = {
    "firstorder": FIRSTORDER_NAMES,
    "shape": SHAPE_NAMES,
    "glcm": GLCM_NAMES,
    "glrlm": GLRLM_NAMES,
    "glszm": GLSZM_NAMES,
    "ngtdm": NGTDM_NAMES,
    "gldm": GLDM_NAMES,
}

FEATURE_NAMES = tuple(
    f"{cls}.{name}" for cls, names in CLASS_NAMES.items() for name in names
)

assert len(FEATURE_NAMES) == 107
assert len(set(FEATURE_NAMES)) == 107


def feature_names() -> tuple[str, ...]:
    """The 107 registry names in output order."""
    return FEATURE_NAMES
