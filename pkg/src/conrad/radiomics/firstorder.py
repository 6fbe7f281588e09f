"""First-order intensity statistics over the masked voxels (18 features).

Entropy and uniformity run over the discretized histogram; both use the
0*log0 := 0 convention. Variance, stddev-derived moments, skewness, and
kurtosis all use the population (n-denominator) convention; kurtosis is
non-excess.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from ..volume import ScalarVolume, SegMask
from .discretize import DEFAULT_BIN_WIDTH, discretize


def first_order_features(v: ScalarVolume, m: SegMask,
                         bin_width: float = DEFAULT_BIN_WIDTH) -> dict[str, float]:
    m.require_compatible(v)
    if m.count() == 0:
        raise InvalidInputError("first-order features require a non-empty mask")
    x = v.values[m.bits].astype(np.float64)
    n = x.size

    d = discretize(v, m, bin_width)
    counts = np.bincount(d.bin_index, minlength=d.n_bins + 1)[1:]
    p = counts[counts > 0] / n

    mean = float(x.mean())
    var = float(x.var())
    p10, p25, p50, p75, p90 = (float(np.percentile(x, q)) for q in (10, 25, 50, 75, 90))
    robust = x[(x >= p10) & (x <= p90)]
    energy = float(np.sum(x * x))

    mu3 = float(np.mean((x - mean) ** 3))
    mu4 = float(np.mean((x - mean) ** 4))
    sigma = np.sqrt(var)
    skewness = mu3 / sigma**3 if sigma > 0 else 0.0
    kurtosis = mu4 / var**2 if var > 0 else 0.0

    return {
        "energy": energy,
        "total_energy": energy * v.voxel_volume_mm3(),
        "entropy": float(-np.sum(p * np.log2(p))),
        "minimum": float(x.min()),
        "percentile_10": p10,
        "percentile_90": p90,
        "maximum": float(x.max()),
        "mean": mean,
        "median": p50,
        "interquartile_range": p75 - p25,
        "range": float(x.max() - x.min()),
        "mean_absolute_deviation": float(np.mean(np.abs(x - mean))),
        "robust_mean_absolute_deviation": float(np.mean(np.abs(robust - robust.mean()))),
        "root_mean_squared": float(np.sqrt(energy / n)),
        "skewness": skewness,
        "kurtosis": kurtosis,
        "variance": var,
        "uniformity": float(np.sum(p * p)),
    }
