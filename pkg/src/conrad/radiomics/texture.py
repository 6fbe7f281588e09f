"""Higher-order texture features from gray-level matrices (75 features).

Five matrix families over the discretized ROI: co-occurrence (24), run
length (16), size zone (16), neighborhood gray-tone difference (5), and
gray-level dependence (14). Directional families use the 13 unique offsets
at Chebyshev distance 1; zones and neighborhoods are 26-connected. All
entropies sum over nonzero probabilities only.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .discretize import DiscretizedROI

# one representative per +/- pair of the 26 unit offsets
ANGLES_13 = (
    (0, 0, 1), (0, 1, 0), (1, 0, 0),
    (0, 1, 1), (0, 1, -1), (1, 0, 1), (1, 0, -1), (1, 1, 0), (1, -1, 0),
    (1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
)

ALL_OFFSETS_26 = tuple(
    (dx, dy, dz)
    for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
)

COARSENESS_CAP = 1e6


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _shifted_pairs(bins3d: np.ndarray, offset: tuple[int, int, int]):
    """Bin values of (voxel, neighbor) pairs where both fall inside the mask."""
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    for axis, d in enumerate(offset):
        if d > 0:
            src[axis], dst[axis] = slice(None, -d), slice(d, None)
        elif d < 0:
            src[axis], dst[axis] = slice(-d, None), slice(None, d)
    a = bins3d[tuple(src)].ravel()
    b = bins3d[tuple(dst)].ravel()
    keep = (a > 0) & (b > 0)
    return a[keep], b[keep]


# ---------------------------------------------------------------------------
# GLCM

def _glcm_matrices(d: DiscretizedROI) -> list[np.ndarray]:
    """Symmetrized, normalized co-occurrence matrix per non-empty direction."""
    ng = d.n_bins
    out = []
    for offset in ANGLES_13:
        a, b = _shifted_pairs(d.bins3d, offset)
        if a.size == 0:
            continue
        counts = np.bincount((a - 1) * ng + (b - 1), minlength=ng * ng)
        mat = counts.reshape(ng, ng).astype(np.float64)
        mat = mat + mat.T
        out.append(mat / mat.sum())
    return out


def _glcm_single(p: np.ndarray) -> dict[str, float]:
    ng = p.shape[0]
    i, j = np.meshgrid(np.arange(1.0, ng + 1), np.arange(1.0, ng + 1), indexing="ij")
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    ux = float(np.sum(i * p))
    uy = float(np.sum(j * p))
    sigx = float(np.sqrt(np.sum(p * (i - ux) ** 2)))
    sigy = float(np.sqrt(np.sum(p * (j - uy) ** 2)))

    k_sum = np.arange(2, 2 * ng + 1)
    p_sum = np.bincount((i + j).astype(int).ravel() - 2, weights=p.ravel(),
                        minlength=2 * ng - 1)
    k_diff = np.arange(0, ng)
    p_diff = np.bincount(np.abs(i - j).astype(int).ravel(), weights=p.ravel(),
                         minlength=ng)

    hx, hy, hxy = _entropy_bits(px), _entropy_bits(py), _entropy_bits(p)
    outer = px[:, None] * py[None, :]
    nz = p > 0
    hxy1 = float(-np.sum(p[nz] * np.log2(outer[nz])))
    hxy2 = _entropy_bits(outer.ravel())

    diff_avg = float(np.sum(k_diff * p_diff))

    if sigx * sigy > 0:
        correlation = float(np.sum(p * (i - ux) * (j - uy)) / (sigx * sigy))
    else:
        correlation = 1.0  # single-gray-level ROI: perfectly dependent

    # second largest eigenvalue of the gray-transition kernel, on occupied rows
    occupied = px > 0
    if occupied.sum() > 1:
        ps = p[np.ix_(occupied, occupied)]
        q = (ps / px[occupied][:, None]) @ (ps / py[occupied][None, :]).T
        eig = np.sort(np.linalg.eigvals(q).real)[::-1]
        mcc = float(np.sqrt(max(eig[1], 0.0)))
    else:
        mcc = 1.0

    off = np.abs(i - j) > 0
    inverse_variance = float(np.sum(p[off] / (i - j)[off] ** 2))

    imc1 = float((hxy - hxy1) / max(hx, hy)) if max(hx, hy) > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - hxy)))))

    return {
        "autocorrelation": float(np.sum(p * i * j)),
        "joint_average": ux,
        "cluster_prominence": float(np.sum(p * (i + j - ux - uy) ** 4)),
        "cluster_shade": float(np.sum(p * (i + j - ux - uy) ** 3)),
        "cluster_tendency": float(np.sum(p * (i + j - ux - uy) ** 2)),
        "contrast": float(np.sum(p * (i - j) ** 2)),
        "correlation": correlation,
        "difference_average": diff_avg,
        "difference_entropy": _entropy_bits(p_diff),
        "difference_variance": float(np.sum(p_diff * (k_diff - diff_avg) ** 2)),
        "joint_energy": float(np.sum(p * p)),
        "joint_entropy": hxy,
        "imc1": imc1,
        "imc2": imc2,
        "idm": float(np.sum(p / (1.0 + (i - j) ** 2))),
        "idmn": float(np.sum(p / (1.0 + (i - j) ** 2 / ng**2))),
        "id": float(np.sum(p / (1.0 + np.abs(i - j)))),
        "idn": float(np.sum(p / (1.0 + np.abs(i - j) / ng))),
        "inverse_variance": inverse_variance,
        "maximum_probability": float(p.max()),
        "mcc": mcc,
        "sum_average": float(np.sum(k_sum * p_sum)),
        "sum_entropy": _entropy_bits(p_sum),
        "sum_squares": float(np.sum(p * (i - ux) ** 2)),
    }


def glcm_features(d: DiscretizedROI) -> dict[str, float]:
    """24 co-occurrence features averaged over the non-empty directions."""
    mats = _glcm_matrices(d)
    if not mats:
        # no voxel has an in-mask neighbor: one degenerate single-cell matrix
        mats = [np.ones((1, 1))]
    per_dir = [_glcm_single(p) for p in mats]
    return {k: float(np.mean([f[k] for f in per_dir])) for k in per_dir[0]}


# ---------------------------------------------------------------------------
# GLRLM

def _run_lengths(d: DiscretizedROI, offset: tuple[int, int, int]) -> np.ndarray:
    """Run-length matrix P[gray-1, length-1] for one direction.

    Voxels are grouped into lines invariant under stepping by ``offset``;
    runs break at mask gaps and gray-level changes.
    """
    coords = np.argwhere(d.mask)
    grays = d.bins3d[d.mask]
    off = np.asarray(offset)
    norm2 = int(off @ off)
    t = coords @ off                       # advances by norm2 per step
    line = coords * norm2 - np.outer(t, off)

    order = np.lexsort((t, line[:, 2], line[:, 1], line[:, 0]))
    t_s, line_s, gray_s = t[order], line[order], grays[order]

    new_line = np.ones(len(t_s), dtype=bool)
    new_line[1:] = np.any(line_s[1:] != line_s[:-1], axis=1)
    gap = np.ones(len(t_s), dtype=bool)
    gap[1:] = t_s[1:] != t_s[:-1] + norm2
    changed = np.ones(len(t_s), dtype=bool)
    changed[1:] = gray_s[1:] != gray_s[:-1]
    starts = np.flatnonzero(new_line | gap | changed)

    run_len = np.diff(np.append(starts, len(t_s)))
    run_gray = gray_s[starts]
    mat = np.zeros((d.n_bins, int(run_len.max())), dtype=np.float64)
    np.add.at(mat, (run_gray - 1, run_len - 1), 1.0)
    return mat


def _rlm_style_features(mat: np.ndarray, n_voxels: int, axis_name: str) -> dict[str, float]:
    """Shared emphasis/non-uniformity census for run- and zone-type matrices."""
    ns = mat.sum()
    gray = np.arange(1.0, mat.shape[0] + 1)[:, None]
    size = np.arange(1.0, mat.shape[1] + 1)[None, :]
    p = mat / ns
    mu_g = float(np.sum(p * gray))
    mu_s = float(np.sum(p * size))
    g_marginal = mat.sum(axis=1)
    s_marginal = mat.sum(axis=0)
    return {
        f"small_{axis_name}_emphasis": float(np.sum(mat / size**2) / ns),
        f"large_{axis_name}_emphasis": float(np.sum(mat * size**2) / ns),
        "gray_level_non_uniformity": float(np.sum(g_marginal**2) / ns),
        "gray_level_non_uniformity_normalized": float(np.sum(g_marginal**2) / ns**2),
        f"{axis_name}_non_uniformity": float(np.sum(s_marginal**2) / ns),
        f"{axis_name}_non_uniformity_normalized": float(np.sum(s_marginal**2) / ns**2),
        f"{axis_name}_percentage": float(ns / n_voxels),
        "gray_level_variance": float(np.sum(p * (gray - mu_g) ** 2)),
        f"{axis_name}_variance": float(np.sum(p * (size - mu_s) ** 2)),
        f"{axis_name}_entropy": _entropy_bits(p.ravel()),
        f"low_gray_level_{axis_name}_emphasis": float(np.sum(mat / gray**2) / ns),
        f"high_gray_level_{axis_name}_emphasis": float(np.sum(mat * gray**2) / ns),
        f"small_{axis_name}_low_gray_level_emphasis": float(np.sum(mat / (gray**2 * size**2)) / ns),
        f"small_{axis_name}_high_gray_level_emphasis": float(np.sum(mat * gray**2 / size**2) / ns),
        f"large_{axis_name}_low_gray_level_emphasis": float(np.sum(mat * size**2 / gray**2) / ns),
        f"large_{axis_name}_high_gray_level_emphasis": float(np.sum(mat * (gray * size) ** 2) / ns),
    }


_GLRLM_RENAME = {
    "small_run_emphasis": "short_run_emphasis",
    "large_run_emphasis": "long_run_emphasis",
    "run_non_uniformity": "run_length_non_uniformity",
    "run_non_uniformity_normalized": "run_length_non_uniformity_normalized",
    "small_run_low_gray_level_emphasis": "short_run_low_gray_level_emphasis",
    "small_run_high_gray_level_emphasis": "short_run_high_gray_level_emphasis",
    "large_run_low_gray_level_emphasis": "long_run_low_gray_level_emphasis",
    "large_run_high_gray_level_emphasis": "long_run_high_gray_level_emphasis",
}


def glrlm_features(d: DiscretizedROI) -> dict[str, float]:
    """16 run-length features averaged over the 13 directions."""
    per_dir = []
    for offset in ANGLES_13:
        mat = _run_lengths(d, offset)
        feats = _rlm_style_features(mat, d.n_voxels, "run")
        per_dir.append({_GLRLM_RENAME.get(k, k): val for k, val in feats.items()})
    return {k: float(np.mean([f[k] for f in per_dir])) for k in per_dir[0]}


# ---------------------------------------------------------------------------
# GLSZM

_STRUCT_26 = np.ones((3, 3, 3), dtype=bool)


def _zone_matrix(d: DiscretizedROI) -> np.ndarray:
    """Size-zone matrix P[gray-1, size-1] with 26-connected zones."""
    rows, sizes = [], []
    present = np.unique(d.bin_index)
    for g in present:
        labeled, n_zones = ndimage.label(d.bins3d == g, structure=_STRUCT_26)
        if n_zones == 0:
            continue
        zone_sizes = np.bincount(labeled.ravel())[1:]
        rows.extend([g] * n_zones)
        sizes.extend(zone_sizes.tolist())
    rows = np.asarray(rows)
    sizes = np.asarray(sizes)
    mat = np.zeros((d.n_bins, int(sizes.max())), dtype=np.float64)
    np.add.at(mat, (rows - 1, sizes - 1), 1.0)
    return mat


def glszm_features(d: DiscretizedROI) -> dict[str, float]:
    """16 size-zone features from the single zone matrix."""
    mat = _zone_matrix(d)
    feats = _rlm_style_features(mat, d.n_voxels, "zone")
    rename = {"small_zone_emphasis": "small_area_emphasis",
              "large_zone_emphasis": "large_area_emphasis",
              "zone_non_uniformity": "size_zone_non_uniformity",
              "zone_non_uniformity_normalized": "size_zone_non_uniformity_normalized",
              "small_zone_low_gray_level_emphasis": "small_area_low_gray_level_emphasis",
              "small_zone_high_gray_level_emphasis": "small_area_high_gray_level_emphasis",
              "large_zone_low_gray_level_emphasis": "large_area_low_gray_level_emphasis",
              "large_zone_high_gray_level_emphasis": "large_area_high_gray_level_emphasis"}
    return {rename.get(k, k): val for k, val in feats.items()}


# ---------------------------------------------------------------------------
# NGTDM

def _neighbor_average(d: DiscretizedROI) -> tuple[np.ndarray, np.ndarray]:
    """Mean 26-neighborhood gray level per masked voxel (in-mask neighbors only)."""
    grays = d.bins3d.astype(np.float64)
    inmask = d.mask.astype(np.float64)
    total = np.zeros_like(grays)
    count = np.zeros_like(grays)
    for offset in ALL_OFFSETS_26:
        src = [slice(None)] * 3
        dst = [slice(None)] * 3
        for axis, step in enumerate(offset):
            if step > 0:
                src[axis], dst[axis] = slice(None, -step), slice(step, None)
            elif step < 0:
                src[axis], dst[axis] = slice(-step, None), slice(None, step)
        total[tuple(dst)] += grays[tuple(src)]
        count[tuple(dst)] += inmask[tuple(src)]
    has_neighbors = d.mask & (count > 0)
    avg = np.zeros_like(grays)
    avg[has_neighbors] = total[has_neighbors] / count[has_neighbors]
    return avg, has_neighbors


def ngtdm_features(d: DiscretizedROI) -> dict[str, float]:
    """Coarseness, contrast, busyness, complexity, strength."""
    avg, valid = _neighbor_average(d)
    grays = d.bins3d[valid]
    n_valid = int(valid.sum())
    ng = d.n_bins
    s = np.zeros(ng)
    n_i = np.bincount(grays, minlength=ng + 1)[1:].astype(np.float64)
    np.add.at(s, grays - 1, np.abs(grays - avg[valid]))
    p = n_i / n_valid
    levels = np.arange(1.0, ng + 1)
    present = p > 0
    n_present = int(present.sum())

    ps = float(np.sum(p * s))
    coarseness = min(1.0 / ps, COARSENESS_CAP) if ps > 0 else COARSENESS_CAP

    if n_present > 1:
        ii, jj = np.meshgrid(levels[present], levels[present], indexing="ij")
        pi = p[present][:, None]
        pj = p[present][None, :]
        contrast = (float(np.sum(pi * pj * (ii - jj) ** 2))
                    / (n_present * (n_present - 1)) * float(s.sum()) / n_valid)
        busy_denom = float(np.sum(np.abs(ii * pi - jj * pj)))
        busyness = ps / busy_denom if busy_denom > 0 else 0.0
        si = s[present][:, None]
        sj = s[present][None, :]
        complexity = float(np.sum(np.abs(ii - jj) * (pi * si + pj * sj) / (pi + pj))) / n_valid
        strength = float(np.sum((pi + pj) * (ii - jj) ** 2)) / s.sum() if s.sum() > 0 else 0.0
    else:
        contrast = busyness = complexity = strength = 0.0

    return {
        "coarseness": float(coarseness),
        "contrast": float(contrast),
        "busyness": float(busyness),
        "complexity": float(complexity),
        "strength": float(strength),
    }


# ---------------------------------------------------------------------------
# GLDM

def _dependence_matrix(d: DiscretizedROI, alpha: int = 0) -> np.ndarray:
    """Dependence matrix P[gray-1, k-1], k = 1 + #neighbors within alpha of center."""
    dep = np.zeros(d.bins3d.shape, dtype=np.int32)
    for offset in ALL_OFFSETS_26:
        src = [slice(None)] * 3
        dst = [slice(None)] * 3
        for axis, step in enumerate(offset):
            if step > 0:
                src[axis], dst[axis] = slice(None, -step), slice(step, None)
            elif step < 0:
                src[axis], dst[axis] = slice(-step, None), slice(None, step)
        a = d.bins3d[tuple(dst)]
        b = d.bins3d[tuple(src)]
        dep[tuple(dst)] += ((a > 0) & (b > 0) & (np.abs(a - b) <= alpha)).astype(np.int32)
    grays = d.bins3d[d.mask]
    counts = dep[d.mask] + 1
    mat = np.zeros((d.n_bins, int(counts.max())), dtype=np.float64)
    np.add.at(mat, (grays - 1, counts - 1), 1.0)
    return mat


def gldm_features(d: DiscretizedROI, alpha: int = 0) -> dict[str, float]:
    """14 gray-level dependence features (distance 1, tolerance alpha)."""
    mat = _dependence_matrix(d, alpha)
    feats = _rlm_style_features(mat, d.n_voxels, "dependence")
    rename = {"small_dependence_emphasis": "small_dependence_emphasis",
              "low_gray_level_dependence_emphasis": "low_gray_level_emphasis",
              "high_gray_level_dependence_emphasis": "high_gray_level_emphasis"}
    feats = {rename.get(k, k): val for k, val in feats.items()}
    # dependence census drops the normalized gray-level and percentage entries
    feats.pop("gray_level_non_uniformity_normalized")
    feats.pop("dependence_percentage")
    return feats
