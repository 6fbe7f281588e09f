"""Voxel volume types, file I/O, and the preprocessing chain.

Conventions: in-memory arrays are indexed ``[ix, iy, iz]``; voxel centers sit
at ``index * spacing`` in millimeters; the on-disk payload is x-fastest
little-endian. Axial crops are x-y planes, coronal x-z, sagittal y-z.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import ConfigError, InvalidInputError, OutOfBoundsError

HU_FLOOR = -1000.0
HU_CEIL = 400.0

VOLUME_DTYPE = "i16le"
MASK_DTYPE = "u8"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScalarVolume:
    """3D grid of Hounsfield-unit voxels with physical spacing in mm."""

    values: np.ndarray          # float64, shape (nx, ny, nz)
    spacing: tuple[float, float, float]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise InvalidInputError(f"volume must be 3D, got ndim={values.ndim}")
        if any(s <= 0 for s in self.spacing) or len(self.spacing) != 3:
            raise InvalidInputError(f"spacing must be three positive reals, got {self.spacing}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("volume contains non-finite voxel values")
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz


@dataclass(frozen=True)
class SegMask:
    """Binary voxel mask aligned to a ScalarVolume."""

    bits: np.ndarray            # bool, shape (nx, ny, nz)

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.dtype != np.bool_:
            if not np.isin(np.unique(bits), (0, 1)).all():
                raise InvalidInputError("mask payload must contain only 0/1 values")
            bits = bits.astype(bool)
        if bits.ndim != 3:
            raise InvalidInputError(f"mask must be 3D, got ndim={bits.ndim}")
        object.__setattr__(self, "bits", _freeze(bits))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.bits.shape

    def count(self) -> int:
        return int(self.bits.sum())

    def require_compatible(self, volume: ScalarVolume) -> None:
        if self.dims != volume.dims:
            raise InvalidInputError(f"mask dims {self.dims} != volume dims {volume.dims}")


@dataclass(frozen=True)
class ViewCrop:
    """One 32x32 in-plane crop around a nodule center."""

    plane: str                  # axial | coronal | sagittal
    pixels: np.ndarray          # float64, shape (size, size)
    center: tuple[int, int, int]

    def __post_init__(self):
        if self.plane not in ("axial", "coronal", "sagittal"):
            raise InvalidInputError(f"unknown plane {self.plane!r}")
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise InvalidInputError(f"crop must be square 2D, got shape {px.shape}")
        object.__setattr__(self, "pixels", _freeze(px))


@dataclass(frozen=True)
class NormalizationParams:
    """Mean/stddev pair for z-normalization; stddev 0 maps everything to 0."""

    mean: float
    stddev: float

    def __post_init__(self):
        if self.stddev < 0:
            raise InvalidInputError("stddev must be nonnegative")


def resample_isotropic(v: ScalarVolume, target_spacing_mm: float) -> ScalarVolume:
    """Trilinear resample onto an isotropic grid of the given spacing.

    Output dims are ``ceil(dim_i * spacing_i / target)`` per axis. Sample
    points outside the source extent take the nearest boundary value.
    """
    if target_spacing_mm <= 0:
        raise ConfigError(f"target spacing must be positive, got {target_spacing_mm}")
    t = float(target_spacing_mm)
    nx, ny, nz = v.dims
    out_dims = tuple(int(np.ceil(d * s / t)) for d, s in zip(v.dims, v.spacing))
    # fractional source indices of each output voxel center, per axis
    axes = [np.arange(n) * t / s for n, s in zip(out_dims, v.spacing)]
    grid = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grid])
    out = ndimage.map_coordinates(v.values, coords, order=1, mode="nearest")
    return ScalarVolume(out.reshape(out_dims), (t, t, t))


def resample_mask_isotropic(m: SegMask, spacing: tuple[float, float, float],
                            target_spacing_mm: float) -> SegMask:
    """Resample a binary mask through the trilinear path, rethresholded at 0.5."""
    vol = ScalarVolume(m.bits.astype(np.float64), spacing)
    res = resample_isotropic(vol, target_spacing_mm)
    return SegMask(res.values >= 0.5)


def clamp_hu(v: ScalarVolume, lo: float = HU_FLOOR, hi: float = HU_CEIL) -> ScalarVolume:
    """Clamp every voxel into [lo, hi]; dims and spacing unchanged."""
    if lo >= hi:
        raise ConfigError(f"clamp bounds require lo < hi, got lo={lo} hi={hi}")
    return ScalarVolume(np.clip(v.values, lo, hi), v.spacing)


_PLANE_AXES = {"axial": (0, 1, 2), "coronal": (0, 2, 1), "sagittal": (1, 2, 0)}


def extract_views(v: ScalarVolume, center: tuple[int, int, int],
                  size: int = 32, fill: float = HU_FLOOR) -> tuple[ViewCrop, ViewCrop, ViewCrop]:
    """Cut the three anatomical-plane crops around ``center``.

    The window spans indices center-16 ... center+15 per in-plane axis;
    out-of-bounds pixels are filled with the HU floor.
    """
    center = tuple(int(c) for c in center)
    if any(c < 0 or c >= n for c, n in zip(center, v.dims)):
        raise OutOfBoundsError(f"center {center} outside volume dims {v.dims}")
    half = size // 2
    crops = []
    for plane, (ax_u, ax_v, ax_w) in _PLANE_AXES.items():
        out = np.full((size, size), fill, dtype=np.float64)
        lo_u, lo_v = center[ax_u] - half, center[ax_v] - half
        src_u = slice(max(lo_u, 0), min(lo_u + size, v.dims[ax_u]))
        src_v = slice(max(lo_v, 0), min(lo_v + size, v.dims[ax_v]))
        dst_u = slice(src_u.start - lo_u, src_u.stop - lo_u)
        dst_v = slice(src_v.start - lo_v, src_v.stop - lo_v)
        idx: list = [0, 0, 0]
        idx[ax_u], idx[ax_v], idx[ax_w] = src_u, src_v, center[ax_w]
        # ax_u < ax_v in every plane tuple, so the block comes out (u, v)-ordered
        out[dst_u, dst_v] = v.values[tuple(idx)]
        crops.append(ViewCrop(plane, out, center))
    return tuple(crops)


def znorm_fit(values: Sequence[float]) -> NormalizationParams:
    """Population mean/stddev of a non-empty sequence."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise InvalidInputError("cannot fit normalization on an empty sequence")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("normalization input contains non-finite values")
    return NormalizationParams(float(arr.mean()), float(arr.std()))


def znorm_apply(values: Sequence[float], p: NormalizationParams) -> np.ndarray:
    """(x - mean)/stddev, or all zeros when stddev = 0."""
    arr = np.asarray(values, dtype=np.float64)
    if p.stddev == 0:
        return np.zeros_like(arr)
    return (arr - p.mean) / p.stddev


# ---------------------------------------------------------------------------
# File format: JSON header + raw little-endian payload, x-fastest order.

def atomic_write_bytes(path: str, payload: bytes) -> None:
    """Write via a same-directory temp file + rename so no partial file lands."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: str, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def save_volume(path_json: str, v: ScalarVolume, offset_hu: int = 0) -> None:
    """Write a .cvol.json/.cvol.raw pair. Stored int16 = round(hu) - offset_hu."""
    raw_path = path_json[: -len(".json")] + ".raw" if path_json.endswith(".json") else path_json + ".raw"
    stored = np.round(v.values).astype(np.int64) - int(offset_hu)
    if stored.min() < -32768 or stored.max() > 32767:
        raise InvalidInputError("volume values do not fit int16 under the given offset")
    header = {
        "dims": list(v.dims),
        "spacing_mm": list(v.spacing),
        "dtype": VOLUME_DTYPE,
        "offset_hu": int(offset_hu),
    }
    atomic_write_bytes(raw_path, stored.astype("<i2").tobytes(order="F"))
    atomic_write_json(path_json, header)


def load_volume(path_json: str) -> ScalarVolume:
    with open(path_json) as fh:
        header = json.load(fh)
    for key in ("dims", "spacing_mm", "dtype", "offset_hu"):
        if key not in header:
            raise InvalidInputError(f"volume header missing field {key!r}: {path_json}")
    if header["dtype"] != VOLUME_DTYPE:
        raise InvalidInputError(f"unsupported volume dtype {header['dtype']!r}")
    dims = tuple(int(d) for d in header["dims"])
    raw_path = path_json[: -len(".json")] + ".raw"
    payload = np.fromfile(raw_path, dtype="<i2")
    if payload.size != dims[0] * dims[1] * dims[2]:
        raise InvalidInputError(
            f"voxel count {payload.size} != dims product {np.prod(dims)}: {raw_path}")
    values = payload.reshape(dims, order="F").astype(np.float64) + float(header["offset_hu"])
    return ScalarVolume(values, tuple(float(s) for s in header["spacing_mm"]))


def save_mask(path_json: str, m: SegMask, spacing: tuple[float, float, float] | None = None) -> None:
    """Write a .cmask.json/.cmask.raw pair with u8 payload in {0,1}."""
    raw_path = path_json[: -len(".json")] + ".raw" if path_json.endswith(".json") else path_json + ".raw"
    header = {"dims": list(m.dims), "dtype": MASK_DTYPE}
    if spacing is not None:
        header["spacing_mm"] = list(spacing)
    atomic_write_bytes(raw_path, m.bits.astype(np.uint8).tobytes(order="F"))
    atomic_write_json(path_json, header)


def load_mask(path_json: str) -> SegMask:
    with open(path_json) as fh:
        header = json.load(fh)
    for key in ("dims", "dtype"):
        if key not in header:
            raise InvalidInputError(f"mask header missing field {key!r}: {path_json}")
    if header["dtype"] != MASK_DTYPE:
        raise InvalidInputError(f"unsupported mask dtype {header['dtype']!r}")
    dims = tuple(int(d) for d in header["dims"])
    raw_path = path_json[: -len(".json")] + ".raw"
    payload = np.fromfile(raw_path, dtype=np.uint8)
    if payload.size != dims[0] * dims[1] * dims[2]:
        raise InvalidInputError(
            f"voxel count {payload.size} != dims product {np.prod(dims)}: {raw_path}")
    bad = ~np.isin(payload, (0, 1))
    if bad.any():
        raise InvalidInputError(f"mask payload contains values outside {{0,1}}: {raw_path}")
    return SegMask(payload.reshape(dims, order="F").astype(bool))
