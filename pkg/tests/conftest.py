"""Shared helpers: tiny volumes, masks, and random ROI builders."""

from __future__ import annotations

import numpy as np
import pytest

from conrad.volume import ScalarVolume, SegMask


def make_volume(values, spacing=(1.0, 1.0, 1.0)) -> ScalarVolume:
    return ScalarVolume(np.asarray(values, dtype=np.float64), spacing)


def make_mask(bits) -> SegMask:
    return SegMask(np.asarray(bits, dtype=bool))


def random_roi(rng: np.random.Generator, max_side: int = 5,
               n_levels: int = 4, spacing=(1.0, 1.0, 1.0)):
    """A random small volume/mask pair with a guaranteed non-empty mask.

    Values are drawn so the discretizer (bin width 25 from the ROI minimum)
    lands on roughly ``n_levels`` gray levels.
    """
    shape = tuple(int(rng.integers(3, max_side + 1)) for _ in range(3))
    values = rng.integers(0, n_levels, size=shape).astype(np.float64) * 25.0
    values += rng.uniform(0.0, 10.0, size=shape)
    bits = rng.random(shape) < 0.8
    if not bits.any():
        bits[shape[0] // 2, shape[1] // 2, shape[2] // 2] = True
    return make_volume(values, spacing), make_mask(bits)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
