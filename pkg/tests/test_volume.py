"""Voxel volume types, resampling, crops, normalization, and file I/O."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import make_mask, make_volume
from conrad.errors import ConfigError, InvalidInputError, OutOfBoundsError
from conrad.volume import (
    HU_CEIL,
    HU_FLOOR,
    NormalizationParams,
    ScalarVolume,
    SegMask,
    clamp_hu,
    extract_views,
    load_mask,
    load_volume,
    resample_isotropic,
    resample_mask_isotropic,
    save_mask,
    save_volume,
    znorm_apply,
    znorm_fit,
)


class TestScalarVolume:
    def test_rejects_non_3d(self):
        with pytest.raises(InvalidInputError):
            ScalarVolume(np.zeros((4, 4)), (1, 1, 1))

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(InvalidInputError):
            ScalarVolume(np.zeros((2, 2, 2)), (1, 0, 1))

    def test_rejects_nan(self):
        values = np.zeros((2, 2, 2))
        values[0, 0, 0] = np.nan
        with pytest.raises(InvalidInputError):
            ScalarVolume(values, (1, 1, 1))

    def test_values_immutable(self):
        v = make_volume(np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            v.values[0, 0, 0] = 1.0

    def test_voxel_volume(self):
        v = make_volume(np.zeros((2, 2, 2)), spacing=(0.5, 2.0, 3.0))
        assert v.voxel_volume_mm3() == pytest.approx(3.0)


class TestSegMask:
    def test_rejects_non_binary(self):
        with pytest.raises(InvalidInputError):
            SegMask(np.full((2, 2, 2), 2, dtype=np.int32))

    def test_count(self):
        bits = np.zeros((3, 3, 3), dtype=bool)
        bits[1, 1, 1] = True
        assert make_mask(bits).count() == 1

    def test_dims_compatibility(self):
        m = make_mask(np.ones((2, 2, 2), dtype=bool))
        with pytest.raises(InvalidInputError):
            m.require_compatible(make_volume(np.zeros((3, 3, 3))))


class TestResample:
    def test_doubling_dims(self):
        # 4**3 at spacing 2 resampled to spacing 1 doubles every axis
        rng = np.random.default_rng(1)
        v = make_volume(rng.normal(size=(4, 4, 4)), spacing=(2.0, 2.0, 2.0))
        out = resample_isotropic(v, 1.0)
        assert out.dims == (8, 8, 8)
        assert out.spacing == (1.0, 1.0, 1.0)

    def test_matches_trilinear_oracle(self):
        rng = np.random.default_rng(2)
        v = make_volume(rng.normal(size=(4, 4, 4)) * 100.0, spacing=(2.0, 2.0, 2.0))
        out = resample_isotropic(v, 1.0)
        for ix in range(out.dims[0]):
            for iy in range(out.dims[1]):
                for iz in range(out.dims[2]):
                    want = oracles.trilinear_sample(
                        v.values, ix * 0.5, iy * 0.5, iz * 0.5)
                    assert out.values[ix, iy, iz] == pytest.approx(want, abs=1e-9)

    def test_anisotropic_oracle(self):
        rng = np.random.default_rng(3)
        v = make_volume(rng.normal(size=(5, 4, 3)) * 50.0, spacing=(0.7, 1.1, 2.3))
        out = resample_isotropic(v, 1.0)
        for ix in range(out.dims[0]):
            for iy in range(out.dims[1]):
                for iz in range(out.dims[2]):
                    want = oracles.trilinear_sample(
                        v.values, ix / 0.7, iy / 1.1, iz / 2.3)
                    assert out.values[ix, iy, iz] == pytest.approx(want, abs=1e-9)

    def test_identity_when_already_isotropic(self):
        rng = np.random.default_rng(4)
        v = make_volume(rng.normal(size=(3, 3, 3)), spacing=(1.0, 1.0, 1.0))
        out = resample_isotropic(v, 1.0)
        np.testing.assert_allclose(out.values, v.values, atol=1e-12)

    def test_rejects_nonpositive_target(self):
        v = make_volume(np.zeros((2, 2, 2)))
        with pytest.raises(ConfigError):
            resample_isotropic(v, 0.0)

    def test_mask_resample_stays_binary(self):
        bits = np.zeros((4, 4, 4), dtype=bool)
        bits[1:3, 1:3, 1:3] = True
        out = resample_mask_isotropic(SegMask(bits), (2.0, 2.0, 2.0), 1.0)
        assert out.bits.dtype == np.bool_
        assert out.count() > 0


class TestClampAndViews:
    def test_clamp_bounds(self):
        v = make_volume(np.array([[[-2000.0, 0.0, 900.0]]]))
        out = clamp_hu(v)
        assert out.values.min() == HU_FLOOR
        assert out.values.max() == HU_CEIL

    def test_clamp_rejects_inverted_bounds(self):
        with pytest.raises(ConfigError):
            clamp_hu(make_volume(np.zeros((1, 1, 1))), lo=10, hi=-10)

    def test_bright_voxel_centers_in_crops(self):
        values = np.full((40, 40, 40), HU_FLOOR)
        values[20, 20, 20] = 500.0
        crops = extract_views(make_volume(values), (20, 20, 20))
        assert [c.plane for c in crops] == ["axial", "coronal", "sagittal"]
        for crop in crops:
            assert crop.pixels.shape == (32, 32)
            assert np.unravel_index(crop.pixels.argmax(), crop.pixels.shape) == (16, 16)

    def test_out_of_bounds_center(self):
        v = make_volume(np.zeros((8, 8, 8)))
        with pytest.raises(OutOfBoundsError):
            extract_views(v, (8, 0, 0))

    def test_edge_crop_padded_with_floor(self):
        v = make_volume(np.zeros((40, 40, 40)))
        crops = extract_views(v, (0, 0, 0))
        assert crops[0].pixels[0, 0] == HU_FLOOR


class TestZnorm:
    def test_hand_values(self):
        p = znorm_fit([1.0, 2.0, 3.0])
        assert p.mean == pytest.approx(2.0)
        assert p.stddev == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-9)
        out = znorm_apply([1.0, 2.0, 3.0], p)
        np.testing.assert_allclose(out, [-1.22474487, 0.0, 1.22474487], atol=1e-6)

    def test_zero_stddev_maps_to_zero(self):
        p = znorm_fit([5.0, 5.0])
        np.testing.assert_array_equal(znorm_apply([5.0, 7.0], p), [0.0, 0.0])

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            znorm_fit([])

    def test_negative_stddev_rejected(self):
        with pytest.raises(InvalidInputError):
            NormalizationParams(0.0, -1.0)

    @given(st.lists(st.floats(-1e4, 1e4), min_size=2, max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip_property(self, xs):
        p = znorm_fit(xs)
        out = znorm_apply(xs, p)
        if p.stddev > 1e-9:
            np.testing.assert_allclose(out * p.stddev + p.mean, xs,
                                       atol=1e-9 * max(1.0, max(abs(x) for x in xs)))


class TestFileIO:
    def test_volume_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        values = rng.integers(-1000, 400, size=(4, 5, 6)).astype(np.float64)
        v = make_volume(values, spacing=(0.9, 0.9, 1.4))
        path = str(tmp_path / "t.cvol.json")
        save_volume(path, v)
        back = load_volume(path)
        np.testing.assert_array_equal(back.values, v.values)
        assert back.spacing == v.spacing

    def test_mask_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        bits = rng.random((4, 5, 6)) < 0.5
        path = str(tmp_path / "t.cmask.json")
        save_mask(path, SegMask(bits))
        np.testing.assert_array_equal(load_mask(path).bits, bits)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_volume(str(tmp_path / "absent.cvol.json"))
