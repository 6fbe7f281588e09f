"""Texture families against spec'd examples and brute-force enumeration."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import make_mask, make_volume, random_roi
from conrad.radiomics.discretize import discretize
from conrad.radiomics.texture import (
    COARSENESS_CAP,
    _glcm_matrices,
    _run_lengths,
    _zone_matrix,
    glcm_features,
    gldm_features,
    glrlm_features,
    glszm_features,
    ngtdm_features,
)


def _roi_from_bins(bins_row):
    """1 x len x 1 volume whose bin indices equal ``bins_row`` at width 1."""
    values = np.asarray(bins_row, dtype=np.float64).reshape(1, -1, 1)
    v = make_volume(values)
    m = make_mask(np.ones(values.shape, bool))
    return discretize(v, m, 1.0)


class TestGlcm:
    def test_row_pair_enumeration(self):
        d = _roi_from_bins([1.0, 2.0, 1.0, 2.0])
        mats = _glcm_matrices(d)
        assert len(mats) == 1  # only the in-row direction has pairs
        np.testing.assert_allclose(mats[0], [[0.0, 0.5], [0.5, 0.0]])
        f = glcm_features(d)
        assert f["contrast"] == pytest.approx(1.0)
        assert f["maximum_probability"] == pytest.approx(0.5)

    def test_constant_roi(self):
        v = make_volume(np.full((2, 2, 2), 3.0))
        d = discretize(v, make_mask(np.ones((2, 2, 2), bool)), 25.0)
        f = glcm_features(d)
        assert f["contrast"] == 0.0
        assert f["joint_energy"] == 1.0
        assert f["joint_entropy"] == 0.0
        assert f["correlation"] == 1.0
        assert f["mcc"] == 1.0

    def test_each_direction_normalized(self, rng):
        v, m = random_roi(rng)
        for mat in _glcm_matrices(discretize(v, m, 25.0)):
            assert mat.sum() == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(mat, mat.T, atol=1e-15)

    def test_matches_oracle(self, rng):
        for _ in range(8):
            v, m = random_roi(rng)
            d = discretize(v, m, 25.0)
            got = glcm_features(d)
            want = oracles.glcm_reference(np.asarray(d.bins3d), d.n_bins)
            for name in want:
                assert got[name] == pytest.approx(want[name], abs=1e-9), name

    def test_mirror_symmetry_invariance(self, rng):
        v, m = random_roi(rng)
        d = discretize(v, m, 25.0)
        for axis in range(3):
            vf = make_volume(np.flip(v.values, axis).copy(), v.spacing)
            mf = make_mask(np.flip(m.bits, axis).copy())
            df = discretize(vf, mf, 25.0)
            got = glcm_features(df)
            for name, val in glcm_features(d).items():
                assert got[name] == pytest.approx(val, abs=1e-9), (axis, name)


class TestGlrlm:
    def test_two_runs_of_two(self):
        d = _roi_from_bins([1.0, 1.0, 2.0, 2.0])
        mat = _run_lengths(d, (0, 1, 0))
        np.testing.assert_allclose(mat, [[0.0, 1.0], [0.0, 1.0]])

    def test_gap_breaks_run(self):
        values = np.array([5.0, 5.0, 5.0]).reshape(1, 3, 1)
        bits = np.array([True, False, True]).reshape(1, 3, 1)
        d = discretize(make_volume(values), make_mask(bits), 1.0)
        mat = _run_lengths(d, (0, 1, 0))
        assert mat[0, 0] == 2.0  # two runs of length 1

    def test_matches_oracle(self, rng):
        for _ in range(8):
            v, m = random_roi(rng)
            d = discretize(v, m, 25.0)
            got = glrlm_features(d)
            want = oracles.glrlm_reference(np.asarray(d.bins3d), d.n_bins, d.n_voxels)
            for name in want:
                assert got[name] == pytest.approx(want[name], abs=1e-9), name


class TestGlszm:
    def test_constant_cube_single_zone(self):
        v = make_volume(np.full((2, 2, 2), 1.0))
        d = discretize(v, make_mask(np.ones((2, 2, 2), bool)), 25.0)
        mat = _zone_matrix(d)
        assert mat.shape == (1, 8)
        assert mat[0, 7] == 1.0
        assert glszm_features(d)["zone_entropy"] == 0.0

    def test_diagonal_voxels_connect(self):
        # 26-connectivity joins voxels sharing only a corner
        values = np.zeros((2, 2, 2))
        bits = np.zeros((2, 2, 2), dtype=bool)
        bits[0, 0, 0] = bits[1, 1, 1] = True
        d = discretize(make_volume(values), make_mask(bits), 25.0)
        mat = _zone_matrix(d)
        assert mat[0, 1] == 1.0  # one zone of size 2

    def test_matches_oracle(self, rng):
        for _ in range(8):
            v, m = random_roi(rng)
            d = discretize(v, m, 25.0)
            got = glszm_features(d)
            want = oracles.glszm_reference(np.asarray(d.bins3d), d.n_bins, d.n_voxels)
            for name in want:
                assert got[name] == pytest.approx(want[name], abs=1e-9), name


class TestNgtdm:
    def test_constant_roi_coarseness_capped(self):
        v = make_volume(np.full((2, 2, 2), 9.0))
        d = discretize(v, make_mask(np.ones((2, 2, 2), bool)), 25.0)
        f = ngtdm_features(d)
        assert f["coarseness"] == COARSENESS_CAP

    def test_matches_oracle(self, rng):
        for _ in range(8):
            v, m = random_roi(rng)
            d = discretize(v, m, 25.0)
            got = ngtdm_features(d)
            want = oracles.ngtdm_reference(np.asarray(d.bins3d), d.n_bins)
            for name in want:
                assert got[name] == pytest.approx(want[name], abs=1e-9), name


class TestGldm:
    def test_isolated_voxels_dependence_one(self):
        values = np.zeros((3, 3, 3))
        bits = np.zeros((3, 3, 3), dtype=bool)
        bits[0, 0, 0] = bits[2, 2, 2] = True
        d = discretize(make_volume(values), make_mask(bits), 25.0)
        f = gldm_features(d)
        # every masked voxel has zero qualifying neighbors: dependence 1
        assert f["small_dependence_emphasis"] == pytest.approx(1.0)

    def test_matches_oracle(self, rng):
        for _ in range(8):
            v, m = random_roi(rng)
            d = discretize(v, m, 25.0)
            got = gldm_features(d, alpha=0)
            want = oracles.gldm_reference(np.asarray(d.bins3d), d.n_bins,
                                          d.n_voxels, alpha=0)
            assert set(got) == set(want)
            for name in want:
                assert got[name] == pytest.approx(want[name], abs=1e-9), name


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_all_families_match_oracle_random(seed):
    rng = np.random.default_rng(seed)
    v, m = random_roi(rng)
    d = discretize(v, m, 25.0)
    got = {}
    got.update({f"glcm.{k}": x for k, x in glcm_features(d).items()})
    got.update({f"glrlm.{k}": x for k, x in glrlm_features(d).items()})
    got.update({f"glszm.{k}": x for k, x in glszm_features(d).items()})
    got.update({f"ngtdm.{k}": x for k, x in ngtdm_features(d).items()})
    got.update({f"gldm.{k}": x for k, x in gldm_features(d).items()})
    want = oracles.texture_reference(np.asarray(d.bins3d), d.n_bins)
    assert set(got) == set(want)
    for name in want:
        assert got[name] == pytest.approx(want[name], abs=1e-9), name
