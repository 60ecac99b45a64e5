import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from texfield.voxelgrid import (
    SparseVoxelSet,
    capped_members,
    load_voxelset,
    local_coords,
    lookup_voxels,
    save_voxelset,
    voxelize,
    window_partition,
)


def sphere_cloud(n, seed=0, radius=0.5):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius * 0.999  # keep strictly inside the cube


class TestVoxelize:
    def test_origin_sample_lands_in_upper_cell(self):
        vset = voxelize(np.array([[0.0, 0.0, 0.0]]), 2)
        np.testing.assert_array_equal(vset.keys, [[1, 1, 1]])

    def test_corner_cells(self):
        pts = np.array([[-0.5, -0.5, -0.5], [0.49, 0.49, 0.49]])
        vset = voxelize(pts, 64)
        np.testing.assert_array_equal(vset.keys, [[0, 0, 0], [63, 63, 63]])

    def test_occupancy_matches_dense_grid_oracle(self):
        pts = sphere_cloud(100_000, seed=1)
        R = 16
        vset = voxelize(pts, R)
        dense = np.zeros((R, R, R), dtype=bool)
        idx = np.clip(np.floor((pts + 0.5) * R).astype(int), 0, R - 1)
        dense[idx[:, 0], idx[:, 1], idx[:, 2]] = True
        assert vset.n_active == int(dense.sum())

    def test_membership_is_exact_partition(self):
        pts = sphere_cloud(5000, seed=2)
        vset = voxelize(pts, 8)
        assert int(vset.member_counts().sum()) == len(pts)
        assert len(np.unique(vset.members)) == len(pts)
        # every member's position voxelizes back to its voxel
        for ordinal in range(0, vset.n_active, 7):
            m = vset.members_of(ordinal)
            cells = np.floor((pts[m] + 0.5) * 8).astype(int)
            np.testing.assert_array_equal(cells, np.tile(vset.keys[ordinal], (len(m), 1)))

    def test_position_outside_cube_rejected(self):
        with pytest.raises(ValueError):
            voxelize(np.array([[0.75, 0.0, 0.0]]), 8)

    def test_keys_sorted_and_members_ascending(self):
        pts = sphere_cloud(2000, seed=3)
        vset = voxelize(pts, 8)
        packed = vset.packed()
        assert np.all(np.diff(packed) > 0)
        for ordinal in range(vset.n_active):
            m = vset.members_of(ordinal)
            assert np.all(np.diff(m) > 0)

    @given(st.integers(min_value=1, max_value=400), st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_counts_sum_property(self, n, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-0.5, 0.5, size=(n, 3))
        vset = voxelize(pts, 4)
        assert int(vset.member_counts().sum()) == n


class TestLocalCoords:
    def test_voxel_min_corner(self):
        np.testing.assert_allclose(local_coords([-0.5, -0.5, -0.5], (0, 0, 0), 4), [0, 0, 0])

    def test_voxel_center(self):
        # center of cell (1,1,1) at R=2 is (0.25, 0.25, 0.25)
        np.testing.assert_allclose(local_coords([0.25, 0.25, 0.25], (1, 1, 1), 2), [0.5, 0.5, 0.5])

    def test_direct_affine_evaluation(self):
        # oracle: u = (p + 0.5) * R - key
        p, key, R = np.array([0.25, 0.0, 0.0]), (48, 32, 32), 64
        expected = (p + 0.5) * R - np.array(key)
        np.testing.assert_allclose(local_coords(p, key, R), expected, atol=1e-12)
        np.testing.assert_allclose(expected, [0.0, 0.0, 0.0], atol=1e-12)

    def test_outside_voxel_rejected(self):
        with pytest.raises(ValueError):
            local_coords([0.3, 0.0, 0.0], (0, 32, 32), 64)

    def test_round_trip(self):
        rng = np.random.default_rng(4)
        pts = rng.uniform(-0.5, 0.5, size=(200, 3))
        R = 32
        vset = voxelize(pts, R)
        for ordinal in range(0, vset.n_active, 5):
            m = vset.members_of(ordinal)[0]
            u = local_coords(pts[m], vset.keys[ordinal], R)
            recon = (vset.keys[ordinal] + u) / R - 0.5
            np.testing.assert_allclose(recon, pts[m], atol=1e-9)


class TestWindowPartition:
    def _vset(self, keys, R):
        keys = np.asarray(keys, dtype=np.int32)
        order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
        keys = keys[order]
        offsets = np.arange(len(keys) + 1, dtype=np.int64)
        return SparseVoxelSet(R, keys, offsets, np.arange(len(keys), dtype=np.int64))

    def test_global_window_single_group(self):
        vset = voxelize(sphere_cloud(500, seed=5), 8)
        groups = window_partition(vset, window=8, shift=0)
        assert len(groups) == 1
        np.testing.assert_array_equal(groups[0][1], np.arange(vset.n_active))

    def test_unit_window_one_group_per_voxel(self):
        vset = voxelize(sphere_cloud(500, seed=6), 8)
        groups = window_partition(vset, window=1, shift=0)
        assert len(groups) == vset.n_active
        assert all(len(g[1]) == 1 for g in groups)

    def test_spec_case_shift_two(self):
        # floor((1+2)/4)=0 and floor((3+2)/4)=1: the two keys split apart
        vset = self._vset([[1, 1, 1], [3, 3, 3]], 8)
        groups = window_partition(vset, window=4, shift=2)
        assert len(groups) == 2

    def test_matches_exhaustive_group_id_oracle(self):
        vset = voxelize(sphere_cloud(3000, seed=7), 16)
        for window, shift in [(4, 0), (4, 2), (8, 3), (16, 0), (5, 1)]:
            groups = window_partition(vset, window, shift)
            seen = np.full(vset.n_active, -1)
            for gi, (gk, ordinals) in enumerate(groups):
                for o in ordinals:
                    expected = tuple((vset.keys[o].astype(int) + shift) // window)
                    assert expected == gk
                    assert seen[o] == -1
                    seen[o] = gi
            assert np.all(seen >= 0)

    def test_shifted_vs_unshifted_cover_same_ordinals(self):
        vset = voxelize(sphere_cloud(2000, seed=8), 16)
        for shift in (0, 4):
            groups = window_partition(vset, 8, shift)
            all_ordinals = np.sort(np.concatenate([g[1] for g in groups]))
            np.testing.assert_array_equal(all_ordinals, np.arange(vset.n_active))

    def test_invalid_args(self):
        vset = voxelize(sphere_cloud(100, seed=9), 8)
        with pytest.raises(ValueError):
            window_partition(vset, 0, 0)
        with pytest.raises(ValueError):
            window_partition(vset, 4, 4)


class TestCappedMembers:
    def test_cap_applied_and_deterministic(self):
        pts = sphere_cloud(20_000, seed=10)
        vset = voxelize(pts, 4)
        off1, mem1 = capped_members(vset, cap=16, seed=99)
        off2, mem2 = capped_members(vset, cap=16, seed=99)
        np.testing.assert_array_equal(off1, off2)
        np.testing.assert_array_equal(mem1, mem2)
        counts = np.diff(off1)
        assert counts.max() <= 16
        # capped members are a subset of the voxel's members
        for ordinal in range(0, vset.n_active, 5):
            sub = mem1[off1[ordinal]:off1[ordinal + 1]]
            assert np.all(np.isin(sub, vset.members_of(ordinal)))
            assert np.all(np.diff(sub) > 0)

    def test_different_seed_changes_subsample(self):
        pts = sphere_cloud(20_000, seed=11)
        vset = voxelize(pts, 4)
        _, mem1 = capped_members(vset, cap=8, seed=1)
        _, mem2 = capped_members(vset, cap=8, seed=2)
        assert not np.array_equal(mem1, mem2)

    def test_under_cap_is_identity(self):
        vset = voxelize(sphere_cloud(100, seed=12), 8)
        off, mem = capped_members(vset, cap=1000, seed=0)
        np.testing.assert_array_equal(off, vset.member_offsets)
        np.testing.assert_array_equal(mem, vset.members)


class TestLookup:
    def test_exact_hits(self):
        pts = sphere_cloud(1000, seed=13)
        vset = voxelize(pts, 8)
        ordinals, locals_ = lookup_voxels(vset, pts)
        assert np.all(ordinals >= 0)
        idx = np.clip(np.floor((pts + 0.5) * 8).astype(int), 0, 7)
        np.testing.assert_array_equal(vset.keys[ordinals], idx)
        assert np.all((locals_ >= 0) & (locals_ <= 1))

    def test_face_point_owned_by_lex_smallest_active(self):
        # cells (0,0,0) and (1,0,0) both active; p on their shared x-face
        pts = np.array([[-0.4, -0.4, -0.4], [0.2, -0.4, -0.4]])
        vset = voxelize(pts, 2)
        p = np.array([[0.0, -0.4, -0.4]])
        ordinals, locals_ = lookup_voxels(vset, p)
        np.testing.assert_array_equal(vset.keys[ordinals[0]], [0, 0, 0])
        assert locals_[0, 0] == pytest.approx(1.0)

    def test_snap_within_half_voxel(self):
        vset = voxelize(np.array([[-0.4, -0.4, -0.4]]), 2)  # active cell (0,0,0)
        # just over the face into inactive cell (1,0,0): 0.1 voxel beyond
        p = np.array([[0.05, -0.4, -0.4]])
        ordinals, locals_ = lookup_voxels(vset, p)
        assert ordinals[0] == 0
        np.testing.assert_allclose(locals_[0], [1.0, 0.2, 0.2], atol=1e-12)

    def test_beyond_snap_radius_invalid(self):
        vset = voxelize(np.array([[-0.4, -0.4, -0.4]]), 2)
        p = np.array([[0.4, 0.4, 0.4]])
        ordinals, _ = lookup_voxels(vset, p)
        assert ordinals[0] == -1


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        vset = voxelize(sphere_cloud(5000, seed=14), 16)
        path = tmp_path / "cloud.svx"
        save_voxelset(path, vset)
        loaded = load_voxelset(path)
        assert loaded.resolution == vset.resolution
        np.testing.assert_array_equal(loaded.keys, vset.keys)
        np.testing.assert_array_equal(loaded.member_offsets, vset.member_offsets)
        np.testing.assert_array_equal(loaded.members, vset.members)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.svx"
        path.write_bytes(b"nope" + b"\x00" * 64)
        with pytest.raises(ValueError):
            load_voxelset(path)
