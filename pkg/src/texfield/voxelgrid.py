"""Sparse voxel sets over the normalized cube [-0.5, 0.5]^3.

Active voxels are the grid cells that contain at least one surface sample.
Keys are kept sorted lexicographically (k fastest) so serialization, window
grouping, and attention batching are deterministic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SparseVoxelSet",
    "voxelize",
    "voxel_indices",
    "local_coords",
    "window_partition",
    "capped_members",
    "lookup_voxels",
    "save_voxelset",
    "load_voxelset",
]

_MAGIC = b"SVX1"
_VERSION = 1

# Queries may sit up to half a voxel outside any active cell and still snap
# to the nearest one (needed for baking texels near chart borders).
SNAP_RADIUS_VOXELS = 0.5


@dataclass(frozen=True)
class SparseVoxelSet:
    """Active voxel keys at one resolution plus per-voxel sample membership."""

    resolution: int
    keys: np.ndarray          # [L, 3] int32, sorted lexicographically
    member_offsets: np.ndarray  # [L + 1] int64
    members: np.ndarray       # [total] int64 sample indices, ascending per voxel

    def __post_init__(self):
        if self.keys.ndim != 2 or self.keys.shape[1] != 3:
            raise ValueError("keys must be [L, 3]")
        packed = pack_keys(self.keys, self.resolution)
        if np.any(np.diff(packed) <= 0):
            raise ValueError("keys must be strictly sorted with no duplicates")
        counts = np.diff(self.member_offsets)
        if np.any(counts < 1):
            raise ValueError("every active voxel needs at least one member")

    @property
    def n_active(self) -> int:
        return len(self.keys)

    def member_counts(self) -> np.ndarray:
        return np.diff(self.member_offsets)

    def members_of(self, ordinal: int) -> np.ndarray:
        return self.members[self.member_offsets[ordinal]:self.member_offsets[ordinal + 1]]

    def packed(self) -> np.ndarray:
        return pack_keys(self.keys, self.resolution)


def pack_keys(keys: np.ndarray, resolution: int) -> np.ndarray:
    k = keys.astype(np.int64)
    return (k[:, 0] * resolution + k[:, 1]) * resolution + k[:, 2]


def voxel_indices(positions: np.ndarray, resolution: int) -> np.ndarray:
    """Map positions in [-0.5, 0.5]^3 to integer cells.

    floor((p + 0.5) * R); points exactly on a cell's upper face land in the
    upper cell, except the grid's outer boundary which clamps inward.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if np.any(positions < -0.5 - 1e-9) or np.any(positions > 0.5 + 1e-9):
        bad = positions[np.any((positions < -0.5 - 1e-9) | (positions > 0.5 + 1e-9), axis=1)][0]
        raise ValueError(f"position outside the normalized cube: {bad}")
    idx = np.floor((positions + 0.5) * resolution).astype(np.int64)
    return np.clip(idx, 0, resolution - 1)


def voxelize(samples, resolution: int) -> SparseVoxelSet:
    """Partition samples into active voxels; every sample lands in exactly one."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    positions = getattr(samples, "positions", samples)
    positions = np.asarray(positions, dtype=np.float64)
    if positions.size == 0:
        raise ValueError("cannot voxelize an empty sample set")
    idx = voxel_indices(positions, resolution)
    packed = (idx[:, 0] * resolution + idx[:, 1]) * resolution + idx[:, 2]
    order = np.argsort(packed, kind="stable")  # stable: ascending sample id per voxel
    sorted_packed = packed[order]
    uniq, starts = np.unique(sorted_packed, return_index=True)
    offsets = np.append(starts, len(order)).astype(np.int64)
    keys = np.empty((len(uniq), 3), dtype=np.int32)
    keys[:, 2] = uniq % resolution
    keys[:, 1] = (uniq // resolution) % resolution
    keys[:, 0] = uniq // (resolution * resolution)
    return SparseVoxelSet(resolution=resolution, keys=keys,
                          member_offsets=offsets, members=order.astype(np.int64))


def local_coords(p: np.ndarray, key, resolution: int, tol: float = 1e-9) -> np.ndarray:
    """Affine map of voxel `key`'s cube to [0, 1]^3, applied to p."""
    p = np.asarray(p, dtype=np.float64)
    key = np.asarray(key, dtype=np.float64)
    u = (p + 0.5) * resolution - key
    if np.any(u < -tol * resolution) or np.any(u > 1.0 + tol * resolution):
        raise ValueError(f"point {p} lies outside voxel {key.astype(int)} at R={resolution}")
    return np.clip(u, 0.0, 1.0)


def window_partition(vset: SparseVoxelSet, window: int, shift: int):
    """Group active voxels into shifted windows.

    Each key goes to group floor((idx + shift) / window) per axis. Returns
    [(group_key, ordinals)] sorted by group key, ordinals ascending, covering
    every active voxel exactly once.
    """
    if not (1 <= window <= vset.resolution):
        raise ValueError("window must satisfy 1 <= window <= R")
    if not (0 <= shift < window):
        raise ValueError("shift must satisfy 0 <= shift < window")
    gids = (vset.keys.astype(np.int64) + shift) // window
    span = int(gids.max()) + 1 if len(gids) else 1
    packed = (gids[:, 0] * span + gids[:, 1]) * span + gids[:, 2]
    order = np.argsort(packed, kind="stable")
    sorted_packed = packed[order]
    uniq, starts = np.unique(sorted_packed, return_index=True)
    bounds = np.append(starts, len(order))
    groups = []
    for g, lo, hi in zip(uniq, bounds[:-1], bounds[1:]):
        gk = (int(g // (span * span)), int((g // span) % span), int(g % span))
        groups.append((gk, np.sort(order[lo:hi])))
    return groups


def capped_members(vset: SparseVoxelSet, cap: int, seed: int):
    """Per-voxel uniform subsample down to `cap` members, seeded.

    Bounds attention cost; voxels at or under the cap keep all members.
    Returns (offsets [L+1], members) with ascending sample ids per voxel.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    counts = vset.member_counts()
    if int(counts.max()) <= cap:
        return vset.member_offsets.copy(), vset.members.copy()
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 0x5CA9]))
    new_members = []
    new_counts = np.minimum(counts, cap)
    for ordinal in range(vset.n_active):
        m = vset.members_of(ordinal)
        if len(m) > cap:
            m = np.sort(rng.choice(m, size=cap, replace=False))
        new_members.append(m)
    offsets = np.append(0, np.cumsum(new_counts)).astype(np.int64)
    return offsets, np.concatenate(new_members)


# 27-cell neighborhood in lexicographic order so snap ties resolve to the
# lexicographically-smallest key.
_NEIGHBOR_OFFSETS = np.array([(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)],
                             dtype=np.int64)
_NEIGHBOR_OFFSETS = _NEIGHBOR_OFFSETS[np.lexsort((_NEIGHBOR_OFFSETS[:, 2],
                                                  _NEIGHBOR_OFFSETS[:, 1],
                                                  _NEIGHBOR_OFFSETS[:, 0]))]


def lookup_voxels(vset: SparseVoxelSet, positions: np.ndarray,
                  snap_radius: float = SNAP_RADIUS_VOXELS):
    """Find the owning active voxel for each query position.

    Points exactly on a face shared by active voxels belong to the
    lexicographically-smallest containing voxel. Points in inactive cells
    snap to the nearest active voxel within `snap_radius` (in voxel units),
    with local coords clamped to the cube.

    Returns (ordinals [N] int64 with -1 where nothing is in range,
    locals [N, 3] float64).
    """
    R = vset.resolution
    positions = np.asarray(positions, dtype=np.float64)
    u = (positions + 0.5) * R
    cells = np.clip(np.floor(u).astype(np.int64), 0, R - 1)
    packed_active = vset.packed()

    def find(packed_cells):
        pos = np.searchsorted(packed_active, packed_cells)
        pos = np.clip(pos, 0, len(packed_active) - 1)
        hit = packed_active[pos] == packed_cells
        return np.where(hit, pos, -1)

    packed_cells = (cells[:, 0] * R + cells[:, 1]) * R + cells[:, 2]
    ordinals = find(packed_cells)

    # Face ownership: where a coordinate is integral the lower cell also
    # contains the point; prefer the lex-smallest active containing cell.
    frac = u - np.floor(u)
    on_face = np.any((frac == 0.0) & (cells > 0), axis=1)
    for i in np.flatnonzero(on_face):
        candidates = []
        axes = [(int(cells[i, a] - 1), int(cells[i, a])) if frac[i, a] == 0.0 and cells[i, a] > 0
                else (int(cells[i, a]),) for a in range(3)]
        for ci in axes[0]:
            for cj in axes[1]:
                for ck in axes[2]:
                    candidates.append((ci, cj, ck))
        for cand in sorted(candidates):
            packed = (cand[0] * R + cand[1]) * R + cand[2]
            pos = int(np.searchsorted(packed_active, packed))
            if pos < len(packed_active) and packed_active[pos] == packed:
                ordinals[i] = pos
                cells[i] = cand
                break

    # Snap misses to the nearest active voxel within range.
    miss = np.flatnonzero(ordinals < 0)
    if len(miss):
        best_d2 = np.full(len(miss), np.inf)
        best_ord = np.full(len(miss), -1, dtype=np.int64)
        best_cell = cells[miss].copy()
        for off in _NEIGHBOR_OFFSETS:
            nb = cells[miss] + off
            valid = np.all((nb >= 0) & (nb < R), axis=1)
            packed = (nb[:, 0] * R + nb[:, 1]) * R + nb[:, 2]
            found = find(np.where(valid, packed, -1))
            found = np.where(valid, found, -1)
            clamped = np.clip(u[miss], nb, nb + 1.0)
            d2 = np.sum((u[miss] - clamped) ** 2, axis=1)
            better = (found >= 0) & (d2 < best_d2 - 1e-15)
            best_d2[better] = d2[better]
            best_ord[better] = found[better]
            best_cell[better] = nb[better]
        in_range = best_d2 <= snap_radius ** 2 + 1e-15
        ordinals[miss[in_range]] = best_ord[in_range]
        cells[miss[in_range]] = best_cell[in_range]

    locals_ = np.clip(u - cells, 0.0, 1.0)
    locals_[ordinals < 0] = 0.0
    return ordinals, locals_


def save_voxelset(path, vset: SparseVoxelSet) -> None:
    with open(path, "wb") as f:
        _write_voxelset(f, vset)


def _write_voxelset(f, vset: SparseVoxelSet) -> None:
    f.write(_MAGIC)
    f.write(struct.pack("<IIQQ", _VERSION, vset.resolution,
                        vset.n_active, len(vset.members)))
    f.write(vset.keys.astype("<i4").tobytes())
    f.write(vset.member_offsets.astype("<i8").tobytes())
    f.write(vset.members.astype("<i8").tobytes())


def load_voxelset(path) -> SparseVoxelSet:
    with open(path, "rb") as f:
        return _read_voxelset(f)


def _read_voxelset(f) -> SparseVoxelSet:
    if f.read(4) != _MAGIC:
        raise ValueError("not a sparse voxel set file")
    version, resolution, n_active, n_members = struct.unpack("<IIQQ", f.read(24))
    if version != _VERSION:
        raise ValueError(f"unsupported voxel set version {version}")
    keys = np.frombuffer(f.read(12 * n_active), dtype="<i4").astype(np.int32).reshape(n_active, 3)
    offsets = np.frombuffer(f.read(8 * (n_active + 1)), dtype="<i8").astype(np.int64)
    members = np.frombuffer(f.read(8 * n_members), dtype="<i8").astype(np.int64)
    return SparseVoxelSet(resolution=resolution, keys=keys,
                          member_offsets=offsets, members=members)
