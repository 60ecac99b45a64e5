"""Dense area-weighted surface sampling."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, SurfaceCloud

__all__ = ["sample_surface", "ZeroAreaMeshError"]


class ZeroAreaMeshError(ValueError):
    """Mesh has no sampleable surface area."""


def sample_surface(mesh: Mesh, n_points: int, seed: int,
                   monochrome: bool = False, return_face_idx: bool = False):
    """Draw area-weighted uniform samples from the mesh surface.

    Faces are chosen proportionally to area and points uniformly within each
    face (square-root barycentric warp). Colors come from the mesh's color
    source, or (1,1,1) when monochrome. Deterministic given the seed.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    areas = mesh.face_areas()
    total = float(areas.sum())
    if total <= 0.0:
        raise ZeroAreaMeshError("mesh has zero total surface area")

    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 0x5A3]))
    cum = np.cumsum(areas)
    face_idx = np.searchsorted(cum, rng.uniform(0.0, total, size=n_points))
    face_idx = np.clip(face_idx, 0, len(areas) - 1)

    r1 = rng.random(n_points)
    r2 = rng.random(n_points)
    s = np.sqrt(r1)
    bary = np.stack([1.0 - s, s * (1.0 - r2), s * r2], axis=1)

    tri = mesh.vertices[mesh.faces[face_idx]]
    positions = np.einsum("nc,ncd->nd", bary, tri)
    normals = mesh.face_normals()[face_idx]

    if monochrome:
        colors = np.ones((n_points, 3), dtype=np.float64)
    else:
        colors = mesh.colors_at(face_idx, bary)
    cloud = SurfaceCloud(positions, normals, colors)
    if return_face_idx:
        return cloud, face_idx
    return cloud
