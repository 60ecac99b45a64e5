"""Asset curation: material canonicalization and outline-shell removal."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .mesh import Material, Mesh

__all__ = ["canonicalize_materials", "filter_outline_shells", "AllFacesRemovedError"]

# A connected component whose faces point inward on average this strongly is
# treated as a stylized outline shell.
SHELL_SCORE_THRESHOLD = -0.5

_FULLY_EMISSIVE_EPS = 1e-6


class AllFacesRemovedError(ValueError):
    """The shell filter would discard every face (pure-shell mesh)."""


def _reinhard(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + x)


def canonicalize_materials(mesh: Mesh) -> Mesh:
    """Fold emission into base color so every surface has one valid albedo.

    Fully emissive surfaces (black base) take the emission color directly;
    partially emissive ones composite additively and pass through the
    per-channel Reinhard operator x/(1+x) to stay clamp-free in [0, 1].
    """
    out = mesh.copy()
    new_materials = []
    for mat in out.materials:
        emission = mat.effective_emission()
        if emission is None:
            new_materials.append(mat)
            continue
        if np.all(mat.base_color < _FULLY_EMISSIVE_EPS):
            base = np.clip(emission, 0.0, 1.0)
        else:
            base = _reinhard(mat.base_color + emission)
        new_materials.append(replace(mat, base_color=base, emission_color=None,
                                     emission_strength=0.0))
    out.materials = new_materials
    return out


def _connected_components(faces: np.ndarray, n_vertices: int) -> np.ndarray:
    """Label faces by vertex-connected component (union-find over vertices)."""
    parent = np.arange(n_vertices, dtype=np.int64)

    def find(a: int) -> int:
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for f in faces:
        ra = find(f[0])
        for v in (f[1], f[2]):
            rb = find(v)
            if rb != ra:
                parent[rb] = ra
    roots = np.array([find(f[0]) for f in faces])
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def filter_outline_shells(mesh: Mesh) -> Mesh:
    """Drop inverted outline shells and backface-cull-inverted materials.

    A component is a shell when the mean of normal . (direction from the mesh
    centroid to the face centroid) falls below SHELL_SCORE_THRESHOLD.
    """
    if len(mesh.faces) == 0:
        return mesh.copy()
    labels = _connected_components(mesh.faces, len(mesh.vertices))
    referenced = np.unique(mesh.faces)
    centroid = mesh.vertices[referenced].mean(axis=0)

    normals = mesh.face_normals()
    outward = mesh.face_centroids() - centroid
    norms = np.linalg.norm(outward, axis=1, keepdims=True)
    outward = np.divide(outward, norms, out=np.zeros_like(outward), where=norms > 0)
    alignment = np.sum(normals * outward, axis=1)

    keep = np.ones(len(mesh.faces), dtype=bool)
    for comp in range(labels.max() + 1):
        sel = labels == comp
        if float(alignment[sel].mean()) < SHELL_SCORE_THRESHOLD:
            keep[sel] = False
    flagged = np.array([mesh.materials[m].backface_cull_inverted
                        for m in mesh.face_materials])
    keep &= ~flagged

    if not np.any(keep):
        raise AllFacesRemovedError("outline filter would remove every face")
    if np.all(keep):
        return mesh.copy()
    out = mesh.copy()
    out.faces = mesh.faces[keep]
    out.face_materials = mesh.face_materials[keep]
    if out.uvs is not None:
        out.uvs = out.uvs[keep]
    return out
