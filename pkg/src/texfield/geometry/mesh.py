"""Triangle mesh and surface-sample containers.

Positions are unitless; after `normalize_mesh` the bounding box fits in
[-0.5, 0.5]^3 with the longest axis spanning exactly 1. Colors are linear
RGB in [0, 1] throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "Material",
    "Mesh",
    "SurfaceSample",
    "SurfaceCloud",
    "MeshFormatError",
    "DegenerateMeshError",
    "normalize_mesh",
]


class MeshFormatError(ValueError):
    """Unreadable or malformed mesh data."""


class DegenerateMeshError(ValueError):
    """Mesh has no usable spatial extent."""


@dataclass
class Material:
    name: str = "default"
    base_color: np.ndarray = field(default_factory=lambda: np.array([0.8, 0.8, 0.8]))
    emission_color: np.ndarray | None = None
    emission_strength: float = 1.0
    backface_cull_inverted: bool = False
    texture: np.ndarray | None = None  # [H, W, 3] float RGB in [0, 1]

    def __post_init__(self):
        self.base_color = np.asarray(self.base_color, dtype=np.float64)
        if self.emission_color is not None:
            self.emission_color = np.asarray(self.emission_color, dtype=np.float64)

    def effective_emission(self) -> np.ndarray | None:
        if self.emission_color is None or self.emission_strength == 0.0:
            return None
        e = self.emission_color * self.emission_strength
        if not np.any(e > 0):
            return None
        return e


@dataclass
class Mesh:
    vertices: np.ndarray                      # [V, 3] float64
    faces: np.ndarray                         # [F, 3] int64 vertex indices
    materials: list[Material] = field(default_factory=lambda: [Material()])
    face_materials: np.ndarray | None = None  # [F] int32, defaults to all-zero
    vertex_colors: np.ndarray | None = None   # [V, 3] in [0, 1]
    uvs: np.ndarray | None = None             # [F, 3, 2] per face corner in [0, 1]^2

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.face_materials is None:
            self.face_materials = np.zeros(len(self.faces), dtype=np.int32)
        else:
            self.face_materials = np.asarray(self.face_materials, dtype=np.int32)
        if self.vertex_colors is not None:
            self.vertex_colors = np.asarray(self.vertex_colors, dtype=np.float64).reshape(-1, 3)
        if self.uvs is not None:
            self.uvs = np.asarray(self.uvs, dtype=np.float64).reshape(-1, 3, 2)
        self.validate()

    def validate(self) -> None:
        if len(self.vertices) == 0:
            raise MeshFormatError("mesh has no vertices")
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise MeshFormatError(
                f"face index out of range: max {self.faces.max()} over {len(self.vertices)} vertices")
        if len(self.face_materials) != len(self.faces):
            raise MeshFormatError("face_materials length mismatch")
        if len(self.faces) and (self.face_materials.min() < 0
                                or self.face_materials.max() >= len(self.materials)):
            raise MeshFormatError("face material id out of range")
        if self.vertex_colors is not None and len(self.vertex_colors) != len(self.vertices):
            raise MeshFormatError("vertex_colors length mismatch")
        if self.uvs is not None and len(self.uvs) != len(self.faces):
            raise MeshFormatError("uvs length mismatch")

    # -- derived geometry ----------------------------------------------------

    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]  # [F, 3, 3]

    def face_normals(self) -> np.ndarray:
        tri = self.triangles()
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)

    def face_areas(self) -> np.ndarray:
        tri = self.triangles()
        return 0.5 * np.linalg.norm(
            np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def face_centroids(self) -> np.ndarray:
        return self.triangles().mean(axis=1)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def copy(self) -> "Mesh":
        return Mesh(
            vertices=self.vertices.copy(),
            faces=self.faces.copy(),
            materials=[replace(m) for m in self.materials],
            face_materials=self.face_materials.copy(),
            vertex_colors=None if self.vertex_colors is None else self.vertex_colors.copy(),
            uvs=None if self.uvs is None else self.uvs.copy(),
        )

    # -- color source ----------------------------------------------------------

    def colors_at(self, face_idx: np.ndarray, bary: np.ndarray,
                  bilinear: bool = False) -> np.ndarray:
        """Resolve surface colors at barycentric locations on faces.

        Precedence: material texture (via UVs) over vertex colors over the
        material base color. Texture lookup is nearest-texel by default.
        """
        face_idx = np.asarray(face_idx, dtype=np.int64)
        bary = np.asarray(bary, dtype=np.float64)
        out = np.empty((len(face_idx), 3), dtype=np.float64)
        mat_ids = self.face_materials[face_idx]
        for mid in np.unique(mat_ids):
            sel = mat_ids == mid
            mat = self.materials[mid]
            if mat.texture is not None and self.uvs is not None:
                uv = np.einsum("nc,ncd->nd", bary[sel], self.uvs[face_idx[sel]])
                out[sel] = _sample_texture(mat.texture, uv, bilinear=bilinear)
            elif self.vertex_colors is not None:
                corners = self.vertex_colors[self.faces[face_idx[sel]]]
                out[sel] = np.einsum("nc,ncd->nd", bary[sel], corners)
            else:
                out[sel] = mat.base_color
        return np.clip(out, 0.0, 1.0)


def _sample_texture(texture: np.ndarray, uv: np.ndarray, bilinear: bool = False) -> np.ndarray:
    """Texture lookup with (0,0) at the image's top-left and v pointing up."""
    h, w = texture.shape[:2]
    u = np.mod(uv[:, 0], 1.0)
    v = np.mod(uv[:, 1], 1.0)
    x = u * w - 0.5
    y = (1.0 - v) * h - 0.5
    if not bilinear:
        xi = np.clip(np.round(x).astype(int), 0, w - 1)
        yi = np.clip(np.round(y).astype(int), 0, h - 1)
        return texture[yi, xi]
    x0 = np.clip(np.floor(x).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(y).astype(int), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    fx = np.clip(x - x0, 0, 1)[:, None]
    fy = np.clip(y - y0, 0, 1)[:, None]
    return ((1 - fx) * (1 - fy) * texture[y0, x0] + fx * (1 - fy) * texture[y0, x1]
            + (1 - fx) * fy * texture[y1, x0] + fx * fy * texture[y1, x1])


@dataclass(frozen=True)
class SurfaceSample:
    """One colored, oriented point on the surface."""

    position: np.ndarray  # 3-vector in normalized space
    normal: np.ndarray    # unit 3-vector
    color: np.ndarray     # RGB in [0, 1]


class SurfaceCloud:
    """Array-backed sequence of SurfaceSamples."""

    def __init__(self, positions: np.ndarray, normals: np.ndarray, colors: np.ndarray):
        self.positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        self.normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
        self.colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
        if not (len(self.positions) == len(self.normals) == len(self.colors)):
            raise ValueError("positions, normals, colors must have equal length")

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return SurfaceSample(self.positions[i], self.normals[i], self.colors[i])
        return SurfaceCloud(self.positions[i], self.normals[i], self.colors[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def with_colors(self, colors: np.ndarray) -> "SurfaceCloud":
        return SurfaceCloud(self.positions.copy(), self.normals.copy(), colors)

    def monochrome(self) -> "SurfaceCloud":
        return self.with_colors(np.ones_like(self.colors))


def normalize_mesh(mesh: Mesh) -> Mesh:
    """Center the bounding box at the origin and scale the longest axis to 1."""
    lo, hi = mesh.bounds()
    extent = hi - lo
    longest = float(extent.max())
    if longest <= 0.0:
        raise DegenerateMeshError("mesh has zero extent on all axes")
    out = mesh.copy()
    out.vertices = (mesh.vertices - (lo + hi) / 2.0) / longest
    return out
