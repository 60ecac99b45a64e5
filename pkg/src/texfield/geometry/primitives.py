"""Procedural test assets: quads, boxes, UV spheres, checker colorings."""

from __future__ import annotations

import numpy as np

from .mesh import Material, Mesh

__all__ = [
    "make_quad",
    "make_box",
    "make_uv_sphere",
    "make_shelled_sphere",
    "make_two_triangles",
    "checker3d_colors",
    "checker_sphere",
]


def make_quad(size: float = 1.0) -> Mesh:
    s = size / 2.0
    vertices = [[-s, -s, 0.0], [s, -s, 0.0], [s, s, 0.0], [-s, s, 0.0]]
    faces = [[0, 1, 2], [0, 2, 3]]
    return Mesh(vertices=np.array(vertices), faces=np.array(faces))


def make_box(extents=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0),
             vertex_colors: np.ndarray | None = None) -> Mesh:
    ex, ey, ez = np.asarray(extents) / 2.0
    c = np.asarray(center)
    corners = np.array([[sx, sy, sz] for sx in (-ex, ex) for sy in (-ey, ey)
                        for sz in (-ez, ez)]) + c
    # 12 triangles, outward winding
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # -x, +x
        (0, 4, 5, 1), (2, 3, 7, 6),  # -y, +y
        (0, 2, 6, 4), (1, 5, 7, 3),  # -z, +z
    ]
    faces = []
    for a, b, cc, d in quads:
        faces.append([a, b, cc])
        faces.append([a, cc, d])
    return Mesh(vertices=corners, faces=np.array(faces), vertex_colors=vertex_colors)


def make_uv_sphere(n_lat: int = 32, n_lon: int = 64, radius: float = 0.5,
                   center=(0.0, 0.0, 0.0), with_uvs: bool = True,
                   flip: bool = False) -> Mesh:
    """Latitude-longitude sphere with a deliberate UV seam at the wrap column.

    Per-corner UVs: u = longitude / 2pi, v = 1 - latitude / pi; the last
    column uses u = 1 so the seam is explicit in the atlas.
    """
    center = np.asarray(center, dtype=np.float64)
    verts = [center + [0.0, 0.0, radius]]
    for i in range(1, n_lat):
        theta = np.pi * i / n_lat
        for j in range(n_lon):
            phi = 2.0 * np.pi * j / n_lon
            verts.append(center + radius * np.array([
                np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]))
    verts.append(center + [0.0, 0.0, -radius])
    south = len(verts) - 1

    def ring(i: int, j: int) -> int:
        return 1 + (i - 1) * n_lon + (j % n_lon)

    def uv(i: int, j: int) -> tuple[float, float]:
        # j may equal n_lon at the wrap so the seam column gets u = 1
        return (j / n_lon, 1.0 - i / n_lat)

    faces, uvs = [], []

    def add(tri, tri_uv):
        if flip:
            tri = (tri[0], tri[2], tri[1])
            tri_uv = (tri_uv[0], tri_uv[2], tri_uv[1])
        faces.append(tri)
        uvs.append(tri_uv)

    for j in range(n_lon):
        pole_u = (uv(1, j)[0] + uv(1, j + 1)[0]) / 2.0
        add((0, ring(1, j), ring(1, j + 1)),
            ((pole_u, 1.0), uv(1, j), uv(1, j + 1)))
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            add((a, c, d), (uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)))
            add((a, d, b), (uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)))
    for j in range(n_lon):
        pole_u = (uv(n_lat - 1, j)[0] + uv(n_lat - 1, j + 1)[0]) / 2.0
        add((south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)),
            ((pole_u, 0.0), uv(n_lat - 1, j + 1), uv(n_lat - 1, j)))

    return Mesh(vertices=np.array(verts), faces=np.array(faces),
                uvs=np.array(uvs) if with_uvs else None)


def checker3d_colors(positions: np.ndarray, cells: int = 2,
                     lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """3D checkerboard: alternate colors by cell parity of floor((p+0.5)*cells)."""
    idx = np.floor((np.asarray(positions) + 0.5) * cells).astype(int)
    idx = np.clip(idx, 0, cells - 1)
    parity = idx.sum(axis=1) % 2
    val = np.where(parity == 1, hi, lo)
    return np.repeat(val[:, None], 3, axis=1)


def checker_sphere(n_lat: int = 128, n_lon: int = 256, cells: int = 2) -> Mesh:
    """UV sphere with checkerboard vertex colors; the standard overfit asset."""
    mesh = make_uv_sphere(n_lat=n_lat, n_lon=n_lon, radius=0.5)
    mesh.vertex_colors = checker3d_colors(mesh.vertices, cells=cells)
    return mesh


def make_shelled_sphere(n_lat: int = 24, n_lon: int = 48) -> Mesh:
    """Sphere plus a concentric inverted-normal outline shell (two components)."""
    inner = make_uv_sphere(n_lat=n_lat, n_lon=n_lon, radius=0.4, with_uvs=False)
    shell = make_uv_sphere(n_lat=n_lat, n_lon=n_lon, radius=0.45, with_uvs=False,
                           flip=True)
    offset = len(inner.vertices)
    vertices = np.vstack([inner.vertices, shell.vertices])
    faces = np.vstack([inner.faces, shell.faces + offset])
    materials = [Material(name="surface"), Material(name="outline")]
    face_materials = np.concatenate([
        np.zeros(len(inner.faces), dtype=np.int32),
        np.ones(len(shell.faces), dtype=np.int32),
    ])
    return Mesh(vertices=vertices, faces=faces, materials=materials,
                face_materials=face_materials)


def make_two_triangles(area_ratio: float = 3.0) -> Mesh:
    """Two disjoint triangles whose areas are in the given ratio."""
    # unit right triangle has area 0.5; scale the first by sqrt(ratio)
    s = np.sqrt(area_ratio)
    vertices = np.array([
        [0.0, 0.0, 0.0], [s, 0.0, 0.0], [0.0, s, 0.0],
        [2.0 + s, 0.0, 0.0], [3.0 + s, 0.0, 0.0], [2.0 + s, 1.0, 0.0],
    ])
    faces = np.array([[0, 1, 2], [3, 4, 5]])
    return Mesh(vertices=vertices, faces=faces)
