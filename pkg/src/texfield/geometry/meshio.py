"""Mesh and point-cloud file I/O.

Supported inputs: Wavefront OBJ (xyzrgb vertex-color extension, MTL
materials, PNG textures) and PLY (ascii or binary little-endian). Point
clouds round-trip through binary PLY with position, normal, and RGB.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Material, Mesh, MeshFormatError, SurfaceCloud

__all__ = ["load_mesh", "save_mesh_obj", "save_cloud_ply", "load_cloud_ply"]


def load_mesh(path) -> Mesh:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        return _load_obj(path)
    if suffix == ".ply":
        return _load_ply(path)
    raise MeshFormatError(f"unsupported mesh format: {suffix!r} (expected .obj or .ply)")


# -- OBJ -----------------------------------------------------------------------


def _load_obj(path: Path) -> Mesh:
    vertices: list[list[float]] = []
    vertex_colors: list[list[float]] = []
    texcoords: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    face_uvs: list = []
    face_materials: list[int] = []
    materials: list[Material] = []
    mat_index: dict[str, int] = {}
    current_mat = -1
    any_uv = False

    def material_id(name: str) -> int:
        if name not in mat_index:
            mat_index[name] = len(materials)
            materials.append(Material(name=name))
        return mat_index[name]

    try:
        text = path.read_text()
    except UnicodeDecodeError as e:
        raise MeshFormatError(f"{path}: not a text OBJ file ({e})") from None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "v":
                vals = [float(x) for x in parts[1:]]
                if len(vals) not in (3, 6):
                    raise MeshFormatError(f"{path}:{lineno}: vertex needs 3 or 6 floats")
                vertices.append(vals[:3])
                vertex_colors.append(vals[3:6] if len(vals) == 6 else [np.nan] * 3)
            elif tag == "vt":
                texcoords.append([float(parts[1]), float(parts[2])])
            elif tag == "f":
                corners = [_parse_obj_corner(c, len(vertices), len(texcoords), path, lineno)
                           for c in parts[1:]]
                if len(corners) < 3:
                    raise MeshFormatError(f"{path}:{lineno}: face needs >= 3 vertices")
                for i in range(1, len(corners) - 1):  # fan triangulation
                    tri = (corners[0], corners[i], corners[i + 1])
                    faces.append(tuple(c[0] for c in tri))
                    face_uvs.append(tuple(c[1] for c in tri))
                    if any(c[1] is not None for c in tri):
                        any_uv = True
                    face_materials.append(max(current_mat, 0))
            elif tag == "usemtl":
                current_mat = material_id(parts[1])
            elif tag == "mtllib":
                _load_mtl(path.parent / " ".join(parts[1:]), materials, mat_index)
        except (ValueError, IndexError) as e:
            if isinstance(e, MeshFormatError):
                raise
            raise MeshFormatError(f"{path}:{lineno}: {e}") from None

    if not vertices:
        raise MeshFormatError(f"{path}: no vertices")
    if not materials:
        materials.append(Material())

    v = np.asarray(vertices)
    vc = np.asarray(vertex_colors)
    has_colors = not np.any(np.isnan(vc))

    uvs = None
    if any_uv and texcoords:
        tex = np.asarray(texcoords)
        uvs = np.zeros((len(faces), 3, 2))
        for fi, tri_uv in enumerate(face_uvs):
            for ci, t in enumerate(tri_uv):
                if t is not None:
                    uvs[fi, ci] = tex[t]

    return Mesh(vertices=v, faces=np.asarray(faces), materials=materials,
                face_materials=np.asarray(face_materials),
                vertex_colors=vc if has_colors else None, uvs=uvs)


def _parse_obj_corner(token: str, n_vertices: int, n_texcoords: int,
                      path: Path, lineno: int):
    fields = token.split("/")
    vi = int(fields[0])
    vi = vi - 1 if vi > 0 else n_vertices + vi
    if not (0 <= vi < n_vertices):
        raise MeshFormatError(f"{path}:{lineno}: face index {int(fields[0])} out of range "
                              f"over {n_vertices} vertices")
    ti = None
    if len(fields) > 1 and fields[1]:
        ti = int(fields[1])
        ti = ti - 1 if ti > 0 else n_texcoords + ti
        if not (0 <= ti < n_texcoords):
            raise MeshFormatError(f"{path}:{lineno}: texcoord index out of range")
    return vi, ti


def _load_mtl(path: Path, materials: list[Material], mat_index: dict[str, int]) -> None:
    if not path.exists():
        return  # missing material library: fall back to defaults
    current: Material | None = None
    for raw in path.read_text().splitlines():
        parts = raw.strip().split()
        if not parts:
            continue
        tag = parts[0]
        if tag == "newmtl":
            name = parts[1]
            if name not in mat_index:
                mat_index[name] = len(materials)
                materials.append(Material(name=name))
            current = materials[mat_index[name]]
        elif current is None:
            continue
        elif tag == "Kd":
            current.base_color = np.array([float(x) for x in parts[1:4]])
        elif tag == "Ke":
            ke = np.array([float(x) for x in parts[1:4]])
            if np.any(ke > 0):
                current.emission_color = ke
        elif tag == "map_Kd":
            current.texture = load_texture(path.parent / " ".join(parts[1:]))


def load_texture(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return arr


def save_mesh_obj(path, mesh: Mesh) -> None:
    """Write OBJ with xyzrgb vertex colors and per-face UVs when present."""
    path = Path(path)
    lines = []
    mtl_path = None
    needs_mtl = any(m.emission_color is not None or m.texture is not None
                    or m.name != "default" for m in mesh.materials)
    if needs_mtl:
        mtl_path = path.with_suffix(".mtl")
        lines.append(f"mtllib {mtl_path.name}")
    for i, v in enumerate(mesh.vertices):
        if mesh.vertex_colors is not None:
            c = mesh.vertex_colors[i]
            lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g} {c[0]:.9g} {c[1]:.9g} {c[2]:.9g}")
        else:
            lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    uv_idx = None
    if mesh.uvs is not None:
        uv_idx = np.arange(mesh.uvs.size // 2).reshape(-1, 3) + 1
        for uv in mesh.uvs.reshape(-1, 2):
            lines.append(f"vt {uv[0]:.9g} {uv[1]:.9g}")
    last_mat = -1
    for fi, f in enumerate(mesh.faces):
        mid = int(mesh.face_materials[fi])
        if needs_mtl and mid != last_mat:
            lines.append(f"usemtl {mesh.materials[mid].name}")
            last_mat = mid
        if uv_idx is not None:
            lines.append(f"f {f[0] + 1}/{uv_idx[fi, 0]} {f[1] + 1}/{uv_idx[fi, 1]} "
                         f"{f[2] + 1}/{uv_idx[fi, 2]}")
        else:
            lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    path.write_text("\n".join(lines) + "\n")
    if needs_mtl:
        mtl_lines = []
        for m in mesh.materials:
            mtl_lines.append(f"newmtl {m.name}")
            mtl_lines.append(f"Kd {m.base_color[0]:.9g} {m.base_color[1]:.9g} {m.base_color[2]:.9g}")
            if m.emission_color is not None:
                e = m.emission_color
                mtl_lines.append(f"Ke {e[0]:.9g} {e[1]:.9g} {e[2]:.9g}")
        mtl_path.write_text("\n".join(mtl_lines) + "\n")


# -- PLY -----------------------------------------------------------------------

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def _load_ply(path: Path) -> Mesh:
    with open(path, "rb") as f:
        header = []
        while True:
            line = f.readline()
            if not line:
                raise MeshFormatError(f"{path}: truncated PLY header")
            header.append(line.decode("ascii", "replace").strip())
            if header[-1] == "end_header":
                break
        if not header or header[0] != "ply":
            raise MeshFormatError(f"{path}: not a PLY file")

        fmt = None
        elements = []  # (name, count, [(prop_name, dtype, is_list, count_type)])
        for line in header[1:]:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                elements.append((parts[1], int(parts[2]), []))
            elif parts[0] == "property":
                if parts[1] == "list":
                    elements[-1][2].append((parts[4], _PLY_TYPES[parts[3]], True,
                                            _PLY_TYPES[parts[2]]))
                else:
                    elements[-1][2].append((parts[2], _PLY_TYPES[parts[1]], False, None))
        if fmt not in ("ascii", "binary_little_endian"):
            raise MeshFormatError(f"{path}: unsupported PLY format {fmt!r}")

        data = {}
        if fmt == "ascii":
            tokens = f.read().decode("ascii").split()
            pos = 0
            for name, count, props in elements:
                rows = []
                for _ in range(count):
                    row = {}
                    for pname, dtype, is_list, _ in props:
                        if is_list:
                            n = int(tokens[pos]); pos += 1
                            row[pname] = [float(tokens[pos + i]) for i in range(n)]
                            pos += n
                        else:
                            row[pname] = float(tokens[pos]); pos += 1
                    rows.append(row)
                data[name] = rows
        else:
            for name, count, props in elements:
                rows = []
                if all(not p[2] for p in props):  # fixed-size rows: bulk read
                    dt = np.dtype([(p[0], "<" + p[1]) for p in props])
                    arr = np.frombuffer(f.read(dt.itemsize * count), dtype=dt)
                    rows = arr
                else:
                    for _ in range(count):
                        row = {}
                        for pname, dtype, is_list, count_type in props:
                            if is_list:
                                n = int(np.frombuffer(f.read(np.dtype(count_type).itemsize),
                                                      dtype="<" + count_type)[0])
                                row[pname] = np.frombuffer(
                                    f.read(np.dtype(dtype).itemsize * n), dtype="<" + dtype)
                            else:
                                row[pname] = np.frombuffer(
                                    f.read(np.dtype(dtype).itemsize), dtype="<" + dtype)[0]
                        rows.append(row)
                data[name] = rows

    return _ply_to_mesh(data, path)


def _column(rows, name):
    if isinstance(rows, np.ndarray):
        return rows[name].astype(np.float64)
    return np.array([r[name] for r in rows], dtype=np.float64)


def _ply_to_mesh(data: dict, path: Path) -> Mesh:
    if "vertex" not in data:
        raise MeshFormatError(f"{path}: PLY has no vertex element")
    vrows = data["vertex"]
    names = vrows.dtype.names if isinstance(vrows, np.ndarray) else (
        list(vrows[0].keys()) if len(vrows) else [])
    vertices = np.stack([_column(vrows, c) for c in ("x", "y", "z")], axis=1)
    vertex_colors = None
    if all(c in names for c in ("red", "green", "blue")):
        vertex_colors = np.stack([_column(vrows, c) for c in ("red", "green", "blue")],
                                 axis=1) / 255.0
    faces = []
    for row in data.get("face", []):
        idx = row["vertex_indices"] if "vertex_indices" in row else row["vertex_index"]
        idx = [int(i) for i in idx]
        for i in range(1, len(idx) - 1):
            faces.append((idx[0], idx[i], idx[i + 1]))
    if not faces:
        raise MeshFormatError(f"{path}: PLY has no faces")
    return Mesh(vertices=vertices, faces=np.asarray(faces), vertex_colors=vertex_colors)


# -- point cloud PLY ----------------------------------------------------------


def save_cloud_ply(path, cloud: SurfaceCloud) -> None:
    """Binary little-endian PLY: float32 position/normal + uchar RGB."""
    n = len(cloud)
    header = "\n".join([
        "ply",
        "format binary_little_endian 1.0",
        f"element vertex {n}",
        "property float x", "property float y", "property float z",
        "property float nx", "property float ny", "property float nz",
        "property uchar red", "property uchar green", "property uchar blue",
        "end_header",
    ]) + "\n"
    dt = np.dtype([("p", "<f4", 3), ("n", "<f4", 3), ("c", "u1", 3)])
    rec = np.empty(n, dtype=dt)
    rec["p"] = cloud.positions.astype(np.float32)
    rec["n"] = cloud.normals.astype(np.float32)
    rec["c"] = np.clip(np.round(cloud.colors * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(rec.tobytes())


def load_cloud_ply(path) -> SurfaceCloud:
    with open(path, "rb") as f:
        header = []
        while True:
            line = f.readline().decode("ascii").strip()
            header.append(line)
            if line == "end_header":
                break
        count = next(int(h.split()[2]) for h in header if h.startswith("element vertex"))
        dt = np.dtype([("p", "<f4", 3), ("n", "<f4", 3), ("c", "u1", 3)])
        rec = np.frombuffer(f.read(dt.itemsize * count), dtype=dt)
    return SurfaceCloud(rec["p"].astype(np.float64), rec["n"].astype(np.float64),
                        rec["c"].astype(np.float64) / 255.0)
