import numpy as np
import pytest
from scipy import stats

from texfield.geometry import (
    AllFacesRemovedError,
    DegenerateMeshError,
    Material,
    Mesh,
    MeshFormatError,
    ZeroAreaMeshError,
    canonicalize_materials,
    filter_outline_shells,
    load_cloud_ply,
    load_mesh,
    normalize_mesh,
    primitives,
    sample_surface,
    save_cloud_ply,
    save_mesh_obj,
)

QUAD_OBJ = """\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
f 1 2 3
f 1 3 4
"""


class TestLoadMesh:
    def test_quad_obj(self, tmp_path):
        path = tmp_path / "quad.obj"
        path.write_text(QUAD_OBJ)
        mesh = load_mesh(path)
        assert len(mesh.vertices) == 4
        assert len(mesh.faces) == 2

    def test_out_of_range_face_index(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 100\n")
        with pytest.raises(MeshFormatError):
            load_mesh(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_mesh(tmp_path / "nope.obj")

    def test_unsupported_format(self, tmp_path):
        path = tmp_path / "mesh.stl"
        path.write_text("solid\n")
        with pytest.raises(MeshFormatError):
            load_mesh(path)

    def test_vertex_color_readback(self, tmp_path):
        # cube with xyzrgb vertex colors: color query at a vertex returns it
        cube = primitives.make_box()
        rng = np.random.default_rng(0)
        cube.vertex_colors = rng.uniform(0, 1, size=(len(cube.vertices), 3))
        path = tmp_path / "cube.obj"
        save_mesh_obj(path, cube)
        loaded = load_mesh(path)
        assert loaded.vertex_colors is not None
        # bary (1,0,0) on face f sits at its first vertex
        for f in range(0, len(loaded.faces), 3):
            vid = loaded.faces[f][0]
            color = loaded.colors_at(np.array([f]), np.array([[1.0, 0.0, 0.0]]))[0]
            np.testing.assert_allclose(color, loaded.vertex_colors[vid], atol=1e-6)

    def test_obj_quad_triangulation(self, tmp_path):
        path = tmp_path / "poly.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        mesh = load_mesh(path)
        assert len(mesh.faces) == 2

    def test_mtl_materials(self, tmp_path):
        (tmp_path / "m.mtl").write_text(
            "newmtl glow\nKd 0 0 0\nKe 0.9 0.1 0.1\nnewmtl plain\nKd 0.3 0.3 0.3\n")
        (tmp_path / "m.obj").write_text(
            "mtllib m.mtl\nv 0 0 0\nv 1 0 0\nv 0 1 0\nusemtl glow\nf 1 2 3\n")
        mesh = load_mesh(tmp_path / "m.obj")
        mat = mesh.materials[mesh.face_materials[0]]
        assert mat.name == "glow"
        np.testing.assert_allclose(mat.emission_color, [0.9, 0.1, 0.1])

    def test_ascii_ply_round(self, tmp_path):
        ply = "\n".join([
            "ply", "format ascii 1.0",
            "element vertex 3",
            "property float x", "property float y", "property float z",
            "property uchar red", "property uchar green", "property uchar blue",
            "element face 1",
            "property list uchar int vertex_indices",
            "end_header",
            "0 0 0 255 0 0",
            "1 0 0 0 255 0",
            "0 1 0 0 0 255",
            "3 0 1 2",
        ]) + "\n"
        path = tmp_path / "tri.ply"
        path.write_text(ply)
        mesh = load_mesh(path)
        assert len(mesh.vertices) == 3 and len(mesh.faces) == 1
        np.testing.assert_allclose(mesh.vertex_colors[0], [1.0, 0.0, 0.0])


class TestNormalize:
    def test_translated_unit_cube(self):
        cube = primitives.make_box(center=(10.5, 10.5, 10.5))
        out = normalize_mesh(cube)
        lo, hi = out.bounds()
        np.testing.assert_allclose(lo, [-0.5, -0.5, -0.5], atol=1e-12)
        np.testing.assert_allclose(hi, [0.5, 0.5, 0.5], atol=1e-12)

    def test_longest_axis_scaling(self):
        box = primitives.make_box(extents=(2.0, 1.0, 1.0))
        out = normalize_mesh(box)
        lo, hi = out.bounds()
        np.testing.assert_allclose(hi - lo, [1.0, 0.5, 0.5], atol=1e-12)

    def test_degenerate_mesh(self):
        mesh = Mesh(vertices=np.zeros((3, 3)), faces=np.array([[0, 1, 2]]))
        with pytest.raises(DegenerateMeshError):
            normalize_mesh(mesh)


class TestCanonicalizeMaterials:
    def _one_face_mesh(self, material):
        return Mesh(vertices=np.eye(3), faces=np.array([[0, 1, 2]]),
                    materials=[material])

    def test_fully_emissive_takes_emission_color(self):
        mesh = self._one_face_mesh(Material(base_color=(0, 0, 0),
                                            emission_color=(0.9, 0.1, 0.1)))
        out = canonicalize_materials(mesh)
        np.testing.assert_allclose(out.materials[0].base_color, [0.9, 0.1, 0.1])
        assert out.materials[0].emission_color is None

    def test_non_emissive_passthrough(self):
        mesh = self._one_face_mesh(Material(base_color=(0.3, 0.3, 0.3)))
        out = canonicalize_materials(mesh)
        np.testing.assert_allclose(out.materials[0].base_color, [0.3, 0.3, 0.3])

    def test_partial_composite_reinhard(self):
        # (0.5 + 0.5) / (1 + 1.0) = 0.5 per channel
        mesh = self._one_face_mesh(Material(base_color=(0.5, 0.5, 0.5),
                                            emission_color=(0.5, 0.5, 0.5)))
        out = canonicalize_materials(mesh)
        np.testing.assert_allclose(out.materials[0].base_color, [0.5, 0.5, 0.5], atol=1e-12)

    def test_outputs_always_in_unit_range(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            mat = Material(base_color=rng.uniform(0, 1, 3),
                           emission_color=rng.uniform(0, 5, 3),
                           emission_strength=rng.uniform(0, 4))
            out = canonicalize_materials(self._one_face_mesh(mat))
            c = out.materials[0].base_color
            assert np.all((c >= 0) & (c <= 1))

    def test_emission_strength_folds_in(self):
        mesh = self._one_face_mesh(Material(base_color=(0, 0, 0),
                                            emission_color=(0.3, 0.3, 0.3),
                                            emission_strength=2.0))
        out = canonicalize_materials(mesh)
        np.testing.assert_allclose(out.materials[0].base_color, [0.6, 0.6, 0.6])


class TestFilterOutlineShells:
    def test_shell_removed_sphere_kept(self):
        mesh = primitives.make_shelled_sphere()
        # oracle: per-component mean of normal . outward must have opposite signs
        out = filter_outline_shells(mesh)
        assert len(out.faces) < len(mesh.faces)
        assert np.all(out.face_materials == 0)  # only the outline material dropped
        # every surviving face belongs to the inner sphere
        radii = np.linalg.norm(out.face_centroids(), axis=1)
        assert np.all(radii < 0.42)

    def test_plain_sphere_unchanged(self):
        mesh = primitives.make_uv_sphere(n_lat=12, n_lon=24)
        out = filter_outline_shells(mesh)
        assert len(out.faces) == len(mesh.faces)

    def test_pure_shell_raises(self):
        mesh = primitives.make_uv_sphere(n_lat=12, n_lon=24, flip=True)
        with pytest.raises(AllFacesRemovedError):
            filter_outline_shells(mesh)

    def test_idempotent(self):
        mesh = primitives.make_shelled_sphere()
        once = filter_outline_shells(mesh)
        twice = filter_outline_shells(once)
        np.testing.assert_array_equal(once.faces, twice.faces)

    def test_backface_flagged_material_removed(self):
        mesh = primitives.make_uv_sphere(n_lat=8, n_lon=16)
        flagged = primitives.make_quad()
        offset = len(mesh.vertices)
        combined = Mesh(
            vertices=np.vstack([mesh.vertices, flagged.vertices + 2.0]),
            faces=np.vstack([mesh.faces, flagged.faces + offset]),
            materials=[Material(name="body"),
                       Material(name="outline", backface_cull_inverted=True)],
            face_materials=np.concatenate([
                np.zeros(len(mesh.faces), dtype=np.int32),
                np.ones(len(flagged.faces), dtype=np.int32)]),
        )
        out = filter_outline_shells(combined)
        assert np.all(out.face_materials == 0)


class TestSampleSurface:
    def test_planarity_on_single_triangle(self):
        mesh = Mesh(vertices=np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                    faces=np.array([[0, 1, 2]]))
        cloud = sample_surface(mesh, 1000, seed=0)
        assert np.all(np.abs(cloud.positions[:, 2]) < 1e-6)
        np.testing.assert_allclose(cloud.normals, [[0, 0, 1]] * 1000, atol=1e-12)

    def test_area_ratio_proportions(self):
        mesh = primitives.make_two_triangles(area_ratio=3.0)
        cloud = sample_surface(mesh, 100_000, seed=1)
        # face 0 has 3x the area: expect 75k/25k within 2%
        on_first = np.sum(cloud.positions[:, 0] < 1.9)
        assert abs(on_first - 75_000) < 2000
        assert abs((100_000 - on_first) - 25_000) < 2000

    def test_chi_square_face_frequencies(self):
        mesh = primitives.make_uv_sphere(n_lat=6, n_lon=8)
        areas = mesh.face_areas()
        _, face_idx = sample_surface(mesh, 100_000, seed=3, return_face_idx=True)
        counts = np.bincount(face_idx, minlength=len(areas))
        expected = areas / areas.sum() * counts.sum()
        chi2 = stats.chisquare(counts, expected)
        assert chi2.pvalue > 0.01

    def test_monochrome_all_white(self):
        mesh = primitives.checker_sphere(n_lat=12, n_lon=24)
        cloud = sample_surface(mesh, 500, seed=4, monochrome=True)
        np.testing.assert_array_equal(cloud.colors, np.ones((500, 3)))

    def test_deterministic(self):
        mesh = primitives.checker_sphere(n_lat=12, n_lon=24)
        a = sample_surface(mesh, 2000, seed=5)
        b = sample_surface(mesh, 2000, seed=5)
        np.testing.assert_array_equal(a.positions, b.positions)
        np.testing.assert_array_equal(a.normals, b.normals)
        np.testing.assert_array_equal(a.colors, b.colors)
        c = sample_surface(mesh, 2000, seed=6)
        assert not np.array_equal(a.positions, c.positions)

    def test_normals_unit(self):
        mesh = primitives.make_uv_sphere(n_lat=10, n_lon=20)
        cloud = sample_surface(mesh, 1000, seed=7)
        np.testing.assert_allclose(np.linalg.norm(cloud.normals, axis=1), 1.0, atol=1e-6)

    def test_colors_in_unit_cube(self):
        mesh = primitives.checker_sphere(n_lat=16, n_lon=32)
        cloud = sample_surface(mesh, 5000, seed=8)
        assert np.all((cloud.colors >= 0) & (cloud.colors <= 1))

    def test_zero_area_mesh(self):
        mesh = Mesh(vertices=np.zeros((3, 3)), faces=np.array([[0, 1, 2]]))
        with pytest.raises(ZeroAreaMeshError):
            sample_surface(mesh, 10, seed=0)


class TestUvSphere:
    def test_uvs_cover_unit_square(self):
        mesh = primitives.make_uv_sphere(n_lat=8, n_lon=16)
        assert mesh.uvs is not None
        assert mesh.uvs.min() >= 0.0 and mesh.uvs.max() <= 1.0
        # the wrap column creates a seam: some corners sit at u=1
        assert np.any(mesh.uvs[..., 0] == 1.0)

    def test_watertight_area(self):
        mesh = primitives.make_uv_sphere(n_lat=64, n_lon=128, radius=0.5)
        assert mesh.face_areas().sum() == pytest.approx(4 * np.pi * 0.25, rel=1e-2)

    def test_outward_normals(self):
        mesh = primitives.make_uv_sphere(n_lat=16, n_lon=32)
        alignment = np.sum(mesh.face_normals() * mesh.face_centroids(), axis=1)
        assert np.all(alignment > 0)


class TestCloudPly:
    def test_round_trip(self, tmp_path):
        mesh = primitives.checker_sphere(n_lat=16, n_lon=32)
        cloud = sample_surface(mesh, 1000, seed=9)
        path = tmp_path / "cloud.ply"
        save_cloud_ply(path, cloud)
        loaded = load_cloud_ply(path)
        assert len(loaded) == 1000
        np.testing.assert_allclose(loaded.positions, cloud.positions, atol=1e-4)
        np.testing.assert_allclose(loaded.colors, cloud.colors, atol=1 / 255.0)

    def test_sample_is_sequence_of_surface_samples(self):
        mesh = primitives.checker_sphere(n_lat=12, n_lon=24)
        cloud = sample_surface(mesh, 10, seed=10)
        sample = cloud[3]
        assert sample.position.shape == (3,)
        assert abs(np.linalg.norm(sample.normal) - 1.0) < 1e-6
        assert len(list(cloud)) == 10
