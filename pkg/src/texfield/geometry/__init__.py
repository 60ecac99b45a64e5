"""Mesh ingestion, curation, normalization, and colored surface sampling."""

from .mesh import (
    DegenerateMeshError,
    Material,
    Mesh,
    MeshFormatError,
    SurfaceCloud,
    SurfaceSample,
    normalize_mesh,
)
from .curation import AllFacesRemovedError, canonicalize_materials, filter_outline_shells
from .sampling import ZeroAreaMeshError, sample_surface
from .meshio import load_cloud_ply, load_mesh, save_cloud_ply, save_mesh_obj
from . import primitives

__all__ = [
    "Mesh",
    "Material",
    "SurfaceSample",
    "SurfaceCloud",
    "MeshFormatError",
    "DegenerateMeshError",
    "AllFacesRemovedError",
    "ZeroAreaMeshError",
    "normalize_mesh",
    "canonicalize_materials",
    "filter_outline_shells",
    "sample_surface",
    "load_mesh",
    "save_mesh_obj",
    "save_cloud_ply",
    "load_cloud_ply",
    "primitives",
]
