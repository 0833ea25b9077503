"""Isosurface extraction from 3D grid fields."""
import logging
import time
from typing import Optional

import numpy as np
import trimesh
from skimage import measure

from extrude_cad.exceptions import InvalidParameterError
from sdf2d.fields import FieldKind, ScalarField

logger = logging.getLogger(__name__)


def default_iso(field: ScalarField) -> float:
    return 0.5 if field.kind == FieldKind.OCCUPANCY else 0.0


def marching_cubes(field: ScalarField, iso: Optional[float] = None) -> trimesh.Trimesh:
    """
    Triangle surface of {field >= iso} for a positive-inside 3D grid field.

    The grid is padded by one outside layer so shapes touching the grid boundary come out
    closed. A field that never crosses the iso level gives an empty mesh.
    """
    if not field.is_grid or field.dim != 3:
        raise InvalidParameterError("Marching cubes needs a 3D grid field")
    iso = default_iso(field) if iso is None else float(iso)
    values = field.values
    if values.min() >= iso or values.max() < iso:
        logger.info("Field does not cross iso level %s; returning an empty mesh", iso)
        return trimesh.Trimesh()

    start_time = time.time()
    spacing = field.grid.spacing
    outside = min(values.min(), iso) - 1.0
    padded = np.pad(values, 1, mode="constant", constant_values=outside)
    vertices, faces, _, _ = measure.marching_cubes(padded, level=iso, spacing=tuple(spacing))
    vertices = vertices + (field.grid.lower - spacing)

    mesh = trimesh.Trimesh(vertices=vertices, faces=faces, process=False)
    if mesh.is_volume and mesh.volume < 0:
        mesh.invert()

    duration = time.time() - start_time
    if duration > 1.0:  # Only log if slow
        logger.info("Marching cubes on %s grid took %.2fs (%d faces)", field.grid.shape, duration, len(faces))
    return mesh
