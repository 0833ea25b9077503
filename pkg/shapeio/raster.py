"""
Point-in-polygon rasterization of exactly the polygons written to a CAD script.

Used to check an export against the kernel's own hard occupancy without an external CAD tool.
"""
from typing import Optional, Tuple

import numpy as np
from django.conf import settings
from matplotlib.path import Path

from extrude.pose import to_local, to_world
from extrude.solid import ExtrusionParams
from extrude_cad.exceptions import InvalidParameterError
from sdf2d.sampling import sample_sketch
from sketch.tensors import as_tensor, to_numpy
from stump.assembly import ShapeModel
from stump.csg import evaluate_csg
from .grids import padded_bounds


def sketch_polyline(prim: ExtrusionParams, polyline_samples: Optional[int] = None) -> np.ndarray:
    """Closed counter-clockwise polyline (N * n, 2) of a primitive's profile, without repeating the first point"""
    n = polyline_samples or settings.SKETCH_SAMPLES_PER_CURVE
    return to_numpy(sample_sketch(prim.sketch, n).samples)


def export_bounds(model: ShapeModel, polyline_samples: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Box standing in for all of space on export: the padded target bbox, else the primitives' extent"""
    bbox = model.bbox()
    if bbox is not None:
        padding = float(model.metadata.get("padding", settings.FIT_PADDING))
        return padded_bounds(bbox[0], bbox[1], padding)
    if not model.primitives:
        return -np.ones(3), np.ones(3)
    corners = []
    for prim in model.primitives:
        outline = sketch_polyline(prim, polyline_samples)
        height = float(prim.height)
        for z in (0.0, height):
            local = np.hstack([outline, np.full((len(outline), 1), z)])
            corners.append(to_numpy(to_world(prim.pose, as_tensor(local))))
    corners = np.vstack(corners)
    return corners.min(axis=0), corners.max(axis=0)


def polygon_occupancy(model: ShapeModel, points, polyline_samples: Optional[int] = None) -> np.ndarray:
    """Boolean membership (Q,) of world points in the exported CSG of a hard model"""
    if not model.is_hard:
        raise InvalidParameterError("Rasterizing an export needs a hard model; binarize it first")
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    occupancies = np.zeros((len(points), len(model.primitives)), dtype=bool)
    for k, prim in enumerate(model.primitives):
        local = to_numpy(to_local(prim.pose, as_tensor(points)))
        outline = Path(sketch_polyline(prim, polyline_samples), closed=False)
        in_slab = (local[:, 2] >= 0) & (local[:, 2] <= float(prim.height))
        occupancies[:, k] = in_slab & outline.contains_points(local[:, :2])

    lower, upper = export_bounds(model, polyline_samples)
    universe = np.all((points >= lower) & (points <= upper), axis=1)
    return evaluate_csg(model.csg(), occupancies, universe)
