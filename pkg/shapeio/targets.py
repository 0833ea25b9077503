"""Analytic fitting targets: 2D distance-field grids and 3D occupancy grids."""
from typing import Callable, Dict

import numpy as np

from extrude_cad.exceptions import InvalidParameterError
from sdf2d.fields import FieldKind, GridSpec, ScalarField
from sdf2d.oracles import box_sdf_3d, capped_cylinder_sdf_3d, circle_sdf, polygon_distance, star_vertices
from .grids import testing_grid

# Extent of the square window 2D targets are sampled on
WINDOW_2D = 1.5

BOX = ((-0.6, -0.4, 0.0), (0.6, 0.4, 0.8))
# Box plus a taller rod standing on its +x side
UNION_BOX = ((-0.8, -0.5, 0.0), (0.2, 0.5, 0.6))
UNION_CYLINDER = {"radius": 0.35, "height": 1.0, "center_xy": (0.4, 0.0)}


def _grid_2d(resolution: int) -> GridSpec:
    return GridSpec.cube((-WINDOW_2D, -WINDOW_2D), (WINDOW_2D, WINDOW_2D), resolution)


def circle_distance_grid(resolution: int = 64, radius: float = 1.0) -> ScalarField:
    grid = _grid_2d(resolution)
    return ScalarField(np.abs(circle_sdf(grid.points(), radius)), FieldKind.DISTANCE, grid=grid)


def star_distance_grid(resolution: int = 64, n_tips: int = 5) -> ScalarField:
    grid = _grid_2d(resolution)
    return ScalarField(polygon_distance(grid.points(), star_vertices(n_tips)), FieldKind.DISTANCE, grid=grid)


def occupancy_grid(sdf: Callable[[np.ndarray], np.ndarray], lower, upper, resolution: int,
                   padding: float) -> ScalarField:
    """Occupancy of an analytic positive-inside SDF over the padded bbox of the shape"""
    grid = testing_grid(lower, upper, resolution, padding)
    inside = sdf(grid.points()) >= 0
    return ScalarField(inside.astype(np.float64), FieldKind.OCCUPANCY, grid=grid)


def box_occupancy_grid(resolution: int = 64, padding: float = 0.15) -> ScalarField:
    lower, upper = BOX
    return occupancy_grid(lambda p: box_sdf_3d(p, lower, upper), lower, upper, resolution, padding)


def _cylinder_sdf(points: np.ndarray) -> np.ndarray:
    return capped_cylinder_sdf_3d(points, UNION_CYLINDER["radius"], UNION_CYLINDER["height"],
                                  center_xy=UNION_CYLINDER["center_xy"])


def cylinder_occupancy_grid(resolution: int = 64, padding: float = 0.15) -> ScalarField:
    cx, cy = UNION_CYLINDER["center_xy"]
    r, h = UNION_CYLINDER["radius"], UNION_CYLINDER["height"]
    return occupancy_grid(_cylinder_sdf, (cx - r, cy - r, 0.0), (cx + r, cy + r, h), resolution, padding)


def box_cylinder_occupancy_grid(resolution: int = 64, padding: float = 0.15) -> ScalarField:
    box_lower, box_upper = UNION_BOX
    cx, cy = UNION_CYLINDER["center_xy"]
    r, h = UNION_CYLINDER["radius"], UNION_CYLINDER["height"]
    lower = np.minimum(box_lower, (cx - r, cy - r, 0.0))
    upper = np.maximum(box_upper, (cx + r, cy + r, h))

    def sdf(points):
        return np.maximum(box_sdf_3d(points, box_lower, box_upper), _cylinder_sdf(points))

    return occupancy_grid(sdf, lower, upper, resolution, padding)


TARGETS: Dict[str, Callable[..., ScalarField]] = {
    "circle": lambda resolution, padding: circle_distance_grid(resolution),
    "star": lambda resolution, padding: star_distance_grid(resolution),
    "box": box_occupancy_grid,
    "cylinder": cylinder_occupancy_grid,
    "box_cylinder": box_cylinder_occupancy_grid,
}


def make_target(name: str, resolution: int = 64, padding: float = 0.15) -> ScalarField:
    if name not in TARGETS:
        raise InvalidParameterError(f"Unknown target {name!r}; choose from {sorted(TARGETS)}")
    return TARGETS[name](resolution, padding)
