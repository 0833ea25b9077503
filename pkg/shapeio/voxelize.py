"""Point clouds to occupancy grids."""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from sdf2d.fields import FieldKind, ScalarField
from .grids import testing_grid
from .pointcloud import PointCloud

logger = logging.getLogger(__name__)


def voxelize_pointcloud(cloud: PointCloud, resolution: int, padding: float,
                        bbox: Optional[Tuple[Sequence[float], Sequence[float]]] = None) -> ScalarField:
    """
    Occupancy grid over the padded bbox of a surface point cloud.

    Cells hit by a point are marked, gaps between them are closed with one dilation/erosion
    pass, and the enclosed interior is filled.
    """
    lower, upper = cloud.bbox() if bbox is None else bbox
    grid = testing_grid(lower, upper, resolution, padding)

    index = np.rint((cloud.points - grid.lower) / grid.spacing).astype(int)
    index = np.clip(index, 0, np.asarray(grid.shape) - 1)
    hits = np.zeros(grid.shape, dtype=bool)
    hits[tuple(index.T)] = True

    closed = ndimage.binary_closing(hits, structure=np.ones((3, 3, 3), dtype=bool))
    filled = ndimage.binary_fill_holes(closed | hits)
    logger.info("Voxelized %d points into %d of %d cells", len(cloud), int(filled.sum()), filled.size)
    return ScalarField(filled.astype(np.float64), FieldKind.OCCUPANCY, grid=grid)
