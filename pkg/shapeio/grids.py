"""Testing grids over padded bounding boxes and grid resampling."""
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from extrude_cad.exceptions import InvalidParameterError
from sdf2d.fields import FieldKind, GridSpec, ScalarField


def padded_bounds(lower: Sequence[float], upper: Sequence[float],
                  padding: float) -> Tuple[np.ndarray, np.ndarray]:
    """Expands the box by `padding` times its extent on every side"""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if padding < 0:
        raise InvalidParameterError(f"Padding must be non-negative, got {padding}")
    if lower.shape != upper.shape or np.any(upper <= lower):
        raise InvalidParameterError(f"Degenerate bounding box {lower} .. {upper}")
    margin = padding * (upper - lower)
    return lower - margin, upper + margin


def testing_grid(lower: Sequence[float], upper: Sequence[float], resolution: int, padding: float) -> GridSpec:
    if resolution < 2:
        raise InvalidParameterError(f"Grid resolution must be at least 2, got {resolution}")
    padded_lower, padded_upper = padded_bounds(lower, upper, padding)
    return GridSpec.cube(padded_lower, padded_upper, resolution)


def sample_testing_grid(lower: Sequence[float], upper: Sequence[float], resolution: int,
                        padding: float) -> np.ndarray:
    """Row-major grid points (resolution^3, 3) over the padded box"""
    return testing_grid(lower, upper, resolution, padding).points()


def occupied_bbox(field: ScalarField) -> Tuple[np.ndarray, np.ndarray]:
    """Bounds of the occupied cells of an occupancy grid, or the grid bounds when none are"""
    inside = field.values >= 0 if field.kind == FieldKind.SDF else field.values > 0.5
    coordinates = field.coordinates()[inside.reshape(-1)]
    if len(coordinates) == 0:
        return field.lower.copy(), field.upper.copy()
    lower, upper = coordinates.min(axis=0), coordinates.max(axis=0)
    if field.is_grid:
        # Each occupied node stands for the cell around it
        half = field.grid.spacing / 2
        return lower - half, upper + half
    # A single occupied layer still needs a non-degenerate box
    flat = upper <= lower
    lower[flat] -= 5e-7
    upper[flat] += 5e-7
    return lower, upper


def resample_nearest(field: ScalarField, grid: GridSpec, fill_value: Optional[float] = None) -> ScalarField:
    """Nearest-node values on `grid`; nodes outside the field take `fill_value`, or the nearest value when None"""
    if not field.is_grid:
        raise InvalidParameterError("Only grid fields can be resampled")
    if grid.dim != field.dim:
        raise InvalidParameterError(f"Cannot resample a {field.dim}D field onto a {grid.dim}D grid")
    interpolator = RegularGridInterpolator(field.grid.axes(), field.values, method="nearest",
                                           bounds_error=False, fill_value=fill_value)
    return ScalarField(interpolator(grid.points()), field.kind, grid=grid)


def volume_iou(a: np.ndarray, b: np.ndarray) -> float:
    """|A n B| / |A u B| of two boolean arrays; two empty sets count as identical"""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise InvalidParameterError(f"Occupancy layouts differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)
