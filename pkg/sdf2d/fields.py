"""
Scalar fields sampled on a regular grid or on a free point set.

Grid values are stored row-major with the first axis varying slowest (numpy "ij" indexing), so
`values[i, j]` belongs to the point (x_i, y_j).
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from extrude_cad.exceptions import InvalidParameterError


class FieldKind(str, Enum):
    DISTANCE = "distance"
    SDF = "sdf"
    OCCUPANCY = "occupancy"


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned regular grid: bounds per axis and number of nodes per axis"""
    lower: np.ndarray
    upper: np.ndarray
    shape: tuple

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        upper = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        shape = tuple(int(s) for s in self.shape)
        if not (len(lower) == len(upper) == len(shape)):
            raise InvalidParameterError("Grid bounds and shape must have the same dimension")
        if any(s < 2 for s in shape):
            raise InvalidParameterError(f"Every grid axis needs at least 2 nodes, got {shape}")
        if np.any(upper <= lower):
            raise InvalidParameterError("Degenerate grid bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def cube(cls, lower: Sequence[float], upper: Sequence[float], resolution: int) -> "GridSpec":
        return cls(np.asarray(lower), np.asarray(upper), (resolution,) * len(lower))

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / (np.asarray(self.shape) - 1)

    def axes(self) -> List[np.ndarray]:
        return [np.linspace(lo, hi, n) for lo, hi, n in zip(self.lower, self.upper, self.shape)]

    def points(self) -> np.ndarray:
        """All grid nodes, shape (prod(shape), dim), row-major"""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)


@dataclass(frozen=True)
class ScalarField:
    """Values of a distance field, SDF or occupancy together with their sample layout"""
    values: np.ndarray
    kind: FieldKind = FieldKind.SDF
    grid: Optional[GridSpec] = None
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "kind", FieldKind(self.kind))
        if (self.grid is None) == (self.points is None):
            raise InvalidParameterError("A field is laid out either on a grid or on a point set")
        if self.grid is not None:
            if values.size != int(np.prod(self.grid.shape)):
                raise InvalidParameterError(
                    f"Grid {self.grid.shape} expects {int(np.prod(self.grid.shape))} values, got {values.size}"
                )
            values = values.reshape(self.grid.shape)
        else:
            points = np.asarray(self.points, dtype=np.float64)
            if points.ndim != 2:
                raise InvalidParameterError("Point-set fields need points of shape (M, dim)")
            if values.size != points.shape[0]:
                raise InvalidParameterError("One value per point is required")
            values = values.reshape(-1)
            object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    @property
    def is_grid(self) -> bool:
        return self.grid is not None

    @property
    def dim(self) -> int:
        return self.grid.dim if self.is_grid else self.points.shape[1]

    @property
    def lower(self) -> np.ndarray:
        if self.is_grid:
            return self.grid.lower
        if len(self.points) == 0:
            return np.zeros(self.dim)
        return self.points.min(axis=0)

    @property
    def upper(self) -> np.ndarray:
        if self.is_grid:
            return self.grid.upper
        if len(self.points) == 0:
            return np.zeros(self.dim)
        return self.points.max(axis=0)

    def coordinates(self) -> np.ndarray:
        return self.grid.points() if self.is_grid else self.points

    def flat_values(self) -> np.ndarray:
        return self.values.reshape(-1)
