"""
Closed-form signed distances used as accuracy oracles and to build fitting targets.

All functions take numpy arrays of points and follow the kernel convention: positive inside.
"""
import math
from typing import Sequence

import numpy as np
from matplotlib.path import Path


def circle_sdf(points: np.ndarray, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
    offset = np.asarray(points, dtype=np.float64) - np.asarray(center, dtype=np.float64)
    return radius - np.linalg.norm(offset, axis=-1)


def polygon_distance(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Unsigned distance from every point to the closed polyline through `vertices`"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    best = np.full(len(points), np.inf)
    for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
        edge = b - a
        u = np.clip(((points - a) @ edge) / (edge @ edge), 0.0, 1.0)
        foot = a + u[:, None] * edge
        best = np.minimum(best, np.linalg.norm(points - foot, axis=-1))
    return best


def polygon_sdf(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    inside = Path(np.asarray(vertices, dtype=np.float64)).contains_points(points)
    distance = polygon_distance(points, vertices)
    return np.where(inside, distance, -distance)


def square_vertices(half_width: float = 1.0) -> np.ndarray:
    """Axis-aligned square, counter-clockwise from the first quadrant corner"""
    a = half_width
    return np.array([[a, a], [-a, a], [-a, -a], [a, -a]], dtype=np.float64)


def star_vertices(n_tips: int = 5, outer: float = 1.0, inner: float = 0.45,
                  start_angle: float = math.pi / 2) -> np.ndarray:
    """Star polygon (star-shaped about the origin), counter-clockwise"""
    angles = start_angle + np.arange(2 * n_tips) * math.pi / n_tips
    radii = np.where(np.arange(2 * n_tips) % 2 == 0, outer, inner)
    return np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=-1)


def box_sdf_3d(points: np.ndarray, lower: Sequence[float], upper: Sequence[float]) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    center = (lower + upper) / 2
    half = (upper - lower) / 2
    q = np.abs(points - center) - half
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(q.max(axis=-1), 0.0)
    return -(outside + inside)


def capped_cylinder_sdf_3d(points: np.ndarray, radius: float = 1.0, height: float = 1.0,
                           base_z: float = 0.0, center_xy: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
    """Upright cylinder with its base disc at z = base_z"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    radial = np.linalg.norm(points[:, :2] - np.asarray(center_xy, dtype=np.float64), axis=-1) - radius
    axial = np.abs(points[:, 2] - (base_z + height / 2)) - height / 2
    q = np.stack([radial, axial], axis=-1)
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(q.max(axis=-1), 0.0)
    return -(outside + inside)
