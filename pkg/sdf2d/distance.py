"""
Numerical signed distance of a sampled sketch.

    DF(p)   = min over samples s of |s - p|, attained at the sample CT(p)
    SIGN(p) = N(CT(p)) . (C(CT(p)) - p) / (|N(CT(p)) . (C(CT(p)) - p)| + eps)
    SDF(p)  = SIGN(p) * DF(p)          (positive inside)

The argmin is found without gradient tracking and then held fixed, so derivatives flow
through the chosen sample, its normal and the query point only.
"""
import logging
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
import torch
from django.conf import settings
from scipy.spatial import cKDTree

from extrude_cad.exceptions import InvalidParameterError
from sketch.families import SketchFamily
from sketch.params import SketchParams
from sketch.tensors import DTYPE, as_tensor, to_numpy
from .fields import FieldKind, GridSpec, ScalarField
from .sampling import SampledSketch, sample_sketch

logger = logging.getLogger(__name__)


class NearestMethod(str, Enum):
    BRUTE = "brute"
    KDTREE = "kdtree"


class Refinement(str, Enum):
    # Distance to the nearest sample itself
    SAMPLE = "sample"
    # Distance to the two polyline edges around the nearest sample
    SEGMENT = "segment"


class GradientTarget(str, Enum):
    POINT = "query-point"
    PARAMS = "sketch-parameters"


@dataclass(frozen=True)
class SdfQueryResult:
    sdf: float
    closest_param: Tuple[int, float]
    closest_point: np.ndarray


def _squared_distances(points: torch.Tensor, samples: torch.Tensor) -> torch.Tensor:
    diff = points.unsqueeze(-2) - samples
    return (diff * diff).sum(dim=-1)


def _brute_nearest(points: torch.Tensor, samples: torch.Tensor, chunk: int) -> torch.Tensor:
    indices = []
    for start in range(0, points.shape[0], chunk):
        sq = _squared_distances(points[start:start + chunk], samples)
        # argmin returns the first of equal minima: lowest index wins ties
        indices.append(torch.argmin(sq, dim=1))
    return torch.cat(indices)


def _kdtree_nearest(points: torch.Tensor, samples: torch.Tensor, chunk: int) -> torch.Tensor:
    """Tree search that returns exactly the brute-force argmin, ties included"""
    m = samples.shape[0]
    k = min(8, m)
    tree = cKDTree(to_numpy(samples))
    distances, candidates = tree.query(to_numpy(points), k=k)
    distances = distances.reshape(-1, k)
    candidates = torch.as_tensor(candidates.reshape(-1, k), dtype=torch.long)

    # Re-score candidates with the brute-force arithmetic
    diff = points.unsqueeze(1) - samples[candidates]
    sq = (diff * diff).sum(dim=-1)
    best = sq.min(dim=1, keepdim=True).values
    chosen = torch.where(sq == best, candidates, torch.full_like(candidates, m)).min(dim=1).values

    # Rows whose k-th neighbour could still tie the minimum fall back to brute force
    ambiguous = np.nonzero(distances[:, -1] <= distances[:, 0] * (1.0 + 1e-9))[0]
    if k < m and len(ambiguous):
        rows = torch.as_tensor(ambiguous, dtype=torch.long)
        chosen[rows] = _brute_nearest(points[rows], samples, chunk)
    return chosen


def nearest_sample_indices(sketch: SampledSketch, points: torch.Tensor,
                           method: Union[NearestMethod, str, None] = None,
                           chunk: Optional[int] = None) -> torch.Tensor:
    """Index of the closest sample for every query point (no gradient)"""
    method = NearestMethod(method or settings.SDF_NEAREST)
    chunk = chunk or settings.SDF_QUERY_CHUNK
    with torch.no_grad():
        points = points.detach()
        samples = sketch.samples.detach()
        if points.shape[0] == 0:
            return torch.zeros(0, dtype=torch.long)
        if method == NearestMethod.KDTREE:
            return _kdtree_nearest(points, samples, chunk)
        return _brute_nearest(points, samples, chunk)


def safe_norm(vectors: torch.Tensor) -> torch.Tensor:
    """Euclidean norm with a zero (not NaN) derivative at the origin"""
    sq = (vectors * vectors).sum(dim=-1)
    positive = sq > 0
    return torch.where(positive, torch.sqrt(torch.where(positive, sq, torch.ones_like(sq))), torch.zeros_like(sq))


def _segment_projection(points: torch.Tensor, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    edge = b - a
    length_sq = (edge * edge).sum(dim=-1)
    safe = torch.where(length_sq > 0, length_sq, torch.ones_like(length_sq))
    u = torch.clamp(((points - a) * edge).sum(dim=-1) / safe, 0.0, 1.0)
    u = torch.where(length_sq > 0, u, torch.zeros_like(u))
    return a + u.unsqueeze(-1) * edge


def closest_points(sketch: SampledSketch, points: torch.Tensor, indices: torch.Tensor,
                   refine: Union[Refinement, str, None] = None) -> torch.Tensor:
    """Closest point on the sampled curve for each query, given the nearest-sample indices"""
    nearest = sketch.samples[indices]
    if Refinement(refine or settings.SDF_REFINE) == Refinement.SAMPLE:
        return nearest

    m = len(sketch)
    before = sketch.samples[(indices - 1) % m]
    after = sketch.samples[(indices + 1) % m]
    left = _segment_projection(points, before, nearest)
    right = _segment_projection(points, nearest, after)
    left_closer = safe_norm(left - points) <= safe_norm(right - points)
    return torch.where(left_closer.unsqueeze(-1), left, right)


def sdf_values(sketch: SampledSketch, points, method=None, refine: Union[Refinement, str, None] = None,
               eps: Optional[float] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Differentiable SDF at every point of a (Q, 2) tensor.

    Returns the SDF values (Q,) and the nearest-sample indices (Q,).
    """
    if len(sketch) == 0:
        raise InvalidParameterError("Cannot query an empty sketch")
    eps = settings.SDF_EPSILON if eps is None else eps
    points = as_tensor(points)
    if points.shape[-1] != 2:
        raise InvalidParameterError(f"Sketch SDF queries need 2D points, got shape {tuple(points.shape)}")
    points = points.reshape(-1, 2)

    indices = nearest_sample_indices(sketch, points, method)
    closest = closest_points(sketch, points, indices, refine)
    offset = closest - points
    distance = safe_norm(offset)
    dot = (sketch.normals[indices] * offset).sum(dim=-1)
    sign = dot / (torch.abs(dot) + eps)
    return sign * distance, indices


def signed_distance(sketch: SampledSketch, p, method=None,
                    refine: Union[Refinement, str, None] = None) -> SdfQueryResult:
    """SDF of a single point with its closest sample parameter CT(p)"""
    point = as_tensor(p).reshape(1, 2)
    with torch.no_grad():
        values, indices = sdf_values(sketch, point, method, refine)
        index = int(indices[0])
        closest = closest_points(sketch, point, indices, refine)[0]
    return SdfQueryResult(
        sdf=float(values[0]),
        closest_param=sketch.param_of(index),
        closest_point=to_numpy(closest),
    )


def signed_distance_batch(sketch: SampledSketch, points: Union[GridSpec, np.ndarray, list],
                          method=None, refine: Union[Refinement, str, None] = None) -> ScalarField:
    """SDF of many points; a GridSpec query yields a grid field, anything else a point-set field"""
    start_time = time.time()
    grid = points if isinstance(points, GridSpec) else None
    if grid is not None:
        if grid.dim != 2:
            raise InvalidParameterError("Sketch SDF grids must be two-dimensional")
        coordinates = grid.points()
    else:
        coordinates = np.asarray(points, dtype=np.float64)
        if coordinates.size == 0:
            coordinates = coordinates.reshape(0, 2)
        elif coordinates.ndim != 2 or coordinates.shape[1] != 2:
            raise InvalidParameterError(f"Sketch SDF queries need (Q, 2) points, got shape {coordinates.shape}")

    with torch.no_grad():
        if len(coordinates):
            values, _ = sdf_values(sketch, coordinates, method, refine)
            values = to_numpy(values)
        else:
            values = np.zeros(0)

    batch_time = time.time() - start_time
    if batch_time > 1.0:  # Only log if slow
        logger.info("Batch SDF of %d points took %.2fs", len(coordinates), batch_time)

    if grid is not None:
        return ScalarField(values, FieldKind.SDF, grid=grid)
    return ScalarField(values, FieldKind.SDF, points=coordinates)


def sdf_gradient(curve: Union[SampledSketch, SketchParams, SketchFamily], p,
                 wrt: Union[GradientTarget, str] = GradientTarget.POINT,
                 samples_per_curve: Optional[int] = None, method=None,
                 refine: Union[Refinement, str, None] = None) -> torch.Tensor:
    """
    Partial derivatives of the SDF at p.

    wrt="query-point" gives d sdf / d p (shape (2,)); wrt="sketch-parameters" needs SketchParams
    and gives d sdf / d [radii, weights] with respect to the positive free values.
    """
    wrt = GradientTarget(wrt)
    n = samples_per_curve or settings.SKETCH_SAMPLES_PER_CURVE
    point = as_tensor(p).detach().clone().reshape(1, 2)

    if wrt == GradientTarget.POINT:
        sketch = curve if isinstance(curve, SampledSketch) else sample_sketch(curve, n)
        point.requires_grad_(True)
        values, _ = sdf_values(sketch, point, method, refine)
        (grad,) = torch.autograd.grad(values.sum(), point)
        return grad.reshape(2)

    if not isinstance(curve, SketchParams):
        raise InvalidParameterError("Parameter gradients need SketchParams")
    radii = curve.radii.detach().clone().requires_grad_(True)
    weights = curve.weights.detach().clone().requires_grad_(True)
    params = SketchParams(curve.n_curves, radii, weights, curve.continuity_mode, curve.start_angle)
    values, _ = sdf_values(sample_sketch(params, n), point, method, refine)
    grad_radii, grad_weights = torch.autograd.grad(values.sum(), [radii, weights], allow_unused=True)
    grad_radii = torch.zeros_like(radii) if grad_radii is None else grad_radii
    grad_weights = torch.zeros_like(weights) if grad_weights is None else grad_weights
    return torch.cat([grad_radii, grad_weights]).to(DTYPE)
