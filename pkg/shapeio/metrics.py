"""Chamfer distance, volumetric IoU and surface F1 between a prediction and a ground truth."""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import trimesh
from scipy.spatial import cKDTree

from extrude_cad.exceptions import InvalidParameterError
from sdf2d.fields import FieldKind, ScalarField
from .grids import volume_iou

logger = logging.getLogger(__name__)

# Fraction of the ground-truth bbox diagonal used as the default F1 distance threshold
F1_THRESHOLD_FRACTION = 0.02


@dataclass(frozen=True)
class MetricsReport:
    chamfer: float
    iou: float
    f1: float
    f1_threshold: float

    @property
    def chamfer_scaled(self) -> float:
        """Chamfer distance in units of 1e-3"""
        return self.chamfer * 1e3

    def line(self) -> str:
        return f"CD_raw={self.chamfer:.6e} CD={self.chamfer_scaled:.6f} IoU={self.iou:.6f} F1={self.f1:.4f}"


def surface_samples(mesh: trimesh.Trimesh, count: int, seed: int = 0) -> np.ndarray:
    if mesh is None or len(mesh.faces) == 0 or mesh.area <= 0:
        raise InvalidParameterError("Cannot sample an empty surface")
    points, _ = trimesh.sample.sample_surface(mesh, count, seed=seed)
    return np.asarray(points, dtype=np.float64)


def _nearest_distances(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    distances, _ = cKDTree(target).query(source, workers=-1)
    return distances


def chamfer_distance(pred: np.ndarray, gt: np.ndarray) -> float:
    """Symmetric mean squared nearest-neighbour distance between two sample sets"""
    if len(pred) == 0 or len(gt) == 0:
        raise InvalidParameterError("Chamfer distance of an empty surface sample set")
    return float(np.mean(_nearest_distances(pred, gt) ** 2) + np.mean(_nearest_distances(gt, pred) ** 2))


def f1_score(pred: np.ndarray, gt: np.ndarray, threshold: float) -> float:
    """Harmonic mean of precision and recall at `threshold`, in percent"""
    if len(pred) == 0 or len(gt) == 0:
        raise InvalidParameterError("F1 of an empty surface sample set")
    if threshold <= 0:
        raise InvalidParameterError(f"F1 threshold must be positive, got {threshold}")
    precision = float(np.mean(_nearest_distances(pred, gt) <= threshold))
    recall = float(np.mean(_nearest_distances(gt, pred) <= threshold))
    if precision + recall == 0:
        return 0.0
    return 100.0 * 2 * precision * recall / (precision + recall)


def default_f1_threshold(gt_mesh: trimesh.Trimesh) -> float:
    lower, upper = gt_mesh.bounds
    return F1_THRESHOLD_FRACTION * float(np.linalg.norm(upper - lower))


def _inside(field: ScalarField) -> np.ndarray:
    if field.kind == FieldKind.OCCUPANCY:
        return field.values > 0.5
    if field.kind == FieldKind.SDF:
        return field.values >= 0
    raise InvalidParameterError("IoU needs occupancy or SDF grids, not unsigned distances")


def grid_iou(pred: ScalarField, gt: ScalarField) -> float:
    if pred.is_grid != gt.is_grid:
        raise InvalidParameterError("IoU needs both fields on the same layout")
    if pred.is_grid:
        same = pred.grid.shape == gt.grid.shape and np.allclose(pred.grid.lower, gt.grid.lower) \
            and np.allclose(pred.grid.upper, gt.grid.upper)
        if not same:
            raise InvalidParameterError("IoU needs matching grid layouts")
    return volume_iou(_inside(pred), _inside(gt))


def compute_metrics(pred: Tuple[trimesh.Trimesh, ScalarField], gt: Tuple[trimesh.Trimesh, ScalarField],
                    n_surface_samples: int = 10000, f1_threshold: Optional[float] = None,
                    seed: int = 0) -> MetricsReport:
    """CD, V-IoU and F1 of (mesh, occupancy grid) pairs; both surfaces are sampled with the same seed"""
    pred_mesh, pred_grid = pred
    gt_mesh, gt_grid = gt
    pred_points = surface_samples(pred_mesh, n_surface_samples, seed)
    gt_points = surface_samples(gt_mesh, n_surface_samples, seed)
    threshold = default_f1_threshold(gt_mesh) if f1_threshold is None else f1_threshold
    report = MetricsReport(
        chamfer=chamfer_distance(pred_points, gt_points),
        iou=grid_iou(pred_grid, gt_grid),
        f1=f1_score(pred_points, gt_points, threshold),
        f1_threshold=threshold,
    )
    logger.info("Metrics: %s (F1 threshold %.4g)", report.line(), threshold)
    return report
