"""
Fitting objectives.

    total = recon + lambda_p * prim + lambda_w * weight_reg
"""
from typing import Iterable, Optional, Sequence

import torch

from extrude.solid import ExtrusionParams, primitive_sdf_batch
from extrude_cad.exceptions import InvalidParameterError
from sketch.params import SketchParams
from sketch.rbezier import build_polygon
from sketch.tensors import DTYPE, as_tensor


def loss_reconstruction(pred_occ, target_occ) -> torch.Tensor:
    """Mean squared error between predicted and target occupancy"""
    pred_occ = as_tensor(pred_occ).reshape(-1)
    target_occ = as_tensor(target_occ).reshape(-1)
    if pred_occ.numel() != target_occ.numel():
        raise InvalidParameterError(
            f"Prediction has {pred_occ.numel()} values, target has {target_occ.numel()}"
        )
    if pred_occ.numel() == 0:
        raise InvalidParameterError("Reconstruction loss needs at least one testing point")
    return torch.mean((pred_occ - target_occ) ** 2)


def primitive_loss_from_sdf(sdf: torch.Tensor) -> torch.Tensor:
    """Mean over primitives of the smallest squared SDF over all testing points"""
    if sdf.dim() != 2 or sdf.shape[0] == 0 or sdf.shape[1] == 0:
        raise InvalidParameterError("Primitive loss needs at least one primitive and one testing point")
    return torch.mean(torch.min(sdf ** 2, dim=0).values)


def loss_primitive(prims: Sequence[ExtrusionParams], testing_points,
                   samples_per_curve: Optional[int] = None, sdf: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Pulls every primitive's surface toward the testing points"""
    if len(prims) == 0:
        raise InvalidParameterError("Primitive loss needs at least one primitive")
    if sdf is None:
        sdf = primitive_sdf_batch(prims, testing_points, samples_per_curve)
    return primitive_loss_from_sdf(sdf)


def loss_weight_reg(sketches: Iterable[SketchParams]) -> torch.Tensor:
    """Sum of (w - 1)^2 over both inner weights of every segment of every sketch"""
    total = torch.zeros((), dtype=DTYPE)
    for sketch in sketches:
        # Full per-segment weights, so C1 sketches count their derived w1 as well
        weights = build_polygon(sketch).weights
        total = total + torch.sum((weights - 1.0) ** 2)
    return total


def total_loss(recon, prim, weight_reg, lambda_p: float, lambda_w: float):
    return recon + lambda_p * prim + lambda_w * weight_reg
