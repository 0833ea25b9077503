"""
Evenly sampled sketches with outward normals.

Each curve contributes the parameters t = i/n, i = 0..n-1; its end point is the next curve's
first sample. The normal of a counter-clockwise curve is its tangent rotated by 90 degrees
clockwise, N(t) = (y'(t), -x'(t)), which points outward.
"""
import logging
from dataclasses import dataclass
from typing import Tuple, Union

import torch

from extrude_cad.exceptions import InvalidParameterError
from sketch.families import SketchFamily, as_family
from sketch.params import SketchParams
from sketch.tensors import DTYPE

logger = logging.getLogger(__name__)

# Tangents shorter than this count as zero
_ZERO_TANGENT = 1e-14


@dataclass(frozen=True)
class SampledSketch:
    samples: torch.Tensor            # (N * n, 2)
    params_of_samples: torch.Tensor  # (N * n, 2): curve index, t
    normals: torch.Tensor            # (N * n, 2), unit length
    samples_per_curve: int
    n_curves: int

    def __len__(self) -> int:
        return self.samples.shape[0]

    def param_of(self, index: int) -> Tuple[int, float]:
        k, t = self.params_of_samples[index].tolist()
        return int(k), float(t)


def _rotate_clockwise(tangent: torch.Tensor) -> torch.Tensor:
    return torch.stack([tangent[..., 1], -tangent[..., 0]], dim=-1)


def _normalize(vectors: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Unit vectors and a mask of the entries that could be normalized"""
    length = torch.sqrt((vectors * vectors).sum(dim=-1))
    valid = length > _ZERO_TANGENT
    safe = torch.where(valid, length, torch.ones_like(length))
    return vectors / safe.unsqueeze(-1), valid


def sample_sketch(curve: Union[SketchParams, SketchFamily], n: int) -> SampledSketch:
    """Sample every curve at t = i/n and attach junction-averaged outward normals"""
    if n < 4:
        raise InvalidParameterError(f"Need at least 4 samples per curve, got {n}")

    family = as_family(curve)
    n_curves = family.n_curves
    t = torch.arange(n, dtype=DTYPE) / n

    points = family.points(t)
    normals, valid = _normalize(_rotate_clockwise(family.derivatives(t)))

    # One-sided normal arriving at each joint from the previous curve's end
    end_normals, end_valid = _normalize(_rotate_clockwise(family.derivatives(torch.ones(1, dtype=DTYPE))[:, 0]))
    arriving = torch.roll(end_normals, 1, dims=0)
    arriving_valid = torch.roll(end_valid, 1, dims=0)

    leaving = normals[:, 0]
    leaving_valid = valid[:, 0]
    summed = leaving * leaving_valid.unsqueeze(-1) + arriving * arriving_valid.unsqueeze(-1)
    joint, joint_valid = _normalize(summed)
    normals = torch.cat([joint.unsqueeze(1), normals[:, 1:]], dim=1)
    valid = torch.cat([joint_valid.unsqueeze(1), valid[:, 1:]], dim=1)

    samples = points.reshape(-1, 2)
    normals = normals.reshape(-1, 2)
    valid = valid.reshape(-1)

    if not bool(torch.all(valid)):
        normals = _fill_degenerate_normals(samples, normals, valid)

    curve_index = torch.arange(n_curves, dtype=DTYPE).repeat_interleave(n)
    params_of_samples = torch.stack([curve_index, t.repeat(n_curves)], dim=-1)
    return SampledSketch(samples, params_of_samples, normals, n, n_curves)


def _fill_degenerate_normals(samples: torch.Tensor, normals: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    """Replace normals of zero-tangent samples by the average of their neighbours"""
    logger.debug("Filling %d degenerate normals", int((~valid).sum()))
    masked = normals * valid.unsqueeze(-1)
    neighbours = torch.roll(masked, 1, dims=0) + torch.roll(masked, -1, dims=0)
    averaged, averaged_valid = _normalize(neighbours)

    # Last resort for isolated runs of degenerate samples: the radial direction (sketches are star-shaped)
    radial, _ = _normalize(samples)
    fallback = torch.where(averaged_valid.unsqueeze(-1), averaged, radial)
    return torch.where(valid.unsqueeze(-1), normals, fallback)
