"""
Extruded solids: a sketch lifted along the local z axis from z = 0 to z = h, then posed.

For a local point p' with sketch SDF s = SDF_s(p'_x, p'_y):
    inner = max(min(s, h - p'_z, p'_z), 0)
    outer = -|(min(h - p'_z, 0), min(p'_z, 0), min(s, 0))|
    SDF   = inner + outer            (positive inside)
At most one of the two terms is non-zero.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import torch
from django.conf import settings

from extrude_cad.exceptions import InvalidParameterError
from sdf2d.distance import Refinement, safe_norm, sdf_values
from sdf2d.sampling import SampledSketch, sample_sketch
from sketch.params import SketchParams
from sketch.tensors import DTYPE, as_tensor
from .pose import RigidPose, to_local

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtrusionParams:
    sketch: SketchParams
    pose: RigidPose
    height: torch.Tensor

    def __post_init__(self):
        height = as_tensor(self.height).reshape(())
        if not float(height) > 0:
            raise InvalidParameterError(f"Extrusion height must be positive, got {float(height)}")
        object.__setattr__(self, "height", height)

    def detach(self) -> "ExtrusionParams":
        return ExtrusionParams(self.sketch.detach(), self.pose.detach(), self.height.detach().clone())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sketch": self.sketch.to_dict(),
            "pose": self.pose.to_dict(),
            "height": float(self.height),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExtrusionParams":
        missing = {"sketch", "pose", "height"} - set(data)
        if missing:
            raise InvalidParameterError(f"Primitive document is missing fields: {sorted(missing)}")
        return cls(SketchParams.from_dict(data["sketch"]), RigidPose.from_dict(data["pose"]), data["height"])


def extrusion_sdf_terms(prim: ExtrusionParams, sketch_field: SampledSketch, points,
                        refine: Union[Refinement, str, None] = None,
                        method=None) -> Tuple[torch.Tensor, torch.Tensor]:
    """The interior and exterior terms of the extrusion SDF, each of shape (Q,)"""
    local = to_local(prim.pose, as_tensor(points).reshape(-1, 3))
    if local.shape[0] == 0:
        empty = torch.zeros(0, dtype=DTYPE)
        return empty, empty
    sketch_sdf, _ = sdf_values(sketch_field, local[:, :2], method, refine)
    z = local[:, 2]
    below_top = prim.height - z

    inner = torch.clamp(torch.minimum(torch.minimum(sketch_sdf, below_top), z), min=0.0)
    outside = torch.stack([
        torch.clamp(below_top, max=0.0),
        torch.clamp(z, max=0.0),
        torch.clamp(sketch_sdf, max=0.0),
    ], dim=-1)
    return inner, -safe_norm(outside)


def extrusion_sdf(prim: ExtrusionParams, sketch_field: SampledSketch, points,
                  refine: Union[Refinement, str, None] = None, method=None) -> torch.Tensor:
    """SDF of the posed extrusion at world points (Q, 3), shape (Q,)"""
    inner, outer = extrusion_sdf_terms(prim, sketch_field, points, refine, method)
    return inner + outer


def occupancy(sdf, eta) -> torch.Tensor:
    """Soft occupancy sigmoid(eta * sdf); increases with sdf"""
    if not float(eta) > 0:
        raise InvalidParameterError(f"Occupancy sharpness eta must be positive, got {float(eta)}")
    return torch.sigmoid(eta * as_tensor(sdf))


def sample_primitives(prims: Sequence[ExtrusionParams], samples_per_curve: Optional[int] = None) -> List[SampledSketch]:
    n = samples_per_curve or settings.SKETCH_SAMPLES_PER_CURVE
    return [sample_sketch(prim.sketch, n) for prim in prims]


def primitive_sdf_batch(prims: Sequence[ExtrusionParams], points, samples_per_curve: Optional[int] = None,
                        refine: Union[Refinement, str, None] = None,
                        sampled: Optional[Sequence[SampledSketch]] = None, method=None) -> torch.Tensor:
    """Extrusion SDF of every primitive at every point, shape (Q, K)"""
    start_time = time.time()
    points = as_tensor(points).reshape(-1, 3)
    if len(prims) == 0:
        return torch.zeros(points.shape[0], 0, dtype=DTYPE)
    if sampled is None:
        sampled = sample_primitives(prims, samples_per_curve)
    if len(sampled) != len(prims):
        raise InvalidParameterError("One sampled sketch per primitive is required")

    columns = [extrusion_sdf(prim, field, points, refine, method) for prim, field in zip(prims, sampled)]
    result = torch.stack(columns, dim=1)

    batch_time = time.time() - start_time
    if batch_time > 2.0:  # Only log if slow
        logger.info("SDF of %d primitives at %d points took %.2fs", len(prims), points.shape[0], batch_time)
    return result


def primitive_occupancy_batch(prims: Sequence[ExtrusionParams], points, eta,
                              samples_per_curve: Optional[int] = None,
                              refine: Union[Refinement, str, None] = None,
                              sampled: Optional[Sequence[SampledSketch]] = None) -> torch.Tensor:
    """Soft occupancy matrix O of shape (Q, K)"""
    return occupancy(primitive_sdf_batch(prims, points, samples_per_curve, refine, sampled), eta)


@dataclass(frozen=True)
class EtaSchedule:
    """eta(iteration) = min(eta0 * 2 ** (iteration // interval), eta_max); interval 0 keeps eta0"""
    eta0: float
    doubling_interval: int = 0
    eta_max: float = math.inf

    def __post_init__(self):
        if not self.eta0 > 0:
            raise InvalidParameterError(f"eta must be positive, got {self.eta0}")
        if self.doubling_interval < 0:
            raise InvalidParameterError("eta doubling interval must be >= 0")
        if self.eta_max < self.eta0:
            raise InvalidParameterError(f"eta_max {self.eta_max} is below eta {self.eta0}")

    def __call__(self, iteration: int) -> float:
        if self.doubling_interval == 0:
            return self.eta0
        doublings = iteration // self.doubling_interval
        # Past this many doublings the cap always applies
        if doublings >= 1024:
            return self.eta_max
        return min(self.eta0 * 2.0 ** doublings, self.eta_max)
