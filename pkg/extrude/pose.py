"""Rigid poses from a unit quaternion (w, x, y, z) and a translation."""
import math
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import torch

from extrude_cad.exceptions import InvalidParameterError
from sketch.tensors import DTYPE, as_tensor, to_numpy


@dataclass(frozen=True)
class RigidPose:
    rotation: torch.Tensor
    translation: torch.Tensor

    def __post_init__(self):
        q = as_tensor(self.rotation).reshape(-1)
        t = as_tensor(self.translation).reshape(-1)
        if q.numel() != 4 or t.numel() != 3:
            raise InvalidParameterError("A pose needs a 4-component quaternion and a 3-component translation")
        norm = torch.sqrt((q * q).sum())
        if not math.isfinite(float(norm)) or float(norm) == 0.0:
            raise InvalidParameterError("Pose quaternion must be finite and non-zero")
        # Normalised inside the graph so raw quaternion values stay free fitting variables.
        # Constant unit quaternions are kept as given so serialized poses reload bit-exactly.
        if q.requires_grad or abs(float(norm) - 1.0) > 1e-12:
            q = q / norm
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(torch.tensor([1.0, 0.0, 0.0, 0.0], dtype=DTYPE), torch.zeros(3, dtype=DTYPE))

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle: float,
                        translation: Sequence[float] = (0.0, 0.0, 0.0)) -> "RigidPose":
        axis = as_tensor(axis).reshape(3)
        axis = axis / torch.linalg.norm(axis)
        half = angle / 2.0
        q = torch.cat([torch.tensor([math.cos(half)], dtype=DTYPE), math.sin(half) * axis])
        return cls(q, translation)

    def matrix(self) -> torch.Tensor:
        w, x, y, z = self.rotation
        return torch.stack([
            torch.stack([1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)]),
            torch.stack([2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)]),
            torch.stack([2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)]),
        ])

    def detach(self) -> "RigidPose":
        return RigidPose(self.rotation.detach().clone(), self.translation.detach().clone())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rotation": [float(v) for v in to_numpy(self.rotation)],
            "translation": [float(v) for v in to_numpy(self.translation)],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RigidPose":
        try:
            return cls(data["rotation"], data["translation"])
        except KeyError as exc:
            raise InvalidParameterError(f"Pose document is missing field {exc}")


def to_local(pose: RigidPose, points) -> torch.Tensor:
    """World points (..., 3) into the extrusion frame: R^T (p - t)"""
    points = as_tensor(points)
    return (points - pose.translation) @ pose.matrix()


def to_world(pose: RigidPose, points) -> torch.Tensor:
    """Extrusion-frame points (..., 3) into world coordinates: R p + t"""
    points = as_tensor(points)
    return points @ pose.matrix().T + pose.translation
