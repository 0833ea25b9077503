"""A complete shape: K posed extrusions combined by a stump."""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
import torch

from extrude.solid import ExtrusionParams, occupancy, primitive_sdf_batch
from extrude_cad.exceptions import InvalidParameterError
from sdf2d.distance import Refinement
from sketch.tensors import DTYPE
from .csg import CsgNode, extract_csg
from .layers import StumpParams, binarize, evaluate

MODEL_VERSION = 1


@dataclass(frozen=True)
class ShapeModel:
    primitives: Tuple[ExtrusionParams, ...]
    stump: StumpParams
    eta: float
    # bbox_lower / bbox_upper of the unpadded target plus free-form run information
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "eta", float(self.eta))
        if len(self.primitives) != self.stump.n_primitives:
            raise InvalidParameterError(
                f"Stump expects {self.stump.n_primitives} primitives, model has {len(self.primitives)}"
            )
        if not self.eta > 0:
            raise InvalidParameterError(f"Model eta must be positive, got {self.eta}")

    @property
    def is_hard(self) -> bool:
        return self.stump.is_hard

    def bbox(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        if "bbox_lower" not in self.metadata or "bbox_upper" not in self.metadata:
            return None
        return np.asarray(self.metadata["bbox_lower"], dtype=np.float64), \
            np.asarray(self.metadata["bbox_upper"], dtype=np.float64)

    def binarized(self, threshold: Optional[float] = None) -> "ShapeModel":
        return ShapeModel(self.primitives, binarize(self.stump, threshold), self.eta, dict(self.metadata))

    def csg(self) -> CsgNode:
        return extract_csg(self.stump, self.primitives)

    def detach(self) -> "ShapeModel":
        return ShapeModel(tuple(p.detach() for p in self.primitives), self.stump.detach(), self.eta,
                          dict(self.metadata))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": MODEL_VERSION,
            "eta": self.eta,
            "metadata": self.metadata,
            "primitives": [prim.to_dict() for prim in self.primitives],
            "stump": self.stump.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ShapeModel":
        missing = {"eta", "primitives", "stump"} - set(data)
        if missing:
            raise InvalidParameterError(f"Model document is missing fields: {sorted(missing)}")
        if data.get("version", MODEL_VERSION) != MODEL_VERSION:
            raise InvalidParameterError(f"Unsupported model version {data['version']}")
        return cls(
            primitives=tuple(ExtrusionParams.from_dict(p) for p in data["primitives"]),
            stump=StumpParams.from_dict(data["stump"]),
            eta=data["eta"],
            metadata=dict(data.get("metadata", {})),
        )


def primitive_matrix(model: ShapeModel, points, hard: bool, samples_per_curve: Optional[int] = None,
                     refine: Union[Refinement, str, None] = None) -> torch.Tensor:
    """Primitive occupancies (Q, K): sigmoid(eta * sdf), or sdf >= 0 when hard"""
    sdf = primitive_sdf_batch(model.primitives, points, samples_per_curve, refine)
    if hard:
        return (sdf >= 0).to(DTYPE)
    return occupancy(sdf, model.eta)


def model_occupancy(model: ShapeModel, points, hard: Optional[bool] = None,
                    samples_per_curve: Optional[int] = None,
                    refine: Union[Refinement, str, None] = None) -> torch.Tensor:
    """
    Final occupancy of the model at world points (Q, 3).

    hard=None follows the model's stump mode. A hard evaluation of a soft model binarizes its
    stump with the configured threshold.
    """
    hard = model.is_hard if hard is None else hard
    stump = model.stump
    if hard and not stump.is_hard:
        stump = binarize(stump)
    return evaluate(stump, primitive_matrix(model, points, hard, samples_per_curve, refine))
