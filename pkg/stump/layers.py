"""
Three-layer CSG-Stump: complement, intersection and union of K primitive occupancies.

Per point, with primitive occupancies O_k:
    O_comp_k  = c_k (1 - O_k) + (1 - c_k) O_k
    O_inter_j = min_k 1 - s_kj (1 - O_comp_k)     (unselected primitives contribute 1)
    O_final   = max_j u_j O_inter_j               (unselected nodes contribute 0)
With binary parameters and binary O this is exactly boolean algebra. In hard mode a node that
selects no primitive is the empty set.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

import torch
from django.conf import settings

from extrude_cad.exceptions import InvalidParameterError
from sketch.tensors import DTYPE, as_tensor, to_numpy

logger = logging.getLogger(__name__)


class StumpMode(str, Enum):
    SOFT = "soft"
    HARD = "hard"


@dataclass(frozen=True)
class StumpParams:
    complement: torch.Tensor    # (K,)
    inter_select: torch.Tensor  # (K, J)
    union_select: torch.Tensor  # (J,)
    mode: StumpMode = StumpMode.SOFT

    def __post_init__(self):
        complement = as_tensor(self.complement).reshape(-1)
        union_select = as_tensor(self.union_select).reshape(-1)
        k, j = complement.numel(), union_select.numel()
        inter_select = as_tensor(self.inter_select)
        if inter_select.numel() != k * j:
            raise InvalidParameterError(f"inter_select must hold {k} x {j} entries, got {inter_select.numel()}")
        inter_select = inter_select.reshape(k, j)
        mode = StumpMode(self.mode)

        for name, values in (("complement", complement), ("inter_select", inter_select),
                             ("union_select", union_select)):
            if values.numel() == 0:
                continue
            if mode == StumpMode.HARD and not bool(torch.all((values == 0) | (values == 1))):
                raise InvalidParameterError(f"Hard stump {name} must be binary")
            if not bool(torch.all((values >= 0) & (values <= 1))):
                raise InvalidParameterError(f"Stump {name} entries must lie in [0, 1]")

        object.__setattr__(self, "complement", complement)
        object.__setattr__(self, "inter_select", inter_select)
        object.__setattr__(self, "union_select", union_select)
        object.__setattr__(self, "mode", mode)

    @property
    def n_primitives(self) -> int:
        return self.complement.numel()

    @property
    def n_nodes(self) -> int:
        return self.union_select.numel()

    @property
    def is_hard(self) -> bool:
        return self.mode == StumpMode.HARD

    @classmethod
    def from_unconstrained(cls, raw_complement, raw_inter_select, raw_union_select) -> "StumpParams":
        """Soft parameters: every raw value through the logistic function"""
        return cls(
            torch.sigmoid(as_tensor(raw_complement)),
            torch.sigmoid(as_tensor(raw_inter_select)),
            torch.sigmoid(as_tensor(raw_union_select)),
            StumpMode.SOFT,
        )

    def detach(self) -> "StumpParams":
        return StumpParams(self.complement.detach().clone(), self.inter_select.detach().clone(),
                           self.union_select.detach().clone(), self.mode)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value,
            "complement": [float(v) for v in to_numpy(self.complement)],
            "inter_select": [[float(v) for v in row] for row in to_numpy(self.inter_select)],
            "union_select": [float(v) for v in to_numpy(self.union_select)],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StumpParams":
        missing = {"mode", "complement", "inter_select", "union_select"} - set(data)
        if missing:
            raise InvalidParameterError(f"Stump document is missing fields: {sorted(missing)}")
        try:
            mode = StumpMode(data["mode"])
        except ValueError:
            raise InvalidParameterError(f"Unknown stump mode: {data['mode']!r}")
        k, j = len(data["complement"]), len(data["union_select"])
        if len(data["inter_select"]) != k or any(len(row) != j for row in data["inter_select"]):
            raise InvalidParameterError(f"inter_select must be a {k} x {j} matrix")
        inter_select = torch.tensor(data["inter_select"], dtype=DTYPE).reshape(k, j)
        return cls(data["complement"], inter_select, data["union_select"], mode)


def evaluate(stump: StumpParams, occupancies) -> torch.Tensor:
    """Final occupancy (Q,) from the primitive occupancy matrix (Q, K)"""
    occupancies = as_tensor(occupancies)
    if occupancies.dim() != 2 or occupancies.shape[1] != stump.n_primitives:
        raise InvalidParameterError(
            f"Occupancy matrix of shape {tuple(occupancies.shape)} does not match "
            f"{stump.n_primitives} primitives"
        )
    q = occupancies.shape[0]
    c = stump.complement
    complemented = c * (1.0 - occupancies) + (1.0 - c) * occupancies

    if stump.n_primitives:
        blended = 1.0 - stump.inter_select.unsqueeze(0) * (1.0 - complemented.unsqueeze(-1))
        intersections = blended.min(dim=1).values
    else:
        intersections = torch.ones(q, stump.n_nodes, dtype=DTYPE)

    if stump.is_hard:
        active = stump.inter_select.sum(dim=0) > 0
        intersections = torch.where(active, intersections, torch.zeros_like(intersections))

    if stump.n_nodes == 0:
        return torch.zeros(q, dtype=DTYPE)
    return (stump.union_select * intersections).max(dim=1).values


def binarize(stump: StumpParams, threshold: Optional[float] = None) -> StumpParams:
    """Hard stump: every entry >= threshold becomes 1, the rest 0"""
    threshold = settings.STUMP_THRESHOLD if threshold is None else threshold
    if not 0.0 < threshold < 1.0:
        raise InvalidParameterError(f"Binarization threshold must lie in (0, 1), got {threshold}")

    def hard(values: torch.Tensor) -> torch.Tensor:
        return (values.detach() >= threshold).to(DTYPE)

    result = StumpParams(hard(stump.complement), hard(stump.inter_select), hard(stump.union_select),
                         StumpMode.HARD)
    logger.debug("Binarized stump at %.3f: %d active nodes", threshold, int(result.union_select.sum()))
    return result
