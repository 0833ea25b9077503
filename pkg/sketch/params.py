"""
Sketch parameter containers.

A sketch is a closed loop of N rational cubic Bezier segments around the origin. Only the
radial coordinates and the two inner weights of each segment are free; polar angles are
derived (see rbezier.derive_angles).

Free-variable layout
    C0: radii = [rho0^0, rho1^0, rho2^0, rho0^1, ...]   (3N)
        weights = [w1^0, w2^0, w1^1, ...]                (2N)
    C1: radii = [rho1^0, rho2^0, rho1^1, ...]            (2N)
        weights = [w2^0, w2^1, ...]                      (N)
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict

import torch

from extrude_cad.exceptions import InvalidParameterError
from .tensors import as_tensor, to_numpy


class ContinuityMode(str, Enum):
    C0 = "C0"
    C1 = "C1"


@dataclass(frozen=True)
class SketchParams:
    """Radial coordinates and rational weights of one closed profile curve"""
    n_curves: int
    radii: torch.Tensor
    weights: torch.Tensor
    continuity_mode: ContinuityMode = ContinuityMode.C0
    start_angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "continuity_mode", ContinuityMode(self.continuity_mode))
        object.__setattr__(self, "radii", as_tensor(self.radii).reshape(-1))
        object.__setattr__(self, "weights", as_tensor(self.weights).reshape(-1))
        object.__setattr__(self, "start_angle", float(self.start_angle))

        if int(self.n_curves) != self.n_curves or self.n_curves < 2:
            raise InvalidParameterError(f"A sketch needs at least 2 curves, got {self.n_curves}")
        object.__setattr__(self, "n_curves", int(self.n_curves))

        expected_radii, expected_weights = self.free_variable_counts(self.n_curves, self.continuity_mode)
        if self.radii.numel() != expected_radii:
            raise InvalidParameterError(
                f"{self.continuity_mode.value} sketch with {self.n_curves} curves needs "
                f"{expected_radii} radii, got {self.radii.numel()}"
            )
        if self.weights.numel() != expected_weights:
            raise InvalidParameterError(
                f"{self.continuity_mode.value} sketch with {self.n_curves} curves needs "
                f"{expected_weights} weights, got {self.weights.numel()}"
            )
        if not bool(torch.all(self.radii > 0)):
            raise InvalidParameterError("All radii must be positive")
        if not bool(torch.all(self.weights > 0)):
            raise InvalidParameterError("All weights must be positive")

    @staticmethod
    def free_variable_counts(n_curves: int, mode: ContinuityMode):
        """(number of free radii, number of free weights) for a sketch layout"""
        if ContinuityMode(mode) == ContinuityMode.C1:
            return 2 * n_curves, n_curves
        return 3 * n_curves, 2 * n_curves

    @classmethod
    def from_unconstrained(cls, raw_radii, raw_weights, n_curves: int,
                           continuity_mode: ContinuityMode = ContinuityMode.C0,
                           start_angle: float = 0.0) -> "SketchParams":
        """Map unconstrained fitting variables through exp so radii and weights stay positive"""
        return cls(
            n_curves=n_curves,
            radii=torch.exp(as_tensor(raw_radii)),
            weights=torch.exp(as_tensor(raw_weights)),
            continuity_mode=continuity_mode,
            start_angle=start_angle,
        )

    @classmethod
    def unit_start(cls, n_curves: int = 4, continuity_mode: ContinuityMode = ContinuityMode.C0,
                   start_angle: float = 0.0) -> "SketchParams":
        """The fitting initialisation: every unconstrained variable at 0, i.e. radii and weights 1"""
        n_radii, n_weights = cls.free_variable_counts(n_curves, continuity_mode)
        return cls.from_unconstrained(
            torch.zeros(n_radii, dtype=torch.float64),
            torch.zeros(n_weights, dtype=torch.float64),
            n_curves, continuity_mode, start_angle,
        )

    @property
    def num_fitting_variables(self) -> int:
        return self.radii.numel() + self.weights.numel()

    def detach(self) -> "SketchParams":
        return SketchParams(self.n_curves, self.radii.detach().clone(), self.weights.detach().clone(),
                            self.continuity_mode, self.start_angle)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_curves": self.n_curves,
            "mode": self.continuity_mode.value,
            "radii": [float(v) for v in to_numpy(self.radii)],
            "weights": [float(v) for v in to_numpy(self.weights)],
            "start_angle": self.start_angle,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SketchParams":
        missing = {"n_curves", "mode", "radii", "weights"} - set(data)
        if missing:
            raise InvalidParameterError(f"Sketch document is missing fields: {sorted(missing)}")
        try:
            mode = ContinuityMode(data["mode"])
        except ValueError:
            raise InvalidParameterError(f"Unknown continuity mode: {data['mode']!r}")
        return cls(
            n_curves=data["n_curves"],
            radii=data["radii"],
            weights=data["weights"],
            continuity_mode=mode,
            start_angle=data.get("start_angle", 0.0),
        )


@dataclass(frozen=True)
class ControlPolygon:
    """Control points (N, 4, 2) and full weight rows (N, 2) of every segment"""
    points: torch.Tensor
    weights: torch.Tensor

    @property
    def n_curves(self) -> int:
        return self.points.shape[0]

    def ordered_points(self) -> torch.Tensor:
        """Traversal order P0^0, P1^0, P2^0, P0^1, ... (the shared P3 is not repeated)"""
        return self.points[:, :3, :].reshape(-1, 2)

    def full_weights(self) -> torch.Tensor:
        """Per-control-point weights [1, w1, w2, 1] of every segment, shape (N, 4)"""
        ones = torch.ones(self.n_curves, 1, dtype=self.weights.dtype)
        return torch.cat([ones, self.weights, ones], dim=1)
