"""
Closed parametric curve families understood by the SDF sampler.

A family is a loop of `n_curves` segments, each parameterised over t in [0, 1], traced
counter-clockwise. The sampler only needs two hooks evaluated on a shared t-vector:
`points(t)` and `derivatives(t)`, both of shape (n_curves, len(t), 2).
"""
import math
from typing import Protocol, Union, runtime_checkable

import torch

from extrude_cad.exceptions import InvalidParameterError
from .params import SketchParams
from .rbezier import build_polygon, polygon_derivatives, polygon_points
from .tensors import as_tensor


@runtime_checkable
class SketchFamily(Protocol):
    n_curves: int

    def points(self, t: torch.Tensor) -> torch.Tensor:
        ...

    def derivatives(self, t: torch.Tensor) -> torch.Tensor:
        ...


class RBezierCurve:
    """Rational Bezier sketch adapter; the control polygon is built once"""

    def __init__(self, params: SketchParams):
        self.params = params
        self.polygon = build_polygon(params)
        self.n_curves = params.n_curves

    def points(self, t: torch.Tensor) -> torch.Tensor:
        return polygon_points(self.polygon, t)

    def derivatives(self, t: torch.Tensor) -> torch.Tensor:
        return polygon_derivatives(self.polygon, t)


class PolygonCurve:
    """Closed polygon, one straight segment per edge (vertices in counter-clockwise order)"""

    def __init__(self, vertices):
        self.vertices = as_tensor(vertices).reshape(-1, 2)
        if self.vertices.shape[0] < 3:
            raise InvalidParameterError("A polygon needs at least 3 vertices")
        self.n_curves = self.vertices.shape[0]

    def _edges(self):
        start = self.vertices
        end = torch.roll(self.vertices, -1, dims=0)
        return start, end - start

    def points(self, t: torch.Tensor) -> torch.Tensor:
        start, edge = self._edges()
        return start.unsqueeze(1) + t.reshape(1, -1, 1) * edge.unsqueeze(1)

    def derivatives(self, t: torch.Tensor) -> torch.Tensor:
        _, edge = self._edges()
        return edge.unsqueeze(1).expand(-1, t.numel(), -1)


class EllipseCurve:
    """Axis-aligned ellipse split into equal-angle arcs"""

    def __init__(self, semi_x: float, semi_y: float, n_curves: int = 4):
        if semi_x <= 0 or semi_y <= 0:
            raise InvalidParameterError("Ellipse semi-axes must be positive")
        self.semi_x = float(semi_x)
        self.semi_y = float(semi_y)
        self.n_curves = n_curves

    def _phase(self, t: torch.Tensor) -> torch.Tensor:
        k = torch.arange(self.n_curves, dtype=t.dtype).unsqueeze(1)
        return 2.0 * math.pi * (k + t.reshape(1, -1)) / self.n_curves

    def points(self, t: torch.Tensor) -> torch.Tensor:
        phi = self._phase(t)
        return torch.stack([self.semi_x * torch.cos(phi), self.semi_y * torch.sin(phi)], dim=-1)

    def derivatives(self, t: torch.Tensor) -> torch.Tensor:
        phi = self._phase(t)
        speed = 2.0 * math.pi / self.n_curves
        return speed * torch.stack([-self.semi_x * torch.sin(phi), self.semi_y * torch.cos(phi)], dim=-1)


def as_family(curve: Union[SketchParams, SketchFamily]) -> SketchFamily:
    if isinstance(curve, SketchParams):
        return RBezierCurve(curve)
    if isinstance(curve, SketchFamily):
        return curve
    raise InvalidParameterError(f"Not a sketch curve: {type(curve).__name__}")
