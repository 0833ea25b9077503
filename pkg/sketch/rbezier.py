"""
Rational cubic Bezier sketch: angle layout, control polygon and curve evaluation.

Segment k is
    C_k(t) = sum_i w_i P_i B_i(t) / sum_i w_i B_i(t),   w_0 = w_3 = 1,
with Bernstein basis B_i(t) = C(3, i) (1 - t)^(3 - i) t^i. Control points sit on fixed polar
angles so that only radii and the inner weights are free.
"""
import math
from typing import Sequence, Union

import torch

from extrude_cad.exceptions import DomainError, InvalidParameterError
from .params import ContinuityMode, ControlPolygon, SketchParams
from .tensors import DTYPE, as_tensor

Scalar = Union[float, torch.Tensor]


def inner_angle(n_curves: int) -> float:
    """Offset theta between a segment's end point and its neighbouring inner control point"""
    quarter = 2.0 * math.pi / (4 * n_curves)
    return quarter + math.atan(math.tan(quarter) / 3.0)


def circle_weight(n_curves: int) -> float:
    """Inner weight for which the recipe radii produce an exact circular arc"""
    return (1.0 + 2.0 * math.cos(math.pi / n_curves)) / 3.0


def derive_angles(n_curves: int, start_angle: float = 0.0) -> torch.Tensor:
    """
    Polar angles (alpha0, alpha1, alpha2, alpha3) of every segment, shape (N, 4).
    """
    if n_curves < 2:
        raise InvalidParameterError(f"A sketch needs at least 2 curves, got {n_curves}")

    theta = inner_angle(n_curves)
    step = 2.0 * math.pi / n_curves
    rows = []
    for k in range(n_curves):
        alpha0 = start_angle + k * step
        alpha3 = alpha0 + step
        rows.append([alpha0, alpha0 + theta, alpha3 - theta, alpha3])
    return torch.tensor(rows, dtype=DTYPE)


def _unit(angles: torch.Tensor) -> torch.Tensor:
    return torch.stack([torch.cos(angles), torch.sin(angles)], dim=-1)


def build_polygon(params: SketchParams) -> ControlPolygon:
    """Place the control points of every segment and resolve the joint points"""
    n = params.n_curves
    angles = derive_angles(n, params.start_angle)

    if params.continuity_mode == ContinuityMode.C0:
        radii = params.radii.reshape(n, 3)
        p0 = radii[:, 0:1] * _unit(angles[:, 0])
        p1 = radii[:, 1:2] * _unit(angles[:, 1])
        p2 = radii[:, 2:3] * _unit(angles[:, 2])
        weights = params.weights.reshape(n, 2)
    else:
        radii = params.radii.reshape(n, 2)
        rho1, rho2 = radii[:, 0], radii[:, 1]
        p1 = rho1.unsqueeze(-1) * _unit(angles[:, 1])
        p2 = rho2.unsqueeze(-1) * _unit(angles[:, 2])

        # Joint k sits between P2 of segment k-1 and P1 of segment k
        rho2_prev = torch.roll(rho2, 1, dims=0)
        p2_prev = torch.roll(p2, 1, dims=0)
        p0 = (rho2_prev.unsqueeze(-1) * p1 + rho1.unsqueeze(-1) * p2_prev) / (rho2_prev + rho1).unsqueeze(-1)

        w2 = params.weights.reshape(n)
        w1 = torch.roll(w2, 1, dims=0) * rho2_prev / rho1
        weights = torch.stack([w1, w2], dim=1)

    # P3 of segment k is the very same point as P0 of segment k+1
    p3 = torch.roll(p0, -1, dims=0)
    points = torch.stack([p0, p1, p2, p3], dim=1)
    return ControlPolygon(points=points, weights=weights)


def bernstein(t: torch.Tensor) -> torch.Tensor:
    """Cubic Bernstein basis, shape (n, 4)"""
    s = 1.0 - t
    return torch.stack([s ** 3, 3.0 * s ** 2 * t, 3.0 * s * t ** 2, t ** 3], dim=-1)


def bernstein_derivative(t: torch.Tensor) -> torch.Tensor:
    s = 1.0 - t
    return torch.stack([
        -3.0 * s ** 2,
        3.0 * s ** 2 - 6.0 * s * t,
        6.0 * s * t - 3.0 * t ** 2,
        3.0 * t ** 2,
    ], dim=-1)


def polygon_points(polygon: ControlPolygon, t: torch.Tensor) -> torch.Tensor:
    """Evaluate every segment at every t, shape (N, n, 2)"""
    basis = bernstein(t)
    w = polygon.full_weights()
    numerator = torch.einsum("ni,ki,kid->knd", basis, w, polygon.points)
    denominator = torch.einsum("ni,ki->kn", basis, w)
    return numerator / denominator.unsqueeze(-1)


def polygon_derivatives(polygon: ControlPolygon, t: torch.Tensor) -> torch.Tensor:
    """dC/dt of every segment at every t by the quotient rule, shape (N, n, 2)"""
    basis = bernstein(t)
    dbasis = bernstein_derivative(t)
    w = polygon.full_weights()
    numerator = torch.einsum("ni,ki,kid->knd", basis, w, polygon.points)
    dnumerator = torch.einsum("ni,ki,kid->knd", dbasis, w, polygon.points)
    denominator = torch.einsum("ni,ki->kn", basis, w).unsqueeze(-1)
    ddenominator = torch.einsum("ni,ki->kn", dbasis, w).unsqueeze(-1)
    return (dnumerator * denominator - numerator * ddenominator) / denominator ** 2


def _check_query(params: SketchParams, k: int, t: Scalar) -> torch.Tensor:
    if not 0 <= k < params.n_curves:
        raise DomainError(f"Curve index {k} outside [0, {params.n_curves})")
    t = as_tensor(t)
    if bool(torch.any((t < 0.0) | (t > 1.0))):
        raise DomainError("Curve parameter t must lie in [0, 1]")
    return t


def eval_curve(params: SketchParams, k: int, t: Scalar) -> torch.Tensor:
    """Point C_k(t); a scalar t gives shape (2,), a vector of t gives (n, 2)"""
    t = _check_query(params, k, t)
    polygon = build_polygon(params)
    points = polygon_points(polygon, t.reshape(-1))[k]
    return points.reshape(t.shape + (2,))


def eval_derivative(params: SketchParams, k: int, t: Scalar) -> torch.Tensor:
    """Derivative C'_k(t) with the same shape conventions as eval_curve"""
    t = _check_query(params, k, t)
    polygon = build_polygon(params)
    derivatives = polygon_derivatives(polygon, t.reshape(-1))[k]
    return derivatives.reshape(t.shape + (2,))


def circle_sketch(n_curves: int = 4, radius: float = 1.0, start_angle: float = 0.0,
                  continuity_mode: ContinuityMode = ContinuityMode.C0) -> SketchParams:
    """Parameters whose curve is exactly the origin-centred circle of the given radius"""
    if radius <= 0:
        raise InvalidParameterError(f"Circle radius must be positive, got {radius}")
    inner = radius / math.cos(inner_angle(n_curves))
    w = circle_weight(n_curves)
    if ContinuityMode(continuity_mode) == ContinuityMode.C1:
        radii = [inner, inner] * n_curves
        weights = [w] * n_curves
    else:
        radii = [radius, inner, inner] * n_curves
        weights = [w, w] * n_curves
    return SketchParams(n_curves, radii, weights, continuity_mode, start_angle)


def _chord_radius(a: torch.Tensor, b: torch.Tensor, angle: float) -> torch.Tensor:
    """Distance from the origin along the ray at `angle` to the line through a and b"""
    direction = torch.tensor([math.cos(angle), math.sin(angle)], dtype=DTYPE)
    edge = b - a
    cross_a = a[0] * edge[1] - a[1] * edge[0]
    cross_u = direction[0] * edge[1] - direction[1] * edge[0]
    return cross_a / cross_u


def polygon_sketch(vertex_radii: Sequence[float], start_angle: float = 0.0) -> SketchParams:
    """
    A polygonal profile: one vertex per joint, inner control points on the chords, unit weights.

    An axis-aligned square of half-width a is polygon_sketch([a * sqrt(2)] * 4, pi / 4).
    """
    vertex_radii = as_tensor(vertex_radii).reshape(-1)
    n = vertex_radii.numel()
    angles = derive_angles(n, start_angle)
    joints = vertex_radii.unsqueeze(-1) * _unit(angles[:, 0])

    radii = []
    for k in range(n):
        a, b = joints[k], joints[(k + 1) % n]
        radii.extend([
            vertex_radii[k],
            _chord_radius(a, b, float(angles[k, 1])),
            _chord_radius(a, b, float(angles[k, 2])),
        ])
    return SketchParams(n, torch.stack(radii), torch.ones(2 * n, dtype=DTYPE),
                        ContinuityMode.C0, start_angle)
