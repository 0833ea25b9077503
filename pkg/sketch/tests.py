import math

import numpy as np
import torch
from django.test import SimpleTestCase

from extrude_cad.exceptions import DomainError, InvalidParameterError
from .families import EllipseCurve, PolygonCurve, RBezierCurve, as_family
from .params import ContinuityMode, SketchParams
from .rbezier import (
    build_polygon,
    circle_sketch,
    circle_weight,
    derive_angles,
    eval_curve,
    eval_derivative,
    inner_angle,
    polygon_points,
    polygon_sketch,
)


def random_sketch(rng: np.random.Generator, n_curves: int, mode=ContinuityMode.C0) -> SketchParams:
    n_radii, n_weights = SketchParams.free_variable_counts(n_curves, mode)
    return SketchParams.from_unconstrained(
        rng.uniform(-1.0, 1.0, n_radii),
        rng.uniform(-1.0, 1.0, n_weights),
        n_curves,
        mode,
        start_angle=rng.uniform(-math.pi, math.pi),
    )


def sampled_loop(params: SketchParams, per_curve: int) -> np.ndarray:
    t = torch.arange(per_curve, dtype=torch.float64) / per_curve
    points = polygon_points(build_polygon(params), t)
    return points.reshape(-1, 2).numpy()


class DeriveAnglesTests(SimpleTestCase):
    def test_four_curves_from_zero(self):
        angles = derive_angles(4, 0.0)
        self.assertAlmostEqual(inner_angle(4), 0.529902, places=5)
        expected = [0.0, 0.529902, 1.040894, 1.570796]
        for got, want in zip(angles[0].tolist(), expected):
            self.assertAlmostEqual(got, want, places=5)

    def test_two_curves_end_at_pi(self):
        self.assertAlmostEqual(float(derive_angles(2)[0, 3]), math.pi, places=15)

    def test_uniform_spacing_with_start_angle(self):
        angles = derive_angles(8, math.pi / 8)
        self.assertAlmostEqual(float(angles[0, 0]), math.pi / 8, places=15)
        self.assertAlmostEqual(float(angles[1, 0]), math.pi / 8 + math.pi / 4, places=14)

    def test_full_sweep_is_two_pi(self):
        angles = derive_angles(6, 0.3)
        self.assertAlmostEqual(float(angles[-1, 3] - angles[0, 0]), 2 * math.pi, places=12)

    def test_rejects_single_curve(self):
        with self.assertRaises(InvalidParameterError):
            derive_angles(1)


class SketchParamsTests(SimpleTestCase):
    def test_degrees_of_freedom(self):
        self.assertEqual(SketchParams.unit_start(5).num_fitting_variables, 5 * 5)
        self.assertEqual(SketchParams.unit_start(5, ContinuityMode.C1).num_fitting_variables, 3 * 5)

    def test_unit_start_maps_zero_to_one(self):
        params = SketchParams.unit_start(4)
        self.assertTrue(torch.all(params.radii == 1.0))
        self.assertTrue(torch.all(params.weights == 1.0))

    def test_rejects_non_positive_values(self):
        with self.assertRaises(InvalidParameterError):
            SketchParams(4, [1.0] * 11 + [0.0], [1.0] * 8)
        with self.assertRaises(InvalidParameterError):
            SketchParams(4, [1.0] * 12, [1.0] * 7 + [-2.0])

    def test_rejects_wrong_layout(self):
        with self.assertRaises(InvalidParameterError):
            SketchParams(4, [1.0] * 12, [1.0] * 8, ContinuityMode.C1)

    def test_dict_document(self):
        params = random_sketch(np.random.default_rng(3), 5, ContinuityMode.C1)
        restored = SketchParams.from_dict(params.to_dict())
        self.assertEqual(restored.continuity_mode, ContinuityMode.C1)
        self.assertTrue(torch.equal(restored.radii, params.radii))
        self.assertTrue(torch.equal(restored.weights, params.weights))
        self.assertEqual(restored.start_angle, params.start_angle)

    def test_dict_document_missing_field(self):
        with self.assertRaises(InvalidParameterError):
            SketchParams.from_dict({"n_curves": 4, "mode": "C0", "radii": [1.0] * 12})


class BuildPolygonTests(SimpleTestCase):
    def test_circle_recipe_points(self):
        polygon = build_polygon(circle_sketch(4, 1.0))
        self.assertTrue(torch.allclose(polygon.points[0, 0], torch.tensor([1.0, 0.0], dtype=torch.float64)))
        self.assertAlmostEqual(float(torch.linalg.norm(polygon.points[0, 1])), 1.158941, places=5)

    def test_closure_is_exact(self):
        rng = np.random.default_rng(0)
        for mode in ContinuityMode:
            polygon = build_polygon(random_sketch(rng, 6, mode))
            for k in range(6):
                self.assertTrue(torch.equal(polygon.points[k, 3], polygon.points[(k + 1) % 6, 0]))

    def test_c1_symmetric_joints(self):
        r, n = 1.7, 5
        params = SketchParams(n, [r] * (2 * n), [0.9] * n, ContinuityMode.C1)
        polygon = build_polygon(params)
        angles = derive_angles(n)
        expected_radius = r * math.cos(inner_angle(n))
        for k in range(n):
            joint = polygon.points[k, 3]
            self.assertAlmostEqual(float(torch.linalg.norm(joint)), expected_radius, places=12)
            bisector = torch.stack([torch.cos(angles[k, 3]), torch.sin(angles[k, 3])])
            self.assertTrue(torch.allclose(joint / torch.linalg.norm(joint), bisector, atol=1e-12))

    def test_polygon_angles_non_decreasing(self):
        rng = np.random.default_rng(1)
        for n in range(2, 9):
            for mode in ContinuityMode:
                params = random_sketch(rng, n, mode)
                points = build_polygon(params).ordered_points().numpy()
                angles = np.unwrap(np.arctan2(points[:, 1], points[:, 0]))
                self.assertTrue(np.all(np.diff(angles) >= -1e-12))


class EvalCurveTests(SimpleTestCase):
    def test_endpoints_interpolate(self):
        params = random_sketch(np.random.default_rng(2), 4)
        polygon = build_polygon(params)
        for k in range(4):
            self.assertTrue(torch.equal(eval_curve(params, k, 0.0), polygon.points[k, 0]))
            self.assertTrue(torch.equal(eval_curve(params, k, 1.0), polygon.points[k, 3]))

    def test_circle_recovery(self):
        t = torch.linspace(0.0, 1.0, 10_000, dtype=torch.float64)
        for n in (3, 4, 6, 8):
            for mode in ContinuityMode:
                params = circle_sketch(n, 2.5, start_angle=0.4, continuity_mode=mode)
                for k in range(n):
                    radius = torch.linalg.norm(eval_curve(params, k, t), dim=-1)
                    self.assertLessEqual(float(torch.max(torch.abs(radius - 2.5))), 1e-9 * 2.5)

    def test_circle_weight_value(self):
        self.assertAlmostEqual(circle_weight(4), 0.804738, places=6)

    def test_collinear_controls_stay_on_line(self):
        params = polygon_sketch([math.sqrt(2.0)] * 4, math.pi / 4)
        t = torch.linspace(0.0, 1.0, 101, dtype=torch.float64)
        # Segment 0 runs from (1, 1) to (-1, 1)
        self.assertTrue(torch.allclose(eval_curve(params, 0, t)[:, 1], torch.ones(101, dtype=torch.float64)))

    def test_parameter_outside_unit_interval(self):
        params = SketchParams.unit_start(4)
        with self.assertRaises(DomainError):
            eval_curve(params, 0, 1.5)
        with self.assertRaises(DomainError):
            eval_derivative(params, 0, -0.1)
        with self.assertRaises(DomainError):
            eval_curve(params, 4, 0.5)

    def test_star_shaped(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = int(rng.integers(2, 9))
            mode = ContinuityMode.C1 if rng.random() < 0.5 else ContinuityMode.C0
            loop = sampled_loop(random_sketch(rng, n, mode), 64)

            closed = np.vstack([loop, loop[:1]])
            angles = np.unwrap(np.arctan2(closed[:, 1], closed[:, 0]))
            self.assertTrue(np.all(np.diff(angles) >= -1e-12))
            self.assertAlmostEqual(angles[-1] - angles[0], 2 * math.pi, delta=1e-9)

            phi = rng.uniform(0.0, 2 * math.pi)
            self.assertEqual(ray_crossings(loop, phi), 1)


def ray_crossings(loop: np.ndarray, phi: float) -> int:
    """Number of polyline edges crossed by the ray from the origin at angle phi"""
    direction = np.array([math.cos(phi), math.sin(phi)])
    a = loop
    b = np.roll(loop, -1, axis=0)
    edge = b - a
    denom = direction[0] * edge[:, 1] - direction[1] * edge[:, 0]
    valid = np.abs(denom) > 1e-15
    # Solve a + s * edge = r * direction
    s = (direction[1] * a[:, 0] - direction[0] * a[:, 1])[valid] / denom[valid]
    r = (a[:, 0] * edge[:, 1] - a[:, 1] * edge[:, 0])[valid] / denom[valid]
    return int(np.sum((s >= 0.0) & (s < 1.0) & (r > 0.0)))


class EvalDerivativeTests(SimpleTestCase):
    def test_endpoint_closed_forms(self):
        params = random_sketch(np.random.default_rng(4), 5)
        polygon = build_polygon(params)
        for k in range(5):
            p, w = polygon.points[k], polygon.weights[k]
            self.assertTrue(torch.allclose(eval_derivative(params, k, 1.0), 3 * w[1] * (p[3] - p[2]), atol=1e-12))
            self.assertTrue(torch.allclose(eval_derivative(params, k, 0.0), 3 * w[0] * (p[1] - p[0]), atol=1e-12))

    def test_matches_finite_differences(self):
        params = random_sketch(np.random.default_rng(5), 4)
        step = 1e-6
        for k in range(4):
            for t in (0.1, 0.37, 0.5, 0.81):
                numeric = (eval_curve(params, k, t + step) - eval_curve(params, k, t - step)) / (2 * step)
                self.assertTrue(torch.allclose(eval_derivative(params, k, t), numeric, rtol=1e-6, atol=1e-7))

    def test_c1_stitching(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            n = int(rng.integers(2, 9))
            params = random_sketch(rng, n, ContinuityMode.C1)
            for k in range(n):
                outgoing = eval_derivative(params, k, 1.0)
                incoming = eval_derivative(params, (k + 1) % n, 0.0)
                scale = max(float(torch.linalg.norm(outgoing)), 1.0)
                self.assertLessEqual(float(torch.linalg.norm(outgoing - incoming)) / scale, 1e-9)

    def test_circle_tangent_is_orthogonal_to_radius(self):
        params = circle_sketch(4, 1.0)
        t = torch.linspace(0.0, 1.0, 50, dtype=torch.float64)
        for k in range(4):
            dots = (eval_curve(params, k, t) * eval_derivative(params, k, t)).sum(dim=-1)
            self.assertLess(float(torch.max(torch.abs(dots))), 1e-12)


class FamilyTests(SimpleTestCase):
    def test_params_become_bezier_family(self):
        self.assertIsInstance(as_family(SketchParams.unit_start(4)), RBezierCurve)

    def test_polygon_family_closes(self):
        square = PolygonCurve([[1, -1], [1, 1], [-1, 1], [-1, -1]])
        t = torch.tensor([0.0, 1.0], dtype=torch.float64)
        points = square.points(t)
        self.assertTrue(torch.equal(points[0, 1], points[1, 0]))
        self.assertTrue(torch.equal(points[3, 1], points[0, 0]))

    def test_ellipse_derivative_matches_finite_differences(self):
        ellipse = EllipseCurve(2.0, 0.5, n_curves=3)
        t = torch.tensor([0.3], dtype=torch.float64)
        step = 1e-6
        numeric = (ellipse.points(t + step) - ellipse.points(t - step)) / (2 * step)
        self.assertTrue(torch.allclose(ellipse.derivatives(t), numeric, atol=1e-7))
