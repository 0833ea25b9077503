import math

import numpy as np
import torch
from django.test import SimpleTestCase, override_settings

from extrude_cad.exceptions import InvalidParameterError
from sketch.families import EllipseCurve, PolygonCurve
from sketch.params import ContinuityMode, SketchParams
from sketch.rbezier import circle_sketch, polygon_sketch
from .accuracy import accuracy_study
from .distance import (
    NearestMethod,
    Refinement,
    nearest_sample_indices,
    sdf_gradient,
    sdf_values,
    signed_distance,
    signed_distance_batch,
)
from .fields import FieldKind, GridSpec, ScalarField
from .oracles import (
    box_sdf_3d,
    capped_cylinder_sdf_3d,
    circle_sdf,
    polygon_sdf,
    square_vertices,
    star_vertices,
)
from .sampling import sample_sketch

SQUARE = polygon_sketch([math.sqrt(2.0)] * 4, math.pi / 4)


def unit_circle(n_curves: int = 4) -> SketchParams:
    return circle_sketch(n_curves, 1.0)


def accuracy_grid(resolution: int) -> GridSpec:
    return GridSpec.cube([-1.5, -1.5], [1.5, 1.5], resolution)


def perturbed_sketch(rng: np.random.Generator) -> SketchParams:
    n = int(rng.integers(3, 6))
    mode = ContinuityMode.C1 if rng.random() < 0.5 else ContinuityMode.C0
    n_radii, n_weights = SketchParams.free_variable_counts(n, mode)
    return SketchParams.from_unconstrained(
        rng.uniform(-0.3, 0.3, n_radii), rng.uniform(-0.3, 0.3, n_weights), n, mode,
    )


def voronoi_margin(sketch, point: np.ndarray) -> float:
    """Gap between the nearest and second nearest sample distance"""
    distances = np.sort(np.linalg.norm(sketch.samples.numpy() - point, axis=-1))
    return float(distances[1] - distances[0])


class SampleSketchTests(SimpleTestCase):
    def test_sample_count_and_spacing(self):
        sketch = sample_sketch(unit_circle(), 100)
        self.assertEqual(len(sketch), 400)
        t = sketch.params_of_samples[:100, 1]
        self.assertTrue(torch.allclose(t[1:] - t[:-1], torch.full((99,), 0.01, dtype=torch.float64)))

    def test_normals_are_unit_length(self):
        sketch = sample_sketch(perturbed_sketch(np.random.default_rng(0)), 50)
        lengths = torch.linalg.norm(sketch.normals, dim=-1)
        self.assertLessEqual(float(torch.max(torch.abs(lengths - 1.0))), 1e-12)

    def test_circle_normals_point_outward(self):
        sketch = sample_sketch(unit_circle(), 100)
        radial = sketch.samples / torch.linalg.norm(sketch.samples, dim=-1, keepdim=True)
        dots = (sketch.normals * radial).sum(dim=-1)
        self.assertGreaterEqual(float(dots.min()), 1.0 - 1e-6)

    def test_square_corner_normal_is_diagonal(self):
        sketch = sample_sketch(SQUARE, 20)
        self.assertTrue(torch.allclose(sketch.samples[0], torch.tensor([1.0, 1.0], dtype=torch.float64)))
        diagonal = torch.tensor([1.0, 1.0], dtype=torch.float64) / math.sqrt(2.0)
        self.assertTrue(torch.allclose(sketch.normals[0], diagonal, atol=1e-12))

    def test_rejects_too_few_samples(self):
        with self.assertRaises(InvalidParameterError):
            sample_sketch(unit_circle(), 3)

    def test_other_curve_families(self):
        ellipse = sample_sketch(EllipseCurve(2.0, 1.0), 25)
        self.assertEqual(len(ellipse), 100)
        triangle = sample_sketch(PolygonCurve([[1.0, 0.0], [-0.5, 0.8], [-0.5, -0.8]]), 10)
        self.assertGreater(signed_distance(triangle, [0.0, 0.0]).sdf, 0.0)


class SignedDistanceTests(SimpleTestCase):
    def setUp(self):
        self.sketch = sample_sketch(unit_circle(), 400)

    def test_origin_is_inside(self):
        self.assertAlmostEqual(signed_distance(self.sketch, [0.0, 0.0]).sdf, 1.0, delta=1e-4)

    def test_outside_point(self):
        self.assertAlmostEqual(signed_distance(self.sketch, [2.0, 0.0]).sdf, -1.0, delta=1e-4)

    def test_closest_sample_reported(self):
        result = signed_distance(self.sketch, [0.5, 0.0])
        self.assertEqual(result.closest_param, (0, 0.0))
        self.assertTrue(np.allclose(result.closest_point, [1.0, 0.0]))
        self.assertAlmostEqual(abs(result.sdf), float(np.linalg.norm(result.closest_point - [0.5, 0.0])),
                               places=7)

    def test_query_on_sample_is_zero(self):
        point = self.sketch.samples[37].numpy()
        self.assertEqual(signed_distance(self.sketch, point, refine="sample").sdf, 0.0)

    def test_origin_positive_for_random_sketches(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            sketch = sample_sketch(perturbed_sketch(rng), 40)
            self.assertGreater(signed_distance(sketch, [0.0, 0.0]).sdf, 0.0)


class BatchTests(SimpleTestCase):
    def setUp(self):
        self.sketch = sample_sketch(unit_circle(), 50)

    def test_grid_query_keeps_layout(self):
        grid = accuracy_grid(11)
        field = signed_distance_batch(self.sketch, grid)
        self.assertTrue(field.is_grid)
        self.assertEqual(field.values.shape, (11, 11))
        self.assertEqual(field.kind, FieldKind.SDF)
        # (0, 0) is node (5, 5)
        self.assertGreater(field.values[5, 5], 0.9)

    def test_empty_point_list(self):
        field = signed_distance_batch(self.sketch, np.zeros((0, 2)))
        self.assertEqual(field.values.shape, (0,))

    def test_duplicate_points_agree(self):
        field = signed_distance_batch(self.sketch, [[0.3, -0.2], [0.3, -0.2]])
        self.assertEqual(field.values[0], field.values[1])

    def test_rejects_three_dimensional_grid(self):
        with self.assertRaises(InvalidParameterError):
            signed_distance_batch(self.sketch, GridSpec.cube([0, 0, 0], [1, 1, 1], 3))

    def test_rejects_three_dimensional_points(self):
        # Four 3D points hold as many numbers as six 2D points
        with self.assertRaises(InvalidParameterError):
            signed_distance_batch(self.sketch, np.zeros((4, 3)))
        with self.assertRaises(InvalidParameterError):
            signed_distance_batch(self.sketch, np.zeros(6))
        with self.assertRaises(InvalidParameterError):
            sdf_values(self.sketch, torch.zeros((4, 3), dtype=torch.float64))


class NearestSearchTests(SimpleTestCase):
    def test_kdtree_matches_brute_force(self):
        rng = np.random.default_rng(2)
        sketch = sample_sketch(perturbed_sketch(rng), 60)
        points = torch.as_tensor(np.vstack([rng.uniform(-2, 2, (2000, 2)), [[0.0, 0.0]]]))
        brute = nearest_sample_indices(sketch, points, NearestMethod.BRUTE)
        tree = nearest_sample_indices(sketch, points, NearestMethod.KDTREE)
        self.assertTrue(torch.equal(brute, tree))

    def test_ties_pick_lowest_index(self):
        square = sample_sketch(PolygonCurve([[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]]), 4)
        # Equidistant from the samples (1, -1) and (1, -0.5)
        point = torch.tensor([[2.0, -0.75]], dtype=torch.float64)
        for method in NearestMethod:
            self.assertEqual(int(nearest_sample_indices(square, point, method)[0]), 0)

    @override_settings(SDF_QUERY_CHUNK=7)
    def test_chunking_does_not_change_result(self):
        sketch = sample_sketch(unit_circle(), 10)
        points = torch.as_tensor(np.random.default_rng(3).uniform(-1, 1, (50, 2)))
        chunked = nearest_sample_indices(sketch, points)
        whole = nearest_sample_indices(sketch, points, chunk=1000)
        self.assertTrue(torch.equal(chunked, whole))


class OracleAccuracyTests(SimpleTestCase):
    rates = [20, 40, 80, 160, 400]

    def assert_strictly_decreasing(self, errors):
        for coarse, fine in zip(errors[:-1], errors[1:]):
            self.assertLess(fine, coarse)

    def test_circle_error_shrinks_with_rate(self):
        table = accuracy_study(unit_circle(), circle_sdf, self.rates, accuracy_grid(201), refine="sample")
        errors = table["max_error"].tolist()
        self.assert_strictly_decreasing(errors)
        error_at = dict(zip(table["rate"], errors))
        self.assertLessEqual(error_at[80], 25 * error_at[400])

    def test_square_error_shrinks_with_rate(self):
        oracle = lambda p: polygon_sdf(p, square_vertices(1.0))
        table = accuracy_study(SQUARE, oracle, self.rates, accuracy_grid(201), refine="sample")
        self.assert_strictly_decreasing(table["max_error"].tolist())

    def test_circle_bound_at_400_samples(self):
        sketch = sample_sketch(unit_circle(), 400)
        grid = accuracy_grid(201)
        field = signed_distance_batch(sketch, grid, refine=Refinement.SEGMENT)
        error = np.abs(field.flat_values() - circle_sdf(grid.points()))
        self.assertLessEqual(float(error.max()), 1e-4)

    def test_square_bound_at_400_samples(self):
        sketch = sample_sketch(SQUARE, 400)
        grid = accuracy_grid(201)
        field = signed_distance_batch(sketch, grid, refine=Refinement.SEGMENT)
        error = np.abs(field.flat_values() - polygon_sdf(grid.points(), square_vertices(1.0)))
        self.assertLessEqual(float(error.max()), 1e-4)

    def test_sample_refinement_budget_at_400_samples(self):
        sketch = sample_sketch(unit_circle(), 400)
        samples = sketch.samples.numpy()
        max_gap = float(np.linalg.norm(np.roll(samples, -1, axis=0) - samples, axis=1).max())
        grid = accuracy_grid(201)
        field = signed_distance_batch(sketch, grid, refine=Refinement.SAMPLE)
        error = float(np.abs(field.flat_values() - circle_sdf(grid.points())).max())
        # The nearest sample alone is off by up to about half a gap, well above the projected bound
        self.assertLessEqual(error, max_gap)
        self.assertGreater(error, 1e-4)

    def test_refinement_never_worse_than_samples(self):
        grid = accuracy_grid(41)
        coarse = accuracy_study(unit_circle(), circle_sdf, [20], grid, refine="sample")
        refined = accuracy_study(unit_circle(), circle_sdf, [20], grid, refine="segment")
        self.assertLess(refined["max_error"][0], coarse["max_error"][0])


class GradientTests(SimpleTestCase):
    def test_circle_point_gradient(self):
        grad = sdf_gradient(unit_circle(), [0.5, 0.0], samples_per_curve=400)
        self.assertTrue(torch.allclose(grad, torch.tensor([-1.0, 0.0], dtype=torch.float64), atol=1e-6))

    def test_distance_gradient_is_unit_norm(self):
        sketch = sample_sketch(perturbed_sketch(np.random.default_rng(4)), 50)
        rng = np.random.default_rng(5)
        for _ in range(20):
            point = rng.uniform(-1.5, 1.5, 2)
            if voronoi_margin(sketch, point) < 1e-3 or abs(signed_distance(sketch, point).sdf) < 0.05:
                continue
            grad = sdf_gradient(sketch, point)
            self.assertAlmostEqual(float(torch.linalg.norm(grad)), 1.0, delta=1e-5)

    def test_radii_scale_sdf_linearly_at_origin(self):
        base = unit_circle()
        scaled = SketchParams(4, base.radii * 1.3, base.weights)
        original = signed_distance(sample_sketch(base, 100), [0.0, 0.0]).sdf
        self.assertAlmostEqual(signed_distance(sample_sketch(scaled, 100), [0.0, 0.0]).sdf, 1.3 * original,
                               places=7)
        # Euler's relation for a degree-one homogeneous function of the radii
        grad = sdf_gradient(base, [0.0, 0.0], wrt="sketch-parameters")
        self.assertAlmostEqual(float(grad[:12] @ base.radii), original, places=6)

    def test_point_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        step = 1e-5
        checked = 0
        while checked < 100:
            sketch = sample_sketch(perturbed_sketch(rng), 30)
            point = rng.uniform(-1.5, 1.5, 2)
            if voronoi_margin(sketch, point) < 1e-3 or abs(signed_distance(sketch, point).sdf) < 1e-2:
                continue
            grad = sdf_gradient(sketch, point).numpy()
            numeric = np.zeros(2)
            for axis in range(2):
                offset = np.zeros(2)
                offset[axis] = step
                plus, _ = sdf_values(sketch, point + offset)
                minus, _ = sdf_values(sketch, point - offset)
                numeric[axis] = (float(plus[0]) - float(minus[0])) / (2 * step)
            self.assertLessEqual(np.max(np.abs(grad - numeric)) / max(np.max(np.abs(numeric)), 1e-8), 1e-4)
            checked += 1

    def test_parameter_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        step = 1e-5
        checked = 0
        while checked < 20:
            params = perturbed_sketch(rng)
            point = rng.uniform(-1.5, 1.5, 2)
            if voronoi_margin(sample_sketch(params, 20), point) < 1e-3:
                continue
            grad = sdf_gradient(params, point, wrt="sketch-parameters", samples_per_curve=20).numpy()
            flat = torch.cat([params.radii, params.weights])
            n_radii = params.radii.numel()
            numeric = np.zeros(flat.numel())
            for i in range(flat.numel()):
                values = []
                for sign in (1.0, -1.0):
                    moved = flat.clone()
                    moved[i] += sign * step
                    shifted = SketchParams(params.n_curves, moved[:n_radii], moved[n_radii:],
                                           params.continuity_mode, params.start_angle)
                    values.append(signed_distance(sample_sketch(shifted, 20), point).sdf)
                numeric[i] = (values[0] - values[1]) / (2 * step)
            self.assertLessEqual(np.max(np.abs(grad - numeric)) / max(np.max(np.abs(numeric)), 1e-8), 1e-4)
            checked += 1

    def test_parameter_gradient_needs_params(self):
        with self.assertRaises(InvalidParameterError):
            sdf_gradient(EllipseCurve(1.0, 1.0), [0.0, 0.0], wrt="sketch-parameters")


class OracleTests(SimpleTestCase):
    def test_polygon_sdf_sign(self):
        square = square_vertices(1.0)
        values = polygon_sdf([[0.0, 0.0], [2.0, 0.0], [0.5, 0.9]], square)
        self.assertTrue(np.allclose(values, [1.0, -1.0, 0.1]))

    def test_star_is_star_shaped(self):
        star = star_vertices()
        angles = np.unwrap(np.arctan2(star[:, 1], star[:, 0]))
        self.assertTrue(np.all(np.diff(angles) > 0))
        self.assertGreater(polygon_sdf([[0.0, 0.0]], star)[0], 0.0)

    def test_box_sdf(self):
        values = box_sdf_3d([[0, 0, 0], [2, 0, 0], [2, 2, 0]], [-1, -1, -1], [1, 1, 1])
        self.assertTrue(np.allclose(values, [1.0, -1.0, -math.sqrt(2.0)]))

    def test_cylinder_sdf(self):
        values = capped_cylinder_sdf_3d([[0, 0, 1], [0, 0, 3], [2, 0, -1]], radius=1.0, height=2.0)
        self.assertTrue(np.allclose(values, [1.0, -1.0, -math.sqrt(2.0)]))


class FieldTests(SimpleTestCase):
    def test_grid_points_are_row_major(self):
        grid = GridSpec([0.0, 0.0], [1.0, 2.0], (2, 3))
        points = grid.points()
        self.assertTrue(np.allclose(points[1], [0.0, 1.0]))
        self.assertTrue(np.allclose(points[3], [1.0, 0.0]))

    def test_field_needs_matching_value_count(self):
        with self.assertRaises(InvalidParameterError):
            ScalarField(np.zeros(5), FieldKind.SDF, grid=GridSpec.cube([0, 0], [1, 1], 2))

    def test_degenerate_grid(self):
        with self.assertRaises(InvalidParameterError):
            GridSpec([0.0, 0.0], [0.0, 1.0], (3, 3))
