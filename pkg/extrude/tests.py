import math

import numpy as np
import torch
from django.test import SimpleTestCase

from extrude_cad.exceptions import InvalidParameterError
from sdf2d.distance import sdf_values
from sdf2d.fields import GridSpec
from sdf2d.oracles import box_sdf_3d, capped_cylinder_sdf_3d
from sdf2d.sampling import sample_sketch
from sketch.params import ContinuityMode, SketchParams
from sketch.rbezier import circle_sketch, polygon_sketch
from .pose import RigidPose, to_local, to_world
from .solid import (
    EtaSchedule,
    ExtrusionParams,
    extrusion_sdf,
    extrusion_sdf_terms,
    occupancy,
    primitive_occupancy_batch,
    primitive_sdf_batch,
)

QUARTER_TURN_Z = RigidPose.from_axis_angle([0, 0, 1], math.pi / 2, [0.5, -1.0, 2.0])


def cylinder(height: float = 2.0, pose: RigidPose = None) -> ExtrusionParams:
    return ExtrusionParams(circle_sketch(4, 1.0), pose or RigidPose.identity(), height)


def random_pose(rng: np.random.Generator) -> RigidPose:
    return RigidPose(rng.normal(size=4), rng.uniform(-1, 1, 3))


class PoseTests(SimpleTestCase):
    def test_identity(self):
        points = torch.as_tensor(np.random.default_rng(0).normal(size=(10, 3)))
        self.assertTrue(torch.equal(to_local(RigidPose.identity(), points), points))

    def test_pure_translation(self):
        pose = RigidPose([1, 0, 0, 0], [1.0, 0.0, 0.0])
        self.assertTrue(torch.allclose(to_local(pose, [1.0, 0.0, 0.0]), torch.zeros(3, dtype=torch.float64)))

    def test_quarter_turn_round_trip(self):
        points = torch.as_tensor(np.random.default_rng(1).uniform(-2, 2, (100, 3)))
        restored = to_local(QUARTER_TURN_Z, to_world(QUARTER_TURN_Z, points))
        self.assertLessEqual(float(torch.max(torch.abs(restored - points))), 1e-12)

    def test_quarter_turn_maps_x_to_y(self):
        pose = RigidPose.from_axis_angle([0, 0, 1], math.pi / 2)
        mapped = to_world(pose, [1.0, 0.0, 0.0])
        self.assertTrue(torch.allclose(mapped, torch.tensor([0.0, 1.0, 0.0], dtype=torch.float64), atol=1e-15))

    def test_quaternion_is_normalised(self):
        pose = RigidPose([2.0, 0.0, 0.0, 0.0], [0, 0, 0])
        self.assertTrue(torch.equal(pose.rotation, torch.tensor([1.0, 0.0, 0.0, 0.0], dtype=torch.float64)))

    def test_rotation_matrix_is_orthonormal(self):
        matrix = random_pose(np.random.default_rng(2)).matrix()
        self.assertTrue(torch.allclose(matrix @ matrix.T, torch.eye(3, dtype=torch.float64), atol=1e-14))

    def test_rejects_zero_quaternion(self):
        with self.assertRaises(InvalidParameterError):
            RigidPose([0, 0, 0, 0], [0, 0, 0])


class ExtrusionSdfTests(SimpleTestCase):
    def setUp(self):
        self.prim = cylinder(2.0)
        self.field = sample_sketch(self.prim.sketch, 400)

    def sdf_at(self, point):
        return float(extrusion_sdf(self.prim, self.field, [point])[0])

    def test_inside_centre(self):
        self.assertAlmostEqual(self.sdf_at([0.0, 0.0, 1.0]), 1.0, delta=1e-4)

    def test_above_the_cap(self):
        self.assertAlmostEqual(self.sdf_at([0.0, 0.0, 3.0]), -1.0, delta=1e-4)

    def test_below_the_rim(self):
        self.assertAlmostEqual(self.sdf_at([2.0, 0.0, -1.0]), -math.sqrt(2.0), places=6)

    def test_terms_are_complementary(self):
        points = np.random.default_rng(3).uniform(-1.5, 2.5, (2000, 3))
        inner, outer = extrusion_sdf_terms(self.prim, self.field, points)
        self.assertTrue(torch.all(inner * outer == 0))
        self.assertTrue(torch.all(inner >= 0))
        self.assertTrue(torch.all(outer <= 0))

    def test_rigid_invariance(self):
        rng = np.random.default_rng(4)
        pose = random_pose(rng)
        moved = cylinder(2.0, pose)
        points = torch.as_tensor(rng.uniform(-1.5, 2.5, (200, 3)))
        local_values = extrusion_sdf(self.prim, self.field, points)
        world_values = extrusion_sdf(moved, self.field, to_world(pose, points))
        self.assertLessEqual(float(torch.max(torch.abs(local_values - world_values))), 1e-10)

    def test_empty_points(self):
        self.assertEqual(extrusion_sdf(self.prim, self.field, np.zeros((0, 3))).shape, (0,))

    def test_rejects_non_positive_height(self):
        with self.assertRaises(InvalidParameterError):
            cylinder(0.0)


class ExtrusionOracleTests(SimpleTestCase):
    grid = GridSpec([-1.5, -1.5, -0.5], [1.5, 1.5, 2.5], (64, 64, 64))

    def test_matches_capped_cylinder(self):
        prim = cylinder(2.0)
        points = self.grid.points()
        values = extrusion_sdf(prim, sample_sketch(prim.sketch, 400), points, refine="segment").numpy()
        expected = capped_cylinder_sdf_3d(points, radius=1.0, height=2.0)
        self.assertLessEqual(float(np.max(np.abs(values - expected))), 2e-4)

    def test_matches_box(self):
        square = polygon_sketch([math.sqrt(2.0)] * 4, math.pi / 4)
        prim = ExtrusionParams(square, RigidPose.identity(), 2.0)
        points = self.grid.points()
        values = extrusion_sdf(prim, sample_sketch(square, 400), points, refine="segment").numpy()
        expected = box_sdf_3d(points, [-1, -1, 0], [1, 1, 2])
        self.assertLessEqual(float(np.max(np.abs(values - expected))), 2e-4)


class OccupancyTests(SimpleTestCase):
    def test_midpoint(self):
        self.assertEqual(float(occupancy(0.0, 100.0)), 0.5)

    def test_saturation(self):
        self.assertAlmostEqual(float(occupancy(1.0, 100.0)), 1.0, delta=1e-6)

    def test_symmetry(self):
        s = torch.linspace(-0.1, 0.1, 21, dtype=torch.float64)
        self.assertTrue(torch.allclose(occupancy(-s, 30.0), 1 - occupancy(s, 30.0), atol=1e-15))

    def test_strictly_increasing(self):
        values = occupancy(torch.linspace(-0.05, 0.05, 101, dtype=torch.float64), 100.0)
        self.assertTrue(torch.all(values[1:] > values[:-1]))

    def test_rejects_non_positive_eta(self):
        with self.assertRaises(InvalidParameterError):
            occupancy(0.3, 0.0)
        with self.assertRaises(InvalidParameterError):
            occupancy(0.3, -1.0)


class BatchTests(SimpleTestCase):
    def test_cylinder_interior(self):
        points = np.array([[0.0, 0.0, 1.0], [0.3, -0.2, 0.5], [-0.5, 0.5, 1.5]])
        matrix = primitive_occupancy_batch([cylinder()], points, 100.0, samples_per_curve=50)
        self.assertEqual(tuple(matrix.shape), (3, 1))
        self.assertTrue(torch.all(matrix > 0.5))

    def test_no_primitives(self):
        matrix = primitive_occupancy_batch([], np.zeros((5, 3)), 100.0)
        self.assertEqual(tuple(matrix.shape), (5, 0))

    def test_duplicate_primitives_give_identical_columns(self):
        prim = cylinder(1.0, QUARTER_TURN_Z)
        points = np.random.default_rng(5).uniform(-2, 3, (100, 3))
        matrix = primitive_sdf_batch([prim, prim], points, samples_per_curve=30)
        self.assertTrue(torch.equal(matrix[:, 0], matrix[:, 1]))


class GradientTests(SimpleTestCase):
    """Autograd through pose, height and sketch against central differences"""
    samples = 20

    def sdf_of(self, x, n_curves, mode, point):
        n_radii, _ = SketchParams.free_variable_counts(n_curves, mode)
        sketch = SketchParams(n_curves, x[8:8 + n_radii], x[8 + n_radii:], mode)
        prim = ExtrusionParams(sketch, RigidPose(x[:4], x[4:7]), x[7])
        return extrusion_sdf(prim, sample_sketch(sketch, self.samples), point)[0]

    def usable(self, x, n_curves, mode, point) -> bool:
        """Keep configurations away from min/max branch switches and nearest-sample changes"""
        with torch.no_grad():
            n_radii, _ = SketchParams.free_variable_counts(n_curves, mode)
            sketch = SketchParams(n_curves, x[8:8 + n_radii], x[8 + n_radii:], mode)
            local = to_local(RigidPose(x[:4], x[4:7]), point)[0]
            field = sample_sketch(sketch, self.samples)
            distances = torch.sort(torch.linalg.norm(field.samples - local[:2], dim=-1)).values
            sketch_sdf = float(sdf_values(field, local[:2].reshape(1, 2))[0][0])
        z, h = float(local[2]), float(x[7])
        terms = sorted([sketch_sdf, h - z, z])
        return (float(distances[1] - distances[0]) > 1e-3
                and min(abs(t) for t in terms) > 1e-2
                and terms[1] - terms[0] > 1e-3)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        step = 1e-5
        checked = 0
        while checked < 100:
            n_curves = int(rng.integers(3, 5))
            mode = ContinuityMode.C1 if rng.random() < 0.5 else ContinuityMode.C0
            n_radii, n_weights = SketchParams.free_variable_counts(n_curves, mode)
            x = torch.as_tensor(np.concatenate([
                rng.normal(size=4), rng.uniform(-0.5, 0.5, 3), [rng.uniform(0.5, 2.0)],
                np.exp(rng.uniform(-0.3, 0.3, n_radii)), np.exp(rng.uniform(-0.3, 0.3, n_weights)),
            ]))
            point = torch.as_tensor(rng.uniform(-1.5, 2.0, (1, 3)))
            if not self.usable(x, n_curves, mode, point):
                continue

            leaf = x.clone().requires_grad_(True)
            (grad,) = torch.autograd.grad(self.sdf_of(leaf, n_curves, mode, point), leaf)
            numeric = torch.zeros_like(x)
            with torch.no_grad():
                for i in range(x.numel()):
                    plus, minus = x.clone(), x.clone()
                    plus[i] += step
                    minus[i] -= step
                    numeric[i] = (self.sdf_of(plus, n_curves, mode, point)
                                  - self.sdf_of(minus, n_curves, mode, point)) / (2 * step)
            scale = max(float(torch.max(torch.abs(numeric))), 1e-8)
            self.assertLessEqual(float(torch.max(torch.abs(grad - numeric))) / scale, 1e-4)
            checked += 1


class EtaScheduleTests(SimpleTestCase):
    def test_constant_without_interval(self):
        schedule = EtaSchedule(100.0)
        self.assertEqual(schedule(0), 100.0)
        self.assertEqual(schedule(10_000), 100.0)

    def test_doubles_and_caps(self):
        schedule = EtaSchedule(100.0, doubling_interval=50, eta_max=500.0)
        self.assertEqual([schedule(i) for i in (0, 49, 50, 100, 150, 10 ** 9)], [100.0, 100.0, 200.0, 400.0, 500.0, 500.0])

    def test_rejects_bad_values(self):
        with self.assertRaises(InvalidParameterError):
            EtaSchedule(0.0)
        with self.assertRaises(InvalidParameterError):
            EtaSchedule(10.0, doubling_interval=-1)
        with self.assertRaises(InvalidParameterError):
            EtaSchedule(10.0, eta_max=1.0)
