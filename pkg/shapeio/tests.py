import math
import re
import tempfile
from pathlib import Path

import numpy as np
import trimesh
from django.test import SimpleTestCase

from extrude.pose import RigidPose
from extrude.solid import ExtrusionParams
from extrude_cad.exceptions import FormatParseError, InvalidParameterError
from sdf2d.fields import FieldKind, GridSpec, ScalarField
from sketch.params import SketchParams
from sketch.rbezier import circle_sketch, polygon_sketch
from sketch.tensors import to_numpy
from stump.assembly import ShapeModel, model_occupancy
from stump.layers import StumpMode, StumpParams
from .formats import (
    load_field,
    load_mesh,
    load_model,
    parse_field,
    parse_model,
    render_field,
    render_model,
    save_field,
    save_mesh,
    save_model,
)
from .grids import occupied_bbox, padded_bounds, resample_nearest, sample_testing_grid, volume_iou
from .mesh import marching_cubes
from .metrics import chamfer_distance, compute_metrics, surface_samples
from .pointcloud import PointCloud, load_pointcloud, parse_ply, parse_xyz, save_pointcloud
from .raster import polygon_occupancy, sketch_polyline
from .scad import export_scad
from .targets import BOX, box_occupancy_grid, make_target
from .voxelize import voxelize_pointcloud


def hard_stump(complement, inter_select, union_select) -> StumpParams:
    return StumpParams(complement, inter_select, union_select, StumpMode.HARD)


def upright(sketch: SketchParams, height: float, translation=(0.0, 0.0, 0.0)) -> ExtrusionParams:
    return ExtrusionParams(sketch, RigidPose(np.array([1.0, 0.0, 0.0, 0.0]), translation), height)


def cylinder_model() -> ShapeModel:
    return ShapeModel([upright(circle_sketch(4, 1.0), 1.0)], hard_stump([0.0], [[1.0]], [1.0]), 100.0)


def box_minus_rod() -> ShapeModel:
    box = upright(polygon_sketch([0.8 * math.sqrt(2)] * 4, math.pi / 4), 1.0)
    rod = ExtrusionParams(circle_sketch(4, 0.3), RigidPose.from_axis_angle([1, 0, 0], math.pi / 2, [0.2, 1.2, 0.5]), 2.4)
    metadata = {"bbox_lower": [-0.8, -0.8, 0.0], "bbox_upper": [0.8, 0.8, 1.0], "padding": 0.15}
    return ShapeModel([box, rod], hard_stump([0.0, 1.0], [[1.0], [1.0]], [1.0]), 100.0, metadata)


def fibonacci_sphere(count: int, radius: float = 1.0) -> np.ndarray:
    i = np.arange(count) + 0.5
    polar = np.arccos(1 - 2 * i / count)
    azimuth = math.pi * (1 + 5 ** 0.5) * i
    return radius * np.stack([np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)], -1)


def random_model(rng: np.random.Generator, k: int = 3, j: int = 2) -> ShapeModel:
    prims = []
    for _ in range(k):
        sketch = SketchParams(4, rng.uniform(0.5, 1.5, 12), rng.uniform(0.5, 2.0, 8))
        pose = RigidPose(rng.normal(size=4), rng.normal(size=3))
        prims.append(ExtrusionParams(sketch, pose, rng.uniform(0.2, 2.0)))
    stump = StumpParams(rng.random(k), rng.random((k, j)), rng.random(j))
    metadata = {"bbox_lower": rng.uniform(-2, -1, 3).tolist(), "bbox_upper": rng.uniform(1, 2, 3).tolist(), "seed": 7}
    return ShapeModel(prims, stump, float(rng.uniform(10, 500)), metadata)


class PointCloudTests(SimpleTestCase):
    def test_xyz_three_floats_per_line(self):
        cloud = parse_xyz("0 0 0\n1.5 -2 3e-2\n\n# comment\n4 5 6\n")
        self.assertEqual(len(cloud), 3)
        self.assertIsNone(cloud.normals)
        np.testing.assert_array_equal(cloud.points[1], [1.5, -2.0, 0.03])

    def test_xyz_with_normals(self):
        cloud = parse_xyz("0 0 0 0 0 1\n1 1 1 1 0 0\n")
        self.assertEqual(cloud.normals.shape, (2, 3))

    def test_xyz_reports_line_number(self):
        with self.assertRaises(FormatParseError) as ctx:
            parse_xyz("0 0 0\n1 2 x\n", "cloud.xyz")
        self.assertEqual(ctx.exception.line_number, 2)
        self.assertIn("cloud.xyz:2", str(ctx.exception))

    def test_xyz_wrong_column_count(self):
        with self.assertRaises(FormatParseError) as ctx:
            parse_xyz("0 0 0\n\n1 2\n")
        self.assertEqual(ctx.exception.line_number, 3)

    def test_ascii_ply(self):
        text = "\n".join([
            "ply", "format ascii 1.0", "comment made by hand", "element vertex 2",
            "property float x", "property float y", "property float z", "property uchar red",
            "end_header", "0 1 2 255", "3 4 5 0",
        ])
        cloud = parse_ply(text)
        np.testing.assert_array_equal(cloud.points, [[0, 1, 2], [3, 4, 5]])

    def test_ply_errors(self):
        with self.assertRaises(FormatParseError):
            parse_ply("ply\nformat binary_little_endian 1.0\nend_header\n")
        with self.assertRaises(FormatParseError):
            parse_ply("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n")
        with self.assertRaises(FormatParseError) as ctx:
            parse_ply("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                      "property float z\nend_header\n0 0 0\n1 nan-ish 0\n")
        self.assertEqual(ctx.exception.line_number, 9)

    def test_file_round_trip(self):
        cloud = PointCloud(fibonacci_sphere(50))
        with tempfile.TemporaryDirectory() as tmp:
            for name in ("cloud.xyz", "cloud.ply"):
                path = Path(tmp) / name
                save_pointcloud(cloud, path)
                np.testing.assert_array_equal(load_pointcloud(path).points, cloud.points)

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_pointcloud("/nonexistent/cloud.xyz")

    def test_rejects_non_finite_points(self):
        with self.assertRaises(InvalidParameterError):
            PointCloud([[0.0, math.inf, 0.0]])


class GridTests(SimpleTestCase):
    def test_padded_bounds(self):
        lower, upper = padded_bounds([-1, -1, -1], [1, 1, 1], 0.15)
        np.testing.assert_allclose(lower, [-1.3] * 3)
        np.testing.assert_allclose(upper, [1.3] * 3)

    def test_zero_padding_spans_bbox(self):
        points = sample_testing_grid([0, 0, 0], [1, 2, 3], 5, 0.0)
        np.testing.assert_array_equal(points.min(axis=0), [0, 0, 0])
        np.testing.assert_array_equal(points.max(axis=0), [1, 2, 3])

    def test_resolution_two_gives_corners(self):
        points = sample_testing_grid([-1, -1, -1], [1, 1, 1], 2, 0.0)
        self.assertEqual(points.shape, (8, 3))
        self.assertEqual({tuple(p) for p in points}, {(x, y, z) for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)})

    def test_invalid_inputs(self):
        with self.assertRaises(InvalidParameterError):
            sample_testing_grid([0, 0, 0], [1, 0, 1], 4, 0.1)
        with self.assertRaises(InvalidParameterError):
            sample_testing_grid([0, 0, 0], [1, 1, 1], 1, 0.1)
        with self.assertRaises(InvalidParameterError):
            padded_bounds([0, 0, 0], [1, 1, 1], -0.1)

    def test_occupied_bbox(self):
        field = box_occupancy_grid(resolution=40, padding=0.15)
        lower, upper = occupied_bbox(field)
        spacing = field.grid.spacing
        # Occupied cells reach the box faces to within half a cell
        np.testing.assert_array_less(np.abs(lower - np.array(BOX[0])), spacing / 2 + 1e-9)
        np.testing.assert_array_less(np.abs(upper - np.array(BOX[1])), spacing / 2 + 1e-9)

    def test_occupied_bbox_of_empty_grid(self):
        grid = GridSpec.cube([0, 0, 0], [1, 1, 1], 3)
        lower, upper = occupied_bbox(ScalarField(np.zeros(27), FieldKind.OCCUPANCY, grid=grid))
        np.testing.assert_array_equal(lower, grid.lower)
        np.testing.assert_array_equal(upper, grid.upper)

    def test_resample_onto_same_grid(self):
        field = box_occupancy_grid(resolution=12)
        np.testing.assert_array_equal(resample_nearest(field, field.grid).values, field.values)

    def test_resample_to_coarser_grid(self):
        field = box_occupancy_grid(resolution=41)
        coarse = GridSpec.cube(field.grid.lower, field.grid.upper, 21)
        resampled = resample_nearest(field, coarse)
        # Every coarse node coincides with a fine node
        np.testing.assert_array_equal(resampled.values, field.values[::2, ::2, ::2])

    def test_volume_iou(self):
        a = np.zeros((4, 4), dtype=bool)
        b = np.zeros((4, 4), dtype=bool)
        a[:2] = True
        b[1:3] = True
        self.assertAlmostEqual(volume_iou(a, b), 4 / 12)
        self.assertEqual(volume_iou(a, a), 1.0)
        self.assertEqual(volume_iou(np.zeros(3), np.zeros(3)), 1.0)
        with self.assertRaises(InvalidParameterError):
            volume_iou(a, np.zeros(3))


class VoxelizeTests(SimpleTestCase):
    def test_sphere_surface_is_filled(self):
        field = voxelize_pointcloud(PointCloud(fibonacci_sphere(20000)), resolution=24, padding=0.15)
        self.assertEqual(field.kind, FieldKind.OCCUPANCY)
        self.assertEqual(field.grid.shape, (24, 24, 24))
        values = field.values
        self.assertEqual(values[12, 12, 12], 1.0)
        self.assertEqual(values[0, 0, 0], 0.0)
        inside = np.linalg.norm(field.coordinates(), axis=-1) <= 1.0
        self.assertGreater(volume_iou(values.reshape(-1) > 0.5, inside), 0.75)

    def test_explicit_bbox(self):
        cloud = PointCloud(fibonacci_sphere(2000, 0.5))
        field = voxelize_pointcloud(cloud, 10, 0.0, bbox=([-1, -1, -1], [1, 1, 1]))
        np.testing.assert_array_equal(field.grid.lower, [-1, -1, -1])


class MarchingCubesTests(SimpleTestCase):
    def test_sphere_vertices_near_analytic_surface(self):
        grid = GridSpec.cube([-1.5] * 3, [1.5] * 3, 64)
        sdf = 1.0 - np.linalg.norm(grid.points(), axis=-1)
        mesh = marching_cubes(ScalarField(sdf, FieldKind.SDF, grid=grid))
        radial_error = np.abs(np.linalg.norm(mesh.vertices, axis=-1) - 1.0)
        self.assertLessEqual(radial_error.max(), 1.5 * grid.spacing[0])
        self.assertTrue(mesh.is_watertight)
        self.assertAlmostEqual(mesh.volume, 4 / 3 * math.pi, delta=0.05)

    def test_constant_fields_give_empty_mesh(self):
        grid = GridSpec.cube([0, 0, 0], [1, 1, 1], 8)
        for value in (0.0, 1.0):
            mesh = marching_cubes(ScalarField(np.full(512, value), FieldKind.OCCUPANCY, grid=grid))
            self.assertEqual(len(mesh.faces), 0)

    def test_occupancy_touching_boundary_is_closed(self):
        grid = GridSpec.cube([0, 0, 0], [1, 1, 1], 8)
        values = np.zeros(grid.shape)
        values[:4] = 1.0
        mesh = marching_cubes(ScalarField(values, FieldKind.OCCUPANCY, grid=grid))
        self.assertTrue(mesh.is_watertight)
        self.assertGreater(mesh.volume, 0)

    def test_iso_shift_invariance(self):
        field = box_occupancy_grid(resolution=20)
        shifted = ScalarField(field.values - 0.5, FieldKind.SDF, grid=field.grid)
        a = marching_cubes(field, 0.5)
        b = marching_cubes(shifted, 0.0)
        np.testing.assert_allclose(a.vertices, b.vertices)
        np.testing.assert_array_equal(a.faces, b.faces)

    def test_needs_3d_grid(self):
        grid = GridSpec.cube([0, 0], [1, 1], 4)
        with self.assertRaises(InvalidParameterError):
            marching_cubes(ScalarField(np.zeros(16), grid=grid))


class ScadExportTests(SimpleTestCase):
    def test_cylinder_exports_one_circular_extrusion(self):
        script = export_scad(cylinder_model(), polyline_samples=100)
        self.assertEqual(script.count("linear_extrude"), 1)
        self.assertEqual(script.count("polygon("), 1)
        start = script.index("polygon(")
        numbers = re.findall(r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?", script[start:script.index(")", start)])
        vertices = np.array([float(v) for v in numbers]).reshape(-1, 2)
        self.assertEqual(len(vertices), 400)
        np.testing.assert_allclose(np.linalg.norm(vertices, axis=-1), 1.0, atol=1e-3)

    def test_polyline_lies_on_circle(self):
        outline = sketch_polyline(cylinder_model().primitives[0], 50)
        self.assertEqual(outline.shape, (200, 2))
        np.testing.assert_allclose(np.linalg.norm(outline, axis=-1), 1.0, atol=1e-12)

    def test_difference_structure(self):
        script = export_scad(box_minus_rod())
        self.assertIn("difference", script)
        self.assertEqual(script.count("multmatrix"), 2)

    def test_empty_model_is_empty_union(self):
        model = ShapeModel(cylinder_model().primitives, hard_stump([0.0], [[1.0]], [0.0]), 100.0)
        script = export_scad(model)
        self.assertIn("union", script)
        self.assertNotIn("linear_extrude", script)

    def test_complement_only_node_uses_bbox_cube(self):
        model = box_minus_rod()
        model = ShapeModel(model.primitives[1:], hard_stump([1.0], [[1.0]], [1.0]), 100.0, model.metadata)
        script = export_scad(model)
        self.assertIn("cube", script)
        self.assertIn("difference", script)

    def test_soft_model_is_rejected(self):
        model = cylinder_model()
        soft = ShapeModel(model.primitives, StumpParams([0.1], [[0.9]], [0.8]), 100.0)
        with self.assertRaises(InvalidParameterError):
            export_scad(soft)
        with self.assertRaises(InvalidParameterError):
            polygon_occupancy(soft, np.zeros((1, 3)))

    def test_export_is_deterministic(self):
        self.assertEqual(export_scad(box_minus_rod()), export_scad(box_minus_rod()))

    def test_rasterized_export_matches_hard_occupancy(self):
        model = box_minus_rod()
        points = sample_testing_grid([-0.8, -0.8, 0.0], [0.8, 0.8, 1.0], 64, 0.15)
        exported = polygon_occupancy(model, points)
        internal = to_numpy(model_occupancy(model, points)) > 0.5
        self.assertGreater(exported.sum(), 0)
        self.assertGreaterEqual(volume_iou(exported, internal), 0.99)

    def test_universe_is_bounded_by_padded_bbox(self):
        model = box_minus_rod()
        model = ShapeModel(model.primitives[1:], hard_stump([1.0], [[1.0]], [1.0]), 100.0, model.metadata)
        inside = polygon_occupancy(model, [[0.7, -0.7, 0.9], [0.2, 0.0, 0.5], [5.0, 0.0, 0.5]])
        np.testing.assert_array_equal(inside, [True, False, False])


class MetricsTests(SimpleTestCase):
    def test_identical_shapes(self):
        mesh = trimesh.creation.icosphere(subdivisions=3)
        grid = box_occupancy_grid(resolution=16)
        report = compute_metrics((mesh, grid), (mesh, grid), n_surface_samples=2000)
        self.assertEqual(report.chamfer, 0.0)
        self.assertEqual(report.iou, 1.0)
        self.assertEqual(report.f1, 100.0)
        self.assertTrue(report.line().startswith("CD_raw=0.000000e+00 CD=0.000000 IoU=1.000000 F1=100.0000"))

    def test_disjoint_boxes(self):
        grid = GridSpec.cube([0, 0, 0], [10, 1, 1], 20)
        x = grid.points()[:, 0]
        a = ScalarField((x < 2).astype(float), FieldKind.OCCUPANCY, grid=grid)
        b = ScalarField((x > 8).astype(float), FieldKind.OCCUPANCY, grid=grid)
        box_a = trimesh.creation.box(extents=(1, 1, 1))
        box_b = box_a.copy()
        box_b.apply_translation((8, 0, 0))
        report = compute_metrics((box_a, a), (box_b, b), n_surface_samples=500)
        self.assertEqual(report.iou, 0.0)
        self.assertEqual(report.f1, 0.0)
        self.assertGreater(report.chamfer, 2 * 7 ** 2)

    def test_offset_spheres_against_monte_carlo(self):
        offset = np.array([0.1, 0.0, 0.0])
        sphere = trimesh.creation.icosphere(subdivisions=5)
        shifted = sphere.copy()
        shifted.apply_translation(offset)
        measured = chamfer_distance(surface_samples(sphere, 100000, seed=1),
                                    surface_samples(shifted, 100000, seed=2))

        rng = np.random.default_rng(0)
        q = rng.normal(size=(1000000, 3))
        q /= np.linalg.norm(q, axis=-1, keepdims=True)
        # Distance from a point on one unit sphere to the surface of the other
        gaps = np.abs(np.linalg.norm(q - offset, axis=-1) - 1.0)
        expected = 2 * np.mean(gaps ** 2)
        self.assertAlmostEqual(measured / expected, 1.0, delta=0.05)

    def test_empty_surface(self):
        with self.assertRaises(InvalidParameterError):
            surface_samples(trimesh.Trimesh(), 100)
        with self.assertRaises(InvalidParameterError):
            chamfer_distance(np.zeros((0, 3)), np.zeros((4, 3)))

    def test_grid_layouts_must_match(self):
        mesh = trimesh.creation.box()
        with self.assertRaises(InvalidParameterError):
            compute_metrics((mesh, box_occupancy_grid(resolution=8)), (mesh, box_occupancy_grid(resolution=9)))


class FormatTests(SimpleTestCase):
    def test_grid_field_round_trip(self):
        rng = np.random.default_rng(3)
        grid = GridSpec([-1.5, -0.25], [1.5, 2.0], (5, 7))
        field = ScalarField(rng.normal(size=35), FieldKind.SDF, grid=grid)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "field.grid"
            save_field(field, path)
            loaded = load_field(path)
        self.assertEqual(loaded.kind, FieldKind.SDF)
        np.testing.assert_array_equal(loaded.values, field.values)
        np.testing.assert_array_equal(loaded.grid.lower, grid.lower)
        self.assertEqual(loaded.grid.shape, (5, 7))

    def test_point_field_round_trip(self):
        rng = np.random.default_rng(4)
        field = ScalarField(rng.random(6), FieldKind.OCCUPANCY, points=rng.normal(size=(6, 3)))
        loaded = parse_field(render_field(field))
        np.testing.assert_array_equal(loaded.points, field.points)
        np.testing.assert_array_equal(loaded.values, field.values)

    def test_field_parse_errors(self):
        text = render_field(box_occupancy_grid(resolution=3)).splitlines()
        broken = text[:9] + ["oops"] + text[10:]
        with self.assertRaises(FormatParseError) as ctx:
            parse_field("\n".join(broken), "t.grid")
        self.assertEqual(ctx.exception.line_number, 10)
        with self.assertRaises(FormatParseError):
            parse_field("\n".join(text[:-1]))
        with self.assertRaises(FormatParseError) as ctx:
            parse_field("not a field\n")
        self.assertEqual(ctx.exception.line_number, 1)

    def test_model_reserializes_bit_identically(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            text = render_model(random_model(rng))
            self.assertEqual(render_model(parse_model(text)), text)

    def test_model_file_round_trip(self):
        model = box_minus_rod()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "model.json"
            save_model(model, path)
            loaded = load_model(path)
        self.assertTrue(loaded.is_hard)
        self.assertEqual(loaded.metadata, model.metadata)
        self.assertEqual(render_model(loaded), render_model(model))

    def test_model_parse_errors(self):
        with self.assertRaises(FormatParseError) as ctx:
            parse_model('{\n  "eta": 1.0,\n  oops\n}', "m.json")
        self.assertEqual(ctx.exception.line_number, 3)
        with self.assertRaises(FormatParseError):
            parse_model('{"eta": 1.0}')
        with self.assertRaises(FormatParseError):
            parse_model("[1, 2]")

    def test_mesh_round_trip(self):
        mesh = trimesh.creation.box(extents=(1, 2, 3))
        with tempfile.TemporaryDirectory() as tmp:
            for name in ("box.stl", "box.obj"):
                path = Path(tmp) / name
                save_mesh(mesh, path)
                loaded = load_mesh(path)
                self.assertEqual(len(loaded.vertices), len(mesh.vertices))
                self.assertEqual(len(loaded.faces), len(mesh.faces))
            with self.assertRaises(InvalidParameterError):
                save_mesh(mesh, Path(tmp) / "box.ply")


class TargetTests(SimpleTestCase):
    def test_named_targets(self):
        self.assertEqual(make_target("circle", 16).kind, FieldKind.DISTANCE)
        self.assertEqual(make_target("star", 16).grid.shape, (16, 16))
        for name in ("box", "cylinder", "box_cylinder"):
            field = make_target(name, 12)
            self.assertEqual(field.kind, FieldKind.OCCUPANCY)
            self.assertGreater(field.values.sum(), 0)
            self.assertEqual(field.values[0, 0, 0], 0.0)

    def test_circle_distance_values(self):
        field = make_target("circle", 21)
        x, y = field.grid.axes()
        i, j = int(np.argmin(np.abs(x - 0.9))), int(np.argmin(np.abs(y)))
        self.assertAlmostEqual(field.values[i, j], abs(math.hypot(x[i], y[j]) - 1.0))

    def test_unknown_target(self):
        with self.assertRaises(InvalidParameterError):
            make_target("teapot")
