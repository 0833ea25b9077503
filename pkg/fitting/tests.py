import json
import logging
import math
import tempfile
from pathlib import Path

import numpy as np
import torch
from django.test import SimpleTestCase, TestCase, override_settings, tag

from extrude.pose import RigidPose
from extrude.solid import ExtrusionParams, occupancy, primitive_sdf_batch
from extrude_cad.exceptions import ConfigError, InvalidParameterError, NonFiniteLossError
from sdf2d.distance import sdf_values
from sdf2d.fields import FieldKind, GridSpec, ScalarField
from sdf2d.sampling import sample_sketch
from shapeio.grids import occupied_bbox, sample_testing_grid, volume_iou
from shapeio.pointcloud import PointCloud
from shapeio.raster import export_bounds, polygon_occupancy
from shapeio.targets import BOX, box_cylinder_occupancy_grid, box_occupancy_grid, circle_distance_grid, star_distance_grid
from sketch.params import ContinuityMode, SketchParams
from sketch.rbezier import circle_sketch
from sketch.tensors import DTYPE, as_tensor, to_numpy
from stump.assembly import model_occupancy
from stump.layers import evaluate
from .config import FitConfig, GradientMode, SketchType
from .env_utils import load_fit_defaults
from .ledger import fail_run, finish_run, start_run
from .losses import loss_primitive, loss_reconstruction, loss_weight_reg, primitive_loss_from_sdf, total_loss
from .models import FitRun
from .optimize import LossTerms, gradient, run_adam
from .report import LossReport
from .shape_fit import ShapeVariables, _fit_once, fit_shapes_3d, testing_set
from .sketch_fit import fit_sketch_2d, sketch_variables

logger = logging.getLogger(__name__)


def unit_cylinder(translation=(0.0, 0.0, 0.0)) -> ExtrusionParams:
    return ExtrusionParams(circle_sketch(4, 1.0), RigidPose([1.0, 0.0, 0.0, 0.0], translation), 1.0)


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    scale = torch.clamp(numeric.abs(), min=1e-4)
    return float(((analytic - numeric).abs() / scale).max())


def _sketch_sdf(params, points, config):
    return sdf_values(sample_sketch(params, config.samples_per_curve), points, config.nearest, config.refine)


class FitConfigTests(SimpleTestCase):
    def test_defaults_follow_settings(self):
        config = FitConfig.load()
        defaults = load_fit_defaults()
        self.assertEqual(config.learning_rate, defaults["learning_rate"])
        self.assertEqual(config.iterations, defaults["iterations"])
        self.assertEqual(config.restarts, defaults["restarts"])

    def test_file_then_overrides(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "fit.json"
            path.write_text(json.dumps({"iterations": 10, "lambda_p": 0.5, "sketch_type": "circle"}))
            config = FitConfig.load(path, iterations=20, seed=None)
        self.assertEqual(config.iterations, 20)
        self.assertEqual(config.lambda_p, 0.5)
        self.assertEqual(config.sketch_type, SketchType.CIRCLE)
        self.assertEqual(config.seed, load_fit_defaults()["seed"])

    def test_malformed_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "fit.json"
            path.write_text(json.dumps({"iterations": 10, "learning_rte": 0.1}))
            with self.assertRaises(ConfigError):
                FitConfig.load(path)
            path.write_text("{\n  \"iterations\": \n")
            with self.assertRaises(ConfigError):
                FitConfig.load(path)
            path.write_text("[1, 2]")
            with self.assertRaises(ConfigError):
                FitConfig.load(path)
        with self.assertRaises(FileNotFoundError):
            FitConfig.load("/nonexistent/fit.json")

    def test_unknown_override(self):
        with self.assertRaises(ConfigError):
            FitConfig.load(iters=3)

    def test_invalid_values(self):
        for bad in ({"learning_rate": 0.0}, {"fd_step": 0.1}, {"iterations": -1}, {"lambda_w": -1.0},
                    {"gradient_mode": "symbolic"}, {"threshold": 1.0}, {"restarts": 0}):
            with self.assertRaises(InvalidParameterError, msg=str(bad)):
                FitConfig(**bad)

    def test_zero_iterations_allowed(self):
        self.assertEqual(FitConfig(iterations=0).iterations, 0)

    def test_to_dict_is_json(self):
        data = json.loads(json.dumps(FitConfig().to_dict()))
        self.assertEqual(data["gradient_mode"], "analytic")
        self.assertEqual(FitConfig(**data), FitConfig())


class LossTests(SimpleTestCase):
    def test_reconstruction_examples(self):
        target = torch.tensor([0.0, 1.0, 1.0, 0.0], dtype=DTYPE)
        self.assertEqual(float(loss_reconstruction(target, target)), 0.0)
        self.assertEqual(float(loss_reconstruction(1 - target, target)), 1.0)
        self.assertEqual(float(loss_reconstruction([0.5], [0.0])), 0.25)

    def test_reconstruction_errors(self):
        with self.assertRaises(InvalidParameterError):
            loss_reconstruction([0.5, 0.5], [0.0])
        with self.assertRaises(InvalidParameterError):
            loss_reconstruction([], [])

    def test_primitive_loss_zero_when_surfaces_touch(self):
        sdf = torch.tensor([[0.0, 0.3], [0.5, 0.0], [-0.2, 1.0]], dtype=DTYPE)
        self.assertEqual(float(primitive_loss_from_sdf(sdf)), 0.0)

    def test_primitive_loss_far_cylinder(self):
        d = 0.5
        points = torch.tensor([[1.0 + d, 0.0, 0.5], [3.0, 0.0, 0.5]], dtype=DTYPE)
        self.assertAlmostEqual(float(loss_primitive([unit_cylinder()], points)), d ** 2, places=6)
        # Mean over primitives: a duplicate changes nothing
        self.assertAlmostEqual(float(loss_primitive([unit_cylinder()] * 2, points)), d ** 2, places=6)

    def test_primitive_loss_needs_inputs(self):
        with self.assertRaises(InvalidParameterError):
            loss_primitive([], torch.zeros((3, 3), dtype=DTYPE))
        with self.assertRaises(InvalidParameterError):
            loss_primitive([unit_cylinder()], torch.zeros((0, 3), dtype=DTYPE))

    def test_weight_reg_examples(self):
        self.assertEqual(float(loss_weight_reg([SketchParams.unit_start(4)])), 0.0)
        weights = torch.ones(8, dtype=DTYPE)
        weights[3] = 2.0
        self.assertEqual(float(loss_weight_reg([SketchParams(4, torch.ones(12, dtype=DTYPE), weights)])), 1.0)
        w = (1 + 2 * math.cos(math.pi / 4)) / 3
        for mode in ContinuityMode:
            reg = float(loss_weight_reg([circle_sketch(4, 1.0, continuity_mode=mode)]))
            self.assertAlmostEqual(reg, 8 * (w - 1) ** 2, places=9)
            self.assertAlmostEqual(reg, 0.305, places=3)

    def test_total_loss(self):
        self.assertAlmostEqual(total_loss(1.0, 2.0, 3.0, 0.1, 0.01), 1.23)


class GradientTests(SimpleTestCase):
    def test_weight_reg_stationary_at_unit_weights(self):
        raw_radii = torch.zeros(12, dtype=DTYPE, requires_grad=True)
        raw_weights = torch.zeros(8, dtype=DTYPE, requires_grad=True)
        grad = gradient([raw_radii, raw_weights],
                        lambda: loss_weight_reg([SketchParams.from_unconstrained(raw_radii, raw_weights, 4)]))
        self.assertEqual(float(grad.abs().max()), 0.0)

    def test_reconstruction_stationary_at_target(self):
        x = torch.linspace(-2, 2, 7, dtype=DTYPE).requires_grad_(True)
        target = torch.sigmoid(x).detach()
        grad = gradient([x], lambda: loss_reconstruction(torch.sigmoid(x), target))
        self.assertEqual(float(grad.abs().max()), 0.0)

    def test_sketch_objective_matches_finite_differences(self):
        target = circle_distance_grid(12, radius=0.9)
        points = as_tensor(target.coordinates())
        values = as_tensor(target.flat_values())
        for seed in range(5):
            config = FitConfig(init_jitter=0.2, seed=seed, samples_per_curve=30)
            variables, build = sketch_variables(config, np.random.default_rng(seed))

            def loss():
                sdf, _ = _sketch_sdf(build(variables), points, config)
                return loss_reconstruction(torch.abs(sdf), values) + 0.1 * loss_weight_reg([build(variables)])

            analytic = gradient(variables, loss)
            numeric = gradient(variables, loss, GradientMode.FINITE_DIFFERENCE, 1e-5)
            self.assertLessEqual(relative_error(analytic, numeric), 1e-3, msg=f"seed {seed}")

    def test_shape_objective_matches_finite_differences(self):
        lower, upper = np.array([-0.6, -0.4, 0.0]), np.array([0.6, 0.4, 0.8])
        points = as_tensor(sample_testing_grid(lower, upper, 5, 0.15))
        for seed in range(3):
            rng = np.random.default_rng(seed)
            config = FitConfig(samples_per_curve=20, init_jitter=0.1, eta=10.0)
            variables = ShapeVariables(config, 2, 2, lower, upper, rng)
            target = as_tensor(rng.integers(0, 2, points.shape[0]).astype(float))

            def loss():
                prims = variables.primitives()
                sdf = primitive_sdf_batch(prims, points, config.samples_per_curve)
                final = evaluate(variables.stump(), occupancy(sdf, config.eta))
                return total_loss(loss_reconstruction(final, target), primitive_loss_from_sdf(sdf),
                                  loss_weight_reg(p.sketch for p in prims), 0.01, 0.001)

            analytic = gradient(variables.tensors(), loss)
            numeric = gradient(variables.tensors(), loss, GradientMode.FINITE_DIFFERENCE, 1e-5)
            self.assertLessEqual(relative_error(analytic, numeric), 1e-3, msg=f"seed {seed}")

    def test_unused_variables_get_zero(self):
        used = torch.ones(2, dtype=DTYPE, requires_grad=True)
        unused = torch.ones(3, dtype=DTYPE, requires_grad=True)
        grad = gradient([used, unused], lambda: (used ** 2).sum())
        np.testing.assert_array_equal(to_numpy(grad), [2, 2, 0, 0, 0])


class LossReportTests(SimpleTestCase):
    def make_report(self) -> LossReport:
        report = LossReport(lambda_p=0.1, lambda_w=0.01)
        for i, (recon, prim, reg) in enumerate([(1.0, 2.0, 3.0), (0.5, 1.0, 1.0), (0.7, 0.0, 0.0), (0.2, 1.0, 0.0)]):
            report.append(i, recon, prim, reg, recon + 0.1 * prim + 0.01 * reg, 100.0)
        return report

    def test_decomposition(self):
        self.assertLess(self.make_report().decomposition_error(), 1e-12)

    def test_best_iteration_and_windows(self):
        report = self.make_report()
        self.assertEqual(report.best_iteration(), 3)
        self.assertEqual(report.window_minima(2), [report.total[1], report.total[3]])
        self.assertIsNone(LossReport(0, 0).best_iteration())

    def test_csv_round_trip(self):
        report = self.make_report()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "loss.csv"
            report.to_csv(path)
            self.assertEqual(path.read_text().splitlines()[0], "iteration,recon,prim,weight_reg,total,eta")
            loaded = LossReport.from_csv(path, 0.1, 0.01)
        self.assertEqual(loaded.total, report.total)
        self.assertEqual(loaded.column("iteration"), [0, 1, 2, 3])


class RunAdamTests(SimpleTestCase):
    def test_non_finite_loss_aborts(self):
        x = torch.ones(1, dtype=DTYPE, requires_grad=True)

        def objective(iteration):
            value = (x ** 2).sum() if iteration < 2 else torch.log(-x.sum())
            zero = torch.zeros((), dtype=DTYPE)
            return LossTerms(value, value, zero, zero, 1.0)

        report = LossReport(0, 0)
        with self.assertRaises(NonFiniteLossError) as ctx:
            run_adam([x], objective, FitConfig(iterations=10), report)
        self.assertEqual(ctx.exception.iteration, 2)
        self.assertEqual(ctx.exception.last_row["iteration"], 1)

    def test_stops_at_tolerance(self):
        x = torch.zeros(1, dtype=DTYPE, requires_grad=True)

        def objective(iteration):
            value = (x ** 2).sum()
            return LossTerms(value, value, value * 0, value * 0, 1.0)

        outcome = run_adam([x], objective, FitConfig(iterations=50), LossReport(0, 0))
        self.assertEqual(outcome.iterations_run, 1)
        self.assertEqual(outcome.best_iteration, 0)


class SketchFitTests(SimpleTestCase):
    def test_zero_iterations_returns_initialisation(self):
        result = fit_sketch_2d(circle_distance_grid(16), FitConfig(iterations=0, init_jitter=0.0))
        self.assertEqual(result.iterations_run, 0)
        self.assertEqual(len(result.report), 0)
        self.assertTrue(torch.equal(result.params.radii, torch.ones(12, dtype=DTYPE)))
        self.assertTrue(torch.equal(result.params.weights, torch.ones(8, dtype=DTYPE)))

    def test_short_fit_decreases_loss(self):
        config = FitConfig(iterations=60, samples_per_curve=25, log_every=1000)
        result = fit_sketch_2d(circle_distance_grid(24), config)
        totals = result.report.total
        self.assertEqual(len(totals), 60)
        self.assertLess(result.best_loss, totals[0])
        self.assertLess(min(totals[-10:]), totals[0])
        self.assertLessEqual(result.report.decomposition_error(), 1e-10)
        self.assertTrue(all(r == 0.0 for r in result.report.column("prim")))

    def test_fixed_seed_is_deterministic(self):
        config = FitConfig(iterations=15, samples_per_curve=20, seed=4)
        a = fit_sketch_2d(star_distance_grid(20), config)
        b = fit_sketch_2d(star_distance_grid(20), config)
        self.assertEqual(a.report.total, b.report.total)
        self.assertTrue(torch.equal(a.params.radii, b.params.radii))

    def test_finite_difference_mode_tracks_analytic(self):
        target = circle_distance_grid(16, radius=1.2)
        base = dict(iterations=5, sketch_type="circle", samples_per_curve=20)
        analytic = fit_sketch_2d(target, FitConfig(**base))
        numeric = fit_sketch_2d(target, FitConfig(gradient_mode="finite_difference", **base))
        np.testing.assert_allclose(numeric.report.total, analytic.report.total, rtol=1e-5)

    def test_sketch_types(self):
        target = circle_distance_grid(16)
        for sketch_type, radii in (("circle", 12), ("polygon", 12), ("freeform", 12)):
            result = fit_sketch_2d(target, FitConfig(iterations=3, sketch_type=sketch_type, samples_per_curve=10))
            self.assertEqual(result.params.radii.numel(), radii)
        fixed = fit_sketch_2d(target, FitConfig(iterations=3, optimize_weights=False, init_jitter=0.0,
                                                samples_per_curve=10))
        self.assertTrue(torch.equal(fixed.params.weights, torch.ones(8, dtype=DTYPE)))

    def test_rejects_bad_targets(self):
        grid = GridSpec.cube([0, 0, 0], [1, 1, 1], 3)
        with self.assertRaises(InvalidParameterError):
            fit_sketch_2d(ScalarField(np.zeros(27), FieldKind.DISTANCE, grid=grid), FitConfig(iterations=1))
        grid = GridSpec.cube([0, 0], [1, 1], 3)
        with self.assertRaises(InvalidParameterError):
            fit_sketch_2d(ScalarField(np.zeros(9), FieldKind.OCCUPANCY, grid=grid), FitConfig(iterations=1))

    @tag("slow")
    def test_circle_recovery(self):
        config = FitConfig(iterations=2000, refine="segment", log_every=500)
        result = fit_sketch_2d(circle_distance_grid(64), config)
        self.assertLessEqual(result.best_loss, 1e-6)

        loop = to_numpy(sample_sketch(result.params, 2500).samples)
        self.assertLessEqual(np.abs(np.linalg.norm(loop, axis=-1) - 1.0).max(), 5e-3)

        minima = result.report.window_minima(200)
        for previous, current in zip(minima, minima[1:]):
            if previous <= config.tolerance:
                break
            self.assertLess(current, previous)

    @tag("slow")
    def test_star_fit(self):
        result = fit_sketch_2d(star_distance_grid(64), FitConfig(iterations=2000, log_every=500))
        self.assertLessEqual(result.best_loss, 0.1 * result.report.total[0])


class ShapeFitTests(SimpleTestCase):
    def small_config(self, **overrides) -> FitConfig:
        values = dict(iterations=4, restarts=1, grid_resolution=8, samples_per_curve=10, log_every=1000)
        values.update(overrides)
        return FitConfig(**values)

    def test_report_decomposes(self):
        config = self.small_config(eta_doubling_interval=2, eta=50.0)
        result = fit_shapes_3d(box_occupancy_grid(resolution=8), 2, 2, config)
        self.assertEqual(result.iterations_run, 4)
        self.assertLessEqual(result.report.decomposition_error(), 1e-10)
        self.assertEqual(result.report.column("eta"), [50.0, 50.0, 100.0, 100.0])
        self.assertTrue(result.hard_model.is_hard)
        self.assertFalse(result.model.is_hard)
        self.assertEqual(len(result.model.primitives), 2)
        np.testing.assert_allclose(result.model.bbox()[0], BOX[0], atol=0.2)
        self.assertEqual(result.model.metadata["padding"], 0.15)

    def test_loss_at_initialisation_of_matching_target(self):
        config = self.small_config(iterations=1)
        lower, upper = np.array(BOX[0]), np.array(BOX[1])
        points = as_tensor(sample_testing_grid(lower, upper, 8, config.padding))

        torch.manual_seed(config.seed)
        variables = ShapeVariables(config, 2, 3, lower, upper, np.random.default_rng(config.seed))
        with torch.no_grad():
            prims = variables.primitives()
            sdf = primitive_sdf_batch(prims, points, config.samples_per_curve)
            target = evaluate(variables.stump(), occupancy(sdf, config.eta))
            prim = float(primitive_loss_from_sdf(sdf))
            weight_reg = float(loss_weight_reg(p.sketch for p in prims))

        result = _fit_once(points, target, lower, upper, 2, 3, config, restart=0)
        row = result.report.rows[0]
        self.assertAlmostEqual(row["recon"], 0.0, places=12)
        self.assertAlmostEqual(row["total"], config.lambda_p * prim + config.lambda_w * weight_reg, places=10)

    def test_restarts_keep_best(self):
        result = fit_shapes_3d(box_occupancy_grid(resolution=8), 1, 1, self.small_config(restarts=2))
        self.assertIn(result.restart, (0, 1))
        self.assertEqual(result.model.metadata["seed"], result.restart)

    def test_point_cloud_target(self):
        rng = np.random.default_rng(0)
        lower, upper = np.array(BOX[0]), np.array(BOX[1])
        faces = rng.uniform(lower, upper, (3000, 3))
        axis = rng.integers(0, 3, 3000)
        side = rng.integers(0, 2, 3000)
        faces[np.arange(3000), axis] = np.where(side == 1, upper[axis], lower[axis])
        points, values, bbox_lower, bbox_upper = testing_set(PointCloud(faces), self.small_config(grid_resolution=12))
        self.assertEqual(points.shape, (12 ** 3, 3))
        self.assertGreater(float(values.sum()), 0)
        np.testing.assert_allclose(bbox_lower, lower, atol=0.15)

    def test_testing_set_resamples_to_config_resolution(self):
        points, values, _, _ = testing_set(box_occupancy_grid(resolution=20), self.small_config(grid_resolution=10))
        self.assertEqual(points.shape[0], 1000)
        self.assertEqual(values.shape[0], 1000)

    def test_padding_controls_testing_grid(self):
        field = box_occupancy_grid(resolution=20)
        lower, upper = occupied_bbox(field)

        points, values, bbox_lower, bbox_upper = testing_set(field, self.small_config(padding=0.0))
        points = to_numpy(points)
        np.testing.assert_allclose(bbox_lower, lower)
        np.testing.assert_allclose(points.min(axis=0), lower, atol=1e-12)
        np.testing.assert_allclose(points.max(axis=0), upper, atol=1e-12)
        self.assertGreater(float(values.sum()), 0)

        points, values, _, _ = testing_set(field, self.small_config(padding=0.5))
        points, values = to_numpy(points), to_numpy(values)
        np.testing.assert_allclose(points.min(axis=0), lower - 0.5 * (upper - lower), atol=1e-12)
        np.testing.assert_allclose(points.max(axis=0), upper + 0.5 * (upper - lower), atol=1e-12)
        # Beyond the target grid is empty space
        outside = np.any((points < field.lower) | (points > field.upper), axis=1)
        self.assertTrue(outside.any())
        self.assertTrue(np.all(values[outside] == 0.0))

    def test_invalid_inputs(self):
        with self.assertRaises(InvalidParameterError):
            fit_shapes_3d(box_occupancy_grid(resolution=8), 0, 1, self.small_config())
        with self.assertRaises(InvalidParameterError):
            fit_shapes_3d(box_occupancy_grid(resolution=8), 1, 0, self.small_config())
        with self.assertRaises(InvalidParameterError):
            fit_shapes_3d(circle_distance_grid(8), 1, 1, self.small_config())


def evaluation_iou(result, target: ScalarField) -> float:
    points = target.coordinates()
    predicted = to_numpy(model_occupancy(result.hard_model, points)) > 0.5
    return volume_iou(predicted, target.flat_values() > 0.5)


def export_grid(model) -> np.ndarray:
    lower, upper = export_bounds(model)
    return GridSpec.cube(lower, upper, 64).points()


@tag("slow")
class ShapeFitAcceptanceTests(SimpleTestCase):
    config = dict(iterations=1500, grid_resolution=24, samples_per_curve=25, log_every=500)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.box = fit_shapes_3d(box_occupancy_grid(resolution=32), 1, 1, FitConfig(padding=0.15, **cls.config))
        cls.box_cylinder = fit_shapes_3d(box_cylinder_occupancy_grid(resolution=32), 4, 4, FitConfig(**cls.config))
        cls.unpadded_box = fit_shapes_3d(box_occupancy_grid(resolution=32), 1, 1,
                                         FitConfig(padding=0.0, **cls.config))

    def test_single_box(self):
        self.assertGreaterEqual(evaluation_iou(self.box, box_occupancy_grid(resolution=64)), 0.95)

    def test_box_and_cylinder(self):
        self.assertGreaterEqual(evaluation_iou(self.box_cylinder, box_cylinder_occupancy_grid(resolution=64)), 0.85)

    def test_padding_keeps_box_inside_bbox(self):
        points = box_occupancy_grid(resolution=64).coordinates()
        exterior = ~np.all((points >= BOX[0]) & (points <= BOX[1]), axis=1)
        occupied = to_numpy(model_occupancy(self.box.hard_model, points[exterior])) > 0.5
        self.assertLess(occupied.mean(), 0.01)

    def test_zero_padding_is_unconstrained_outside_bbox(self):
        # Nothing outside the bbox is sampled, so the solid may overshoot it; record by how much
        target = box_occupancy_grid(resolution=32)
        points, _, lower, upper = testing_set(target, FitConfig(padding=0.0, **self.config))
        half = target.grid.spacing / 2 + 1e-9
        np.testing.assert_array_less(np.abs(lower - np.array(BOX[0])), half)
        np.testing.assert_array_less(np.abs(upper - np.array(BOX[1])), half)
        np.testing.assert_allclose(to_numpy(points).min(axis=0), lower, atol=1e-12)
        np.testing.assert_allclose(to_numpy(points).max(axis=0), upper, atol=1e-12)

        evaluation = box_occupancy_grid(resolution=64).coordinates()
        predicted = to_numpy(model_occupancy(self.unpadded_box.hard_model, evaluation)) > 0.5
        interior = np.all((evaluation >= BOX[0]) & (evaluation <= BOX[1]), axis=1)
        overshoot = predicted[~interior].mean()
        logger.info("Unpadded box fit occupies %.2f%% of the space outside its bbox", 100 * overshoot)
        self.assertGreaterEqual(predicted[interior].mean(), 0.9)

    def test_soft_and_hard_models_agree(self):
        for result in (self.box, self.box_cylinder):
            points = export_grid(result.hard_model)
            soft = to_numpy(model_occupancy(result.model, points, hard=False)) > 0.5
            hard = to_numpy(model_occupancy(result.hard_model, points)) > 0.5
            self.assertLessEqual(np.mean(soft != hard), 0.02)

    def test_rasterized_export_matches_fit(self):
        for result in (self.box, self.box_cylinder):
            points = export_grid(result.hard_model)
            exported = polygon_occupancy(result.hard_model, points, polyline_samples=100)
            internal = to_numpy(model_occupancy(result.hard_model, points, samples_per_curve=100)) > 0.5
            self.assertGreater(internal.sum(), 0)
            self.assertGreaterEqual(volume_iou(exported, internal), 0.99)


class LedgerTests(TestCase):
    def test_successful_run(self):
        run = start_run("fit2d", FitConfig(iterations=3), "target.grid")
        self.assertEqual(run.status, "running")
        self.assertEqual(run.config["iterations"], 3)
        finish_run(run, 0.25, 3, [Path("model.json"), "loss.csv"])
        stored = FitRun.objects.get(pk=run.pk)
        self.assertEqual(stored.status, "completed")
        self.assertEqual(stored.final_loss, 0.25)
        self.assertEqual(stored.output_paths, ["model.json", "loss.csv"])
        self.assertIsNotNone(stored.finished_at)

    def test_zero_iteration_run_has_no_loss(self):
        run = start_run("fit3d", FitConfig(iterations=0))
        finish_run(run, math.inf, 0, [])
        self.assertIsNone(FitRun.objects.get(pk=run.pk).final_loss)

    def test_failed_run(self):
        run = start_run("fit3d", FitConfig())
        fail_run(run, NonFiniteLossError(7))
        stored = FitRun.objects.get(pk=run.pk)
        self.assertEqual(stored.status, "failed")
        self.assertIn("iteration 7", stored.error_message)

    @override_settings(RECORD_FIT_RUNS=False)
    def test_recording_disabled(self):
        self.assertIsNone(start_run("fit2d", FitConfig()))
        finish_run(None, 1.0, 1, [])
        self.assertEqual(FitRun.objects.count(), 0)
