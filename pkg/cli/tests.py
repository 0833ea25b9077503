import io
import json
import math
import re
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from extrude.pose import RigidPose
from extrude.solid import ExtrusionParams
from extrude_cad.exceptions import ConfigError, FormatParseError, InvalidParameterError, NonFiniteLossError
from fitting.models import FitRun
from sdf2d.fields import FieldKind
from sdf2d.oracles import box_sdf_3d
from shapeio.formats import load_field, load_mesh, load_model, load_sketch, save_field, save_model
from shapeio.pointcloud import load_pointcloud
from shapeio.targets import occupancy_grid
from sketch.rbezier import polygon_sketch
from stump.assembly import ShapeModel
from stump.layers import StumpMode, StumpParams
from .base import classify, error_line
from .runner import command_name, run

CUBE = ((-0.5, -0.5, 0.0), (0.5, 0.5, 0.8))


def cube_model(hard: bool = True) -> ShapeModel:
    prim = ExtrusionParams(polygon_sketch([0.5 * math.sqrt(2)] * 4, math.pi / 4),
                           RigidPose([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0]), 0.8)
    stump = StumpParams([0.0], [[1.0]], [1.0], StumpMode.HARD) if hard else StumpParams([0.1], [[0.8]], [0.9])
    return ShapeModel([prim], stump, 100.0, {"bbox_lower": list(CUBE[0]), "bbox_upper": list(CUBE[1]), "padding": 0.15})


def cube_target(resolution: int = 16):
    return occupancy_grid(lambda p: box_sdf_3d(p, *CUBE), CUBE[0], CUBE[1], resolution, 0.15)


def run_quietly(argv):
    stderr, stdout = io.StringIO(), io.StringIO()
    with redirect_stderr(stderr), redirect_stdout(stdout):
        code = run(argv)
    return code, stdout.getvalue(), stderr.getvalue()


class ErrorMappingTests(SimpleTestCase):
    def test_exit_codes(self):
        self.assertEqual(classify(FileNotFoundError("x")), ("missing_file", 3))
        self.assertEqual(classify(FormatParseError("x", "f", 2)), ("malformed", 4))
        self.assertEqual(classify(ConfigError("x")), ("malformed", 4))
        self.assertEqual(classify(InvalidParameterError("x")), ("invalid_parameter", 5))
        self.assertEqual(classify(NonFiniteLossError(3)), ("non_finite", 6))
        self.assertEqual(classify(RuntimeError("x")), ("internal", 1))

    def test_error_line_is_single_line(self):
        line = error_line("malformed", 'bad "value"\nnext')
        self.assertEqual(line, 'error=malformed detail="bad \\"value\\" next"')

    def test_command_names(self):
        self.assertEqual(command_name("eval-sdf"), "eval_sdf")
        self.assertEqual(command_name("fit2d"), "fit2d")


class RunnerTests(SimpleTestCase):
    def test_usage_errors(self):
        self.assertEqual(run_quietly([])[0], 2)
        self.assertEqual(run_quietly(["--help"])[0], 0)
        code, _, err = run_quietly(["teapot"])
        self.assertEqual(code, 2)
        self.assertIn("error=usage", err)

    def test_unknown_flag_reports_usage_error(self):
        code, _, err = run_quietly(["binarize", "model.json", "--out", "hard.json", "--bogus-flag"])
        self.assertEqual(code, 2)
        self.assertRegex(err, r'error=usage detail="[^"\n]*--bogus-flag[^"\n]*"')
        code, _, err = run_quietly(["fit2d", "--iters", "many"])
        self.assertEqual(code, 2)
        self.assertIn("error=usage", err)

    def test_bad_flag_in_call_command_raises(self):
        with self.assertRaises(CommandError):
            call_command("binarize", "--bogus-flag")

    def test_missing_file(self):
        code, _, err = run_quietly(["binarize", "/nonexistent/model.json", "--out", "/nonexistent/hard.json"])
        self.assertEqual(code, 3)
        self.assertIn("error=missing_file", err)

    def test_malformed_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "model.json"
            path.write_text('{"primitives": [}')
            code, _, err = run_quietly(["binarize", str(path), "--out", str(Path(tmp) / "hard.json")])
        self.assertEqual(code, 4)
        self.assertIn("error=malformed", err)

    def test_invalid_parameter(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "model.json"
            save_model(cube_model(hard=False), path)
            code, _, err = run_quietly(["binarize", str(path), "--out", str(Path(tmp) / "hard.json"),
                                        "--threshold", "1.5"])
        self.assertEqual(code, 5)
        self.assertIn("error=invalid_parameter", err)

    def test_success(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "model.json"
            save_model(cube_model(hard=False), path)
            code, out, _ = run_quietly(["binarize", str(path), "--out", str(Path(tmp) / "hard.json")])
            self.assertEqual(code, 0)
            self.assertIn("csg=", out)
            self.assertTrue(load_model(Path(tmp) / "hard.json").is_hard)


@override_settings(RECORD_FIT_RUNS=False)
class CommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, *args) -> str:
        out = io.StringIO()
        call_command(*[str(a) for a in args], stdout=out)
        return out.getvalue()

    def test_fit2d_writes_sketch_and_loss_csv(self):
        target = self.dir / "circle.grid"
        self.call("make_target", "circle", "--out", target, "--grid-resolution", 20)
        self.assertEqual(load_field(target).kind, FieldKind.DISTANCE)

        out = self.call("fit2d", "--target", target, "--iters", 5, "--samples", 10,
                        "--out", self.dir / "sketch.json", "--loss-csv", self.dir / "loss.csv", "--threads", 1)
        self.assertIn("iterations=5", out)
        self.assertEqual(load_sketch(self.dir / "sketch.json").n_curves, 4)
        lines = (self.dir / "loss.csv").read_text().splitlines()
        self.assertEqual(lines[0], "iteration,recon,prim,weight_reg,total,eta")
        self.assertEqual(len(lines), 6)

    def test_fit2d_is_byte_identical_across_runs(self):
        target = self.dir / "star.grid"
        self.call("make_target", "star", "--out", target, "--grid-resolution", 16)
        outputs = []
        for name in ("a", "b"):
            self.call("fit2d", "--target", target, "--iters", 4, "--samples", 10, "--seed", 3,
                      "--out", self.dir / f"{name}.json", "--loss-csv", self.dir / f"{name}.csv")
            outputs.append(((self.dir / f"{name}.json").read_bytes(), (self.dir / f"{name}.csv").read_bytes()))
        self.assertEqual(outputs[0], outputs[1])

    def test_fit2d_config_errors(self):
        target = self.dir / "circle.grid"
        self.call("make_target", "circle", "--out", target, "--grid-resolution", 8)
        config = self.dir / "fit.json"
        config.write_text(json.dumps({"iterations": 2, "unknown_knob": 1}))
        with self.assertRaises(CommandError) as ctx:
            self.call("fit2d", "--target", target, "--config", config)
        self.assertEqual(ctx.exception.returncode, 4)
        with self.assertRaises(CommandError) as ctx:
            self.call("fit2d", "--target", target, "--iters", -1)
        self.assertEqual(ctx.exception.returncode, 5)

    def test_fit3d_outputs(self):
        target = self.dir / "box.grid"
        self.call("make_target", "box", "--out", target, "--grid-resolution", 10)
        out = self.call("fit3d", "--target", target, "-K", 2, "-J", 2, "--iters", 3, "--restarts", 1,
                        "--resolution", 8, "--samples", 8, "--out", self.dir / "soft.json",
                        "--out-hard", self.dir / "hard.json", "--loss-csv", self.dir / "loss.csv")
        self.assertIn("restart=0", out)
        self.assertFalse(load_model(self.dir / "soft.json").is_hard)
        self.assertTrue(load_model(self.dir / "hard.json").is_hard)
        self.assertEqual(len((self.dir / "loss.csv").read_text().splitlines()), 4)

    def test_fit3d_from_point_cloud(self):
        cloud = self.dir / "box.xyz"
        self.call("make_target", "box", "--out", cloud, "--grid-resolution", 16, "--points", 2000)
        self.assertEqual(len(load_pointcloud(cloud)), 2000)
        self.call("fit3d", "--target", cloud, "-K", 1, "-J", 1, "--iters", 2, "--restarts", 1,
                  "--resolution", 8, "--samples", 8, "--out", self.dir / "soft.json",
                  "--out-hard", self.dir / "hard.json", "--loss-csv", self.dir / "loss.csv")
        self.assertTrue((self.dir / "hard.json").exists())

    def test_export_scad_with_rasterization_check(self):
        model = self.dir / "cube.json"
        save_model(cube_model(), model)
        out = self.call("export", model, "--format", "scad", "--check", "--grid-resolution", 32)
        script = (self.dir / "cube.scad").read_text()
        self.assertEqual(script.count("linear_extrude"), 1)
        iou = float(re.search(r"iou=([0-9.]+)", out).group(1))
        self.assertGreaterEqual(iou, 0.99)

    def test_export_soft_model_to_scad_fails(self):
        model = self.dir / "soft.json"
        save_model(cube_model(hard=False), model)
        with self.assertRaises(CommandError) as ctx:
            self.call("export", model, "--format", "scad")
        self.assertEqual(ctx.exception.returncode, 5)

    def test_export_meshes(self):
        model = self.dir / "cube.json"
        save_model(cube_model(), model)
        for fmt in ("stl", "obj"):
            path = self.dir / f"cube_mesh.{fmt}"
            self.call("export", model, "--format", fmt, "--out", path, "--grid-resolution", 24)
            mesh = load_mesh(path)
            self.assertGreater(len(mesh.faces), 0)
            np.testing.assert_allclose(mesh.bounds, [CUBE[0], CUBE[1]], atol=0.1)

    def test_metrics_line(self):
        model = self.dir / "cube.json"
        gt = self.dir / "cube.grid"
        save_model(cube_model(), model)
        save_field(cube_target(16), gt)
        out = self.call("metrics", model, gt, "--samples", 2000)
        match = re.fullmatch(r"CD_raw=([0-9.e+-]+) CD=([0-9.e+-]+) IoU=([0-9.]+) F1=([0-9.]+)\n", out)
        self.assertIsNotNone(match, out)
        # CD is CD_raw in units of 1e-3
        scaled = float(match.group(2))
        self.assertAlmostEqual(scaled, float(match.group(1)) * 1e3, delta=1e-5 * max(1.0, scaled))
        self.assertGreater(float(match.group(3)), 0.9)

    def test_eval_sdf(self):
        model = self.dir / "cube.json"
        save_model(cube_model(), model)
        self.call("eval_sdf", model, "--out", self.dir / "occ.grid", "--grid-resolution", 8, "--hard")
        field = load_field(self.dir / "occ.grid")
        self.assertEqual(field.kind, FieldKind.OCCUPANCY)
        self.assertTrue(set(np.unique(field.values)) <= {0.0, 1.0})

        target = self.dir / "circle.grid"
        self.call("make_target", "circle", "--out", target, "--grid-resolution", 8)
        self.call("fit2d", "--target", target, "--iters", 0, "--out", self.dir / "sketch.json",
                  "--loss-csv", self.dir / "loss.csv")
        self.call("eval_sdf", self.dir / "sketch.json", "--out", self.dir / "sdf.grid", "--grid-resolution", 11)
        sdf = load_field(self.dir / "sdf.grid")
        self.assertEqual(sdf.grid.shape, (11, 11))
        self.assertGreater(sdf.values[5, 5], 0)

    def test_sdf_accuracy_table(self):
        out = self.call("sdf_accuracy", "--family", "circle", "--rates", 20, 40, "--grid-resolution", 21)
        lines = out.strip().splitlines()
        self.assertEqual(lines[0], "rate,max_error,mean_error")
        self.assertEqual(len(lines), 3)
        errors = [float(line.split(",")[1]) for line in lines[1:]]
        self.assertLess(errors[1], errors[0])


@override_settings(RECORD_FIT_RUNS=True)
class LedgerCommandTests(TestCase):
    def test_fit2d_records_completed_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            call_command("make_target", "circle", "--out", str(tmp / "circle.grid"), "--grid-resolution", "8",
                         stdout=io.StringIO())
            call_command("fit2d", "--target", str(tmp / "circle.grid"), "--iters", "2", "--samples", "10",
                         "--out", str(tmp / "sketch.json"), "--loss-csv", str(tmp / "loss.csv"),
                         stdout=io.StringIO())
        run = FitRun.objects.get()
        self.assertEqual(run.kind, "fit2d")
        self.assertEqual(run.status, "completed")
        self.assertEqual(run.iterations_run, 2)
        self.assertEqual(len(run.output_paths), 2)

    def test_failed_fit_is_recorded(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            save_field(cube_target(8), tmp / "cube.grid")
            with self.assertRaises(CommandError) as ctx:
                call_command("fit2d", "--target", str(tmp / "cube.grid"), "--iters", "2",
                             "--out", str(tmp / "sketch.json"), "--loss-csv", str(tmp / "loss.csv"))
        self.assertEqual(ctx.exception.returncode, 5)
        self.assertEqual(FitRun.objects.get().status, "failed")
