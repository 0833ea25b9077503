from pathlib import Path

from cli.base import KernelCommand, add_fit_arguments, fit_config
from fitting import ledger
from fitting.shape_fit import fit_shapes_3d
from shapeio.formats import load_field, save_model
from shapeio.pointcloud import load_pointcloud
from stump.csg import describe

POINT_CLOUD_SUFFIXES = {".xyz", ".ply", ".txt"}


class Command(KernelCommand):
    help = "Fit K extrusions and a J-node stump to a 3D occupancy grid or point cloud"

    def add_arguments(self, parser):
        parser.add_argument("--target", required=True, help="3D occupancy/SDF grid file, or an XYZ/PLY point cloud")
        parser.add_argument("-K", "--primitives", dest="primitives", type=int, default=4)
        parser.add_argument("-J", "--nodes", dest="nodes", type=int, default=4)
        parser.add_argument("--out", default="model.json", help="Soft model (JSON)")
        parser.add_argument("--out-hard", default="model_hard.json", help="Binarized model (JSON)")
        parser.add_argument("--loss-csv", default="loss.csv", help="Loss history of the best restart")
        add_fit_arguments(parser, ["iters", "lr", "seed", "lambda_p", "lambda_w", "eta", "eta_doubling",
                                   "samples", "curves", "sketch_type", "gradient_mode", "fd_step", "refine",
                                   "nearest", "restarts", "resolution", "padding", "threshold"])

    def handle(self, *args, **options):
        config = fit_config(options)
        path = Path(options["target"])
        if path.suffix.lower() in POINT_CLOUD_SUFFIXES:
            target = load_pointcloud(path)
        else:
            target = load_field(path)

        run = ledger.start_run("fit3d", config, path)
        try:
            result = fit_shapes_3d(target, options["primitives"], options["nodes"], config)
        except Exception as e:
            ledger.fail_run(run, e)
            raise

        out, out_hard, loss_csv = Path(options["out"]), Path(options["out_hard"]), Path(options["loss_csv"])
        save_model(result.model, out)
        save_model(result.hard_model, out_hard)
        result.report.to_csv(loss_csv)
        ledger.finish_run(run, result.best_loss, result.iterations_run, [out, out_hard, loss_csv])
        self.report(loss=f"{result.best_loss:.6e}", restart=result.restart, iterations=result.iterations_run,
                    model=out, hard_model=out_hard, loss_csv=loss_csv)
        self.stdout.write(f"csg={describe(result.hard_model.csg())}")
