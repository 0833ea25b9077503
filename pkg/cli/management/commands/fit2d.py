from pathlib import Path

from cli.base import KernelCommand, add_fit_arguments, fit_config
from fitting import ledger
from fitting.sketch_fit import fit_sketch_2d
from shapeio.formats import load_field, save_sketch


class Command(KernelCommand):
    help = "Fit one sketch to a 2D distance-field grid; writes the sketch and its loss CSV"

    def add_arguments(self, parser):
        parser.add_argument("--target", required=True, help="2D distance-field file")
        parser.add_argument("--out", default="sketch.json", help="Fitted sketch (JSON)")
        parser.add_argument("--loss-csv", default="loss.csv", help="Per-iteration loss history")
        add_fit_arguments(parser, ["iters", "lr", "seed", "samples", "curves", "continuity", "sketch_type",
                                   "gradient_mode", "fd_step", "refine", "nearest"])

    def handle(self, *args, **options):
        config = fit_config(options)
        target = load_field(options["target"])
        run = ledger.start_run("fit2d", config, options["target"])
        try:
            result = fit_sketch_2d(target, config)
        except Exception as e:
            ledger.fail_run(run, e)
            raise

        out, loss_csv = Path(options["out"]), Path(options["loss_csv"])
        save_sketch(result.params, out)
        result.report.to_csv(loss_csv)
        ledger.finish_run(run, result.best_loss, result.iterations_run, [out, loss_csv])
        self.report(loss=f"{result.best_loss:.6e}", iterations=result.iterations_run,
                    best_iteration=result.best_iteration, model=out, loss_csv=loss_csv)
