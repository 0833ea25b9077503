from pathlib import Path

from cli.base import KernelCommand
from extrude_cad.exceptions import InvalidParameterError
from sdf2d.fields import FieldKind, ScalarField
from shapeio.formats import load_document, load_field, load_mesh
from shapeio.mesh import marching_cubes
from shapeio.metrics import compute_metrics
from sketch.tensors import to_numpy
from stump.assembly import ShapeModel, model_occupancy


class Command(KernelCommand):
    help = "Chamfer distance, volumetric IoU and surface F1 of a prediction against a ground truth"

    def add_arguments(self, parser):
        parser.add_argument("pred", help="Shape model (JSON) or 3D field file")
        parser.add_argument("gt", help="Ground-truth 3D occupancy or SDF grid file")
        parser.add_argument("--gt-mesh", default=None, help="Ground-truth mesh; extracted from the grid if omitted")
        parser.add_argument("--samples", type=int, default=10000, help="Surface samples per shape")
        parser.add_argument("--f1-threshold", type=float, default=None,
                            help="Defaults to 2%% of the ground-truth bbox diagonal")
        parser.add_argument("--seed", type=int, default=0)

    def handle(self, *args, **options):
        gt_grid = load_field(options["gt"])
        if not gt_grid.is_grid or gt_grid.dim != 3:
            raise InvalidParameterError("The ground truth must be a 3D grid field")
        gt_mesh = load_mesh(options["gt_mesh"]) if options["gt_mesh"] else marching_cubes(gt_grid)

        if Path(options["pred"]).suffix.lower() == ".json":
            model = load_document(options["pred"])
            if not isinstance(model, ShapeModel):
                raise InvalidParameterError("metrics needs a shape model, not a bare sketch")
            values = to_numpy(model_occupancy(model, gt_grid.coordinates(), hard=True))
            pred_grid = ScalarField(values, FieldKind.OCCUPANCY, grid=gt_grid.grid)
        else:
            pred_grid = load_field(options["pred"])

        report = compute_metrics((marching_cubes(pred_grid), pred_grid), (gt_mesh, gt_grid),
                                 options["samples"], options["f1_threshold"], options["seed"])
        self.stdout.write(report.line())
