import numpy as np

from cli.base import KernelCommand, add_fit_arguments, fit_config
from extrude_cad.exceptions import InvalidParameterError
from sdf2d.distance import signed_distance_batch
from sdf2d.fields import FieldKind, GridSpec, ScalarField
from sdf2d.sampling import sample_sketch
from shapeio.formats import load_document, save_field
from shapeio.raster import export_bounds
from sketch.tensors import to_numpy
from stump.assembly import ShapeModel, model_occupancy


class Command(KernelCommand):
    help = "Evaluate a sketch SDF (2D) or a model occupancy (3D) on a regular grid"

    def add_arguments(self, parser):
        parser.add_argument("model", help="Sketch or shape model (JSON)")
        parser.add_argument("--out", required=True, help="Field file to write")
        parser.add_argument("--grid-resolution", type=int, default=64, help="Nodes per axis")
        parser.add_argument("--lower", type=float, nargs="+", default=None)
        parser.add_argument("--upper", type=float, nargs="+", default=None)
        parser.add_argument("--hard", action="store_true", help="Binary occupancy for shape models")
        add_fit_arguments(parser, ["samples", "refine", "nearest"])

    def handle(self, *args, **options):
        config = fit_config(options)
        document = load_document(options["model"])
        if isinstance(document, ShapeModel):
            lower, upper = export_bounds(document, config.samples_per_curve)
        else:
            lower, upper = -1.5 * np.ones(2), 1.5 * np.ones(2)
        lower = np.asarray(options["lower"]) if options["lower"] else lower
        upper = np.asarray(options["upper"]) if options["upper"] else upper
        grid = GridSpec.cube(lower, upper, options["grid_resolution"])

        if isinstance(document, ShapeModel):
            if grid.dim != 3:
                raise InvalidParameterError("Shape models are evaluated on 3D grids")
            values = model_occupancy(document, grid.points(), hard=True if options["hard"] else None,
                                     samples_per_curve=config.samples_per_curve, refine=config.refine)
            field = ScalarField(to_numpy(values.detach()), FieldKind.OCCUPANCY, grid=grid)
        else:
            field = signed_distance_batch(sample_sketch(document, config.samples_per_curve), grid,
                                          config.nearest, config.refine)
        save_field(field, options["out"])
        self.report(field=options["out"], kind=field.kind.value, shape="x".join(str(n) for n in grid.shape))
