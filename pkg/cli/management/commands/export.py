from pathlib import Path

from cli.base import KernelCommand
from extrude_cad.exceptions import InvalidParameterError
from sdf2d.fields import FieldKind, GridSpec, ScalarField
from shapeio.formats import load_document, save_mesh
from shapeio.grids import volume_iou
from shapeio.mesh import marching_cubes
from shapeio.raster import export_bounds, polygon_occupancy
from shapeio.scad import export_scad
from sketch.tensors import to_numpy
from stump.assembly import ShapeModel, model_occupancy


class Command(KernelCommand):
    help = "Export a shape model as an OpenSCAD script or a triangle mesh (STL/OBJ)"

    def add_arguments(self, parser):
        parser.add_argument("model", help="Shape model (JSON)")
        parser.add_argument("--format", choices=["scad", "stl", "obj"], default="scad")
        parser.add_argument("--out", default=None, help="Defaults to the model path with the format suffix")
        parser.add_argument("--polyline-samples", type=int, default=None,
                            help="Polygon points per sketch curve (defaults to SKETCH_SAMPLES_PER_CURVE)")
        parser.add_argument("--grid-resolution", type=int, default=96, help="Marching-cubes grid for meshes")
        parser.add_argument("--check", action="store_true",
                            help="Rasterize the exported polygons and report IoU against the hard occupancy")

    def handle(self, *args, **options):
        model = load_document(options["model"])
        if not isinstance(model, ShapeModel):
            raise InvalidParameterError("export needs a shape model, not a bare sketch")
        fmt = options["format"]
        out = Path(options["out"] or Path(options["model"]).with_suffix("." + fmt))
        samples = options["polyline_samples"]

        lower, upper = export_bounds(model, samples)
        grid = GridSpec.cube(lower, upper, options["grid_resolution"])
        if fmt == "scad":
            out.write_text(export_scad(model, samples))
            fields = {"script": out}
            if options["check"]:
                points = grid.points()
                internal = to_numpy(model_occupancy(model, points, samples_per_curve=samples)) > 0.5
                fields["iou"] = f"{volume_iou(polygon_occupancy(model, points, samples), internal):.6f}"
            self.report(**fields)
            return

        values = to_numpy(model_occupancy(model, grid.points(), hard=True, samples_per_curve=samples))
        mesh = marching_cubes(ScalarField(values, FieldKind.OCCUPANCY, grid=grid))
        save_mesh(mesh, out)
        self.report(mesh=out, vertices=len(mesh.vertices), faces=len(mesh.faces))
