import math

from cli.base import KernelCommand
from sdf2d.accuracy import accuracy_study
from sdf2d.fields import GridSpec
from sdf2d.oracles import circle_sdf, polygon_sdf, square_vertices
from sketch.families import PolygonCurve
from sketch.rbezier import circle_sketch, polygon_sketch


def unit_square_sdf(points):
    return polygon_sdf(points, square_vertices(1.0))


# family -> (curve, closed-form oracle)
FAMILIES = {
    "circle": lambda: (circle_sketch(4, 1.0), circle_sdf),
    "square": lambda: (polygon_sketch([math.sqrt(2)] * 4, math.pi / 4), unit_square_sdf),
    "polygon-square": lambda: (PolygonCurve(square_vertices(1.0)), unit_square_sdf),
}


class Command(KernelCommand):
    help = "Sample-rate study of the numerical sketch SDF against a closed-form oracle (CSV)"

    def add_arguments(self, parser):
        parser.add_argument("--family", choices=sorted(FAMILIES), default="circle")
        parser.add_argument("--rates", type=int, nargs="+", default=[20, 40, 80, 160, 400])
        parser.add_argument("--grid-resolution", type=int, default=201)
        parser.add_argument("--extent", type=float, default=1.5, help="Half-width of the square query window")
        parser.add_argument("--refine", choices=["sample", "segment"], default=None)
        parser.add_argument("--nearest", choices=["brute", "kdtree"], default=None)
        parser.add_argument("--out", default=None, help="CSV path; printed to stdout when omitted")

    def handle(self, *args, **options):
        curve, oracle = FAMILIES[options["family"]]()
        extent = options["extent"]
        grid = GridSpec.cube((-extent, -extent), (extent, extent), options["grid_resolution"])
        table = accuracy_study(curve, oracle, options["rates"], grid, options["nearest"], options["refine"])
        if options["out"]:
            table.to_csv(options["out"], index=False)
            self.report(table=options["out"], rows=len(table))
        else:
            self.stdout.write(table.to_csv(index=False).rstrip("\n"))
