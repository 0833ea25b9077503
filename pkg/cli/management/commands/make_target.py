from pathlib import Path

from cli.base import KernelCommand
from extrude_cad.exceptions import InvalidParameterError
from shapeio.formats import save_field
from shapeio.mesh import marching_cubes
from shapeio.metrics import surface_samples
from shapeio.pointcloud import PointCloud, save_pointcloud
from shapeio.targets import TARGETS, make_target


class Command(KernelCommand):
    help = "Write an analytic target: a 2D distance field, a 3D occupancy grid, or a point cloud of its surface"

    def add_arguments(self, parser):
        parser.add_argument("name", choices=sorted(TARGETS))
        parser.add_argument("--out", required=True, help="Field file, or .xyz/.ply for a surface point cloud")
        parser.add_argument("--grid-resolution", type=int, default=64)
        parser.add_argument("--padding", type=float, default=0.15)
        parser.add_argument("--points", type=int, default=10000, help="Point count for point-cloud output")
        parser.add_argument("--seed", type=int, default=0)

    def handle(self, *args, **options):
        field = make_target(options["name"], options["grid_resolution"], options["padding"])
        out = Path(options["out"])
        if out.suffix.lower() in (".xyz", ".ply"):
            if field.dim != 3:
                raise InvalidParameterError("Point clouds are only written for 3D targets")
            cloud = PointCloud(surface_samples(marching_cubes(field), options["points"], options["seed"]))
            save_pointcloud(cloud, out)
            self.report(pointcloud=out, points=len(cloud))
            return
        save_field(field, out)
        self.report(field=out, kind=field.kind.value, shape="x".join(str(n) for n in field.grid.shape))
