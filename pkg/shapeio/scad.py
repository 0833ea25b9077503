"""OpenSCAD export of hard shape models."""
import logging
from typing import Optional

from solid import cube, difference, intersection, linear_extrude, multmatrix, polygon, scad_render, translate, union

from extrude_cad.exceptions import InvalidParameterError
from sketch.tensors import to_numpy
from stump.assembly import ShapeModel
from stump.csg import Difference, Empty, Intersection, Primitive, Union, Universe
from .raster import export_bounds, sketch_polyline

logger = logging.getLogger(__name__)

HEADER = "// extrude_cad model export\n"


def _transform(prim) -> list:
    rotation = to_numpy(prim.pose.matrix())
    translation = to_numpy(prim.pose.translation)
    rows = [[float(v) for v in rotation[i]] + [float(translation[i])] for i in range(3)]
    return rows + [[0.0, 0.0, 0.0, 1.0]]


def _extrusion(prim, polyline_samples: Optional[int]):
    outline = [[float(x), float(y)] for x, y in sketch_polyline(prim, polyline_samples)]
    return multmatrix(m=_transform(prim))(
        linear_extrude(height=float(prim.height))(polygon(points=outline))
    )


def export_scad(model: ShapeModel, polyline_samples: Optional[int] = None) -> str:
    """
    OpenSCAD script of a hard model.

    Each primitive becomes a multmatrix-posed linear_extrude of its sampled profile polygon, and
    the stump's CSG tree becomes nested union/intersection/difference blocks. A node made only
    of complemented primitives subtracts them from a cube covering the padded model bbox.
    """
    if not model.is_hard:
        raise InvalidParameterError("SCAD export needs a hard model; binarize it first")

    def build(node):
        if isinstance(node, Primitive):
            return _extrusion(model.primitives[node.index], polyline_samples)
        if isinstance(node, Union):
            return union()(*[build(child) for child in node.children])
        if isinstance(node, Intersection):
            return intersection()(*[build(child) for child in node.children])
        if isinstance(node, Difference):
            return difference()(build(node.base), build(node.subtracted))
        if isinstance(node, Universe):
            lower, upper = export_bounds(model, polyline_samples)
            return translate([float(v) for v in lower])(cube(size=[float(v) for v in upper - lower]))
        if isinstance(node, Empty):
            return union()
        raise InvalidParameterError(f"Not a CSG node: {type(node).__name__}")

    script = scad_render(build(model.csg()), file_header=HEADER)
    logger.debug("Rendered SCAD script with %d characters", len(script))
    return script
