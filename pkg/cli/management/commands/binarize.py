from cli.base import KernelCommand
from extrude_cad.exceptions import InvalidParameterError
from shapeio.formats import load_document, save_model
from stump.assembly import ShapeModel
from stump.csg import describe


class Command(KernelCommand):
    help = "Binarize the stump of a soft model"

    def add_arguments(self, parser):
        parser.add_argument("model", help="Soft model (JSON)")
        parser.add_argument("--out", required=True, help="Hard model (JSON)")
        parser.add_argument("--threshold", type=float, default=None, help="Defaults to STUMP_THRESHOLD")

    def handle(self, *args, **options):
        model = load_document(options["model"])
        if not isinstance(model, ShapeModel):
            raise InvalidParameterError("binarize needs a shape model, not a bare sketch")
        hard = model.binarized(options["threshold"])
        save_model(hard, options["out"])
        self.report(model=options["out"], csg=f'"{describe(hard.csg())}"')
