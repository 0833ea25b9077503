"""
Readers and writers for fields, meshes and shape models.

Field files are plain text:

    # extrude_cad field v1
    kind occupancy
    layout grid
    shape 64 64 64
    lower -1.3 -1.3 -1.3
    upper 1.3 1.3 1.3
    values
    <one value per line, row-major>

Point-set fields use `layout points` and `count M` instead of shape/lower/upper, followed by
one `x y [z] value` row per point. Floats are written with repr(), which reads back exactly.
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import trimesh

from extrude_cad.exceptions import ExtrudeCadError, FormatParseError, InvalidParameterError
from sdf2d.fields import FieldKind, GridSpec, ScalarField
from sketch.params import SketchParams
from stump.assembly import ShapeModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FIELD_MAGIC = "# extrude_cad field v1"
MESH_FORMATS = {".stl": "stl", ".obj": "obj"}


def _number(value) -> str:
    return repr(float(value))


def render_field(field: ScalarField) -> str:
    lines = [FIELD_MAGIC, f"kind {field.kind.value}"]
    if field.is_grid:
        lines += [
            "layout grid",
            "shape " + " ".join(str(n) for n in field.grid.shape),
            "lower " + " ".join(_number(v) for v in field.grid.lower),
            "upper " + " ".join(_number(v) for v in field.grid.upper),
            "values",
        ]
        lines += [_number(v) for v in field.flat_values()]
    else:
        lines += ["layout points", f"dims {field.dim}", f"count {len(field.points)}", "values"]
        lines += [" ".join(_number(c) for c in list(p) + [v]) for p, v in zip(field.points, field.values)]
    return "\n".join(lines) + "\n"


def save_field(field: ScalarField, path: PathLike) -> None:
    Path(path).write_text(render_field(field))


def _header(lines: List[str], path: str) -> Tuple[Dict[str, List[str]], int]:
    """Key -> tokens of every header line, and the index of the first value line"""
    if not lines or lines[0].strip() != FIELD_MAGIC:
        raise FormatParseError(f"Expected {FIELD_MAGIC!r}", path, 1)
    header: Dict[str, List[str]] = {}
    for index, line in enumerate(lines[1:], start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "values":
            return header, index + 1
        if tokens[0] in header:
            raise FormatParseError(f"Duplicate header key {tokens[0]!r}", path, index + 1)
        header[tokens[0]] = tokens[1:]
    raise FormatParseError("Missing 'values' line", path, len(lines))


def _parse_numbers(tokens: List[str], path: str, line_number: int) -> List[float]:
    try:
        return [float(token) for token in tokens]
    except ValueError:
        raise FormatParseError(f"Expected numbers, got {' '.join(tokens)!r}", path, line_number)


def parse_field(text: str, path: str = "<string>") -> ScalarField:
    lines = text.splitlines()
    header, start = _header(lines, path)

    def required(key: str) -> List[str]:
        if key not in header:
            raise FormatParseError(f"Missing header key {key!r}", path, start)
        return header[key]

    try:
        kind = FieldKind(" ".join(required("kind")))
    except ValueError:
        raise FormatParseError(f"Unknown field kind {' '.join(header['kind'])!r}", path, start)
    layout = " ".join(required("layout"))
    body = [(i + 1, line.split()) for i, line in enumerate(lines[start:], start=start) if line.strip()]

    try:
        if layout == "grid":
            shape = tuple(int(v) for v in _parse_numbers(required("shape"), path, start))
            lower = _parse_numbers(required("lower"), path, start)
            upper = _parse_numbers(required("upper"), path, start)
            values = []
            for line_number, tokens in body:
                if len(tokens) != 1:
                    raise FormatParseError("Expected one value per line", path, line_number)
                values.extend(_parse_numbers(tokens, path, line_number))
            expected = int(np.prod(shape))
            if len(values) != expected:
                raise FormatParseError(f"Expected {expected} values, found {len(values)}", path, len(lines))
            return ScalarField(np.array(values), kind, grid=GridSpec(np.array(lower), np.array(upper), shape))

        if layout == "points":
            dims = int(_parse_numbers(required("dims"), path, start)[0])
            count = int(_parse_numbers(required("count"), path, start)[0])
            rows = []
            for line_number, tokens in body:
                if len(tokens) != dims + 1:
                    raise FormatParseError(f"Expected {dims + 1} values per row", path, line_number)
                rows.append(_parse_numbers(tokens, path, line_number))
            if len(rows) != count:
                raise FormatParseError(f"Expected {count} rows, found {len(rows)}", path, len(lines))
            rows = np.array(rows).reshape(-1, dims + 1)
            return ScalarField(rows[:, -1], kind, points=rows[:, :-1])
    except InvalidParameterError as exc:
        raise FormatParseError(str(exc), path, start)
    raise FormatParseError(f"Unknown layout {layout!r}", path, start)


def load_field(path: PathLike) -> ScalarField:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Field file not found: {path}")
    return parse_field(path.read_text(), str(path))


def save_mesh(mesh: trimesh.Trimesh, path: PathLike) -> None:
    """Binary STL or ASCII OBJ, chosen by suffix"""
    path = Path(path)
    file_type = MESH_FORMATS.get(path.suffix.lower())
    if file_type is None:
        raise InvalidParameterError(f"Unsupported mesh format {path.suffix!r}; use .stl or .obj")
    if file_type == "obj":
        mesh.export(str(path), file_type="obj", include_normals=False, include_texture=False)
    else:
        mesh.export(str(path), file_type="stl")
    logger.info("Wrote mesh with %d vertices and %d faces to %s", len(mesh.vertices), len(mesh.faces), path)


def load_mesh(path: PathLike) -> trimesh.Trimesh:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mesh file not found: {path}")
    if path.suffix.lower() not in MESH_FORMATS:
        raise InvalidParameterError(f"Unsupported mesh format {path.suffix!r}; use .stl or .obj")
    try:
        mesh = trimesh.load(str(path), force="mesh")
    except Exception as exc:
        raise FormatParseError(f"Could not read mesh: {exc}", str(path))
    return mesh


def render_model(model: ShapeModel) -> str:
    return json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n"


def save_model(model: ShapeModel, path: PathLike) -> None:
    Path(path).write_text(render_model(model))


def parse_model(text: str, path: str = "<string>") -> ShapeModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatParseError(exc.msg, path, exc.lineno)
    if not isinstance(data, dict):
        raise FormatParseError("Model document must be a JSON object", path, 1)
    try:
        return ShapeModel.from_dict(data)
    except (ExtrudeCadError, KeyError, TypeError) as exc:
        raise FormatParseError(f"Invalid model document: {exc}", path)


def load_model(path: PathLike) -> ShapeModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    return parse_model(path.read_text(), str(path))


def save_sketch(sketch: SketchParams, path: PathLike) -> None:
    Path(path).write_text(json.dumps(sketch.to_dict(), indent=2, sort_keys=True) + "\n")


def load_sketch(path: PathLike) -> SketchParams:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Sketch file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatParseError(exc.msg, str(path), exc.lineno)
    try:
        return SketchParams.from_dict(data)
    except (ExtrudeCadError, KeyError, TypeError) as exc:
        raise FormatParseError(f"Invalid sketch document: {exc}", str(path))


def load_document(path: PathLike) -> Union[ShapeModel, SketchParams]:
    """A shape model or a bare sketch, told apart by the `primitives` field"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatParseError(exc.msg, str(path), exc.lineno)
    if isinstance(data, dict) and "primitives" in data:
        return parse_model(text, str(path))
    return load_sketch(path)
