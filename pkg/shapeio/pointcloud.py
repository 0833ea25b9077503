"""
Point clouds and their ASCII readers/writers.

XYZ: one point per line, three floats (extra columns are read as normals when there are six).
PLY: ASCII format 1.0 with an `element vertex` block; only x, y, z (and nx, ny, nz) are read.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from extrude_cad.exceptions import FormatParseError, InvalidParameterError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise InvalidParameterError("Point cloud coordinates must be finite")
        object.__setattr__(self, "points", points)
        if self.normals is not None:
            normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
            if normals.shape != points.shape:
                raise InvalidParameterError("One normal per point is required")
            object.__setattr__(self, "normals", normals)

    def __len__(self) -> int:
        return self.points.shape[0]

    def bbox(self):
        if len(self) == 0:
            raise InvalidParameterError("An empty point cloud has no bounding box")
        return self.points.min(axis=0), self.points.max(axis=0)


def _floats(tokens: List[str], path: str, line_number: int) -> List[float]:
    try:
        values = [float(token) for token in tokens]
    except ValueError:
        raise FormatParseError(f"Expected numbers, got {' '.join(tokens)!r}", path, line_number)
    if not all(np.isfinite(values)):
        raise FormatParseError("Non-finite coordinate", path, line_number)
    return values


def parse_xyz(text: str, path: str = "<string>") -> PointCloud:
    points, normals = [], []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.replace(",", " ").split()
        if len(tokens) not in (3, 6):
            raise FormatParseError(f"Expected 3 or 6 values per line, got {len(tokens)}", path, line_number)
        values = _floats(tokens, path, line_number)
        points.append(values[:3])
        if len(values) == 6:
            normals.append(values[3:])
    if normals and len(normals) != len(points):
        raise FormatParseError("Normals given for some points only", path)
    return PointCloud(np.array(points).reshape(-1, 3), np.array(normals) if normals else None)


def parse_ply(text: str, path: str = "<string>") -> PointCloud:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise FormatParseError("Missing 'ply' magic line", path, 1)

    vertex_count = None
    properties: List[str] = []
    in_vertex = False
    header_end = None
    for index, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] != "ascii":
                raise FormatParseError("Only ASCII PLY is supported", path, index)
        elif tokens[0] == "element":
            in_vertex = len(tokens) == 3 and tokens[1] == "vertex"
            if in_vertex:
                try:
                    vertex_count = int(tokens[2])
                except ValueError:
                    raise FormatParseError(f"Bad vertex count {tokens[2]!r}", path, index)
        elif tokens[0] == "property":
            if in_vertex:
                properties.append(tokens[-1])
        elif tokens[0] == "end_header":
            header_end = index
            break
        else:
            raise FormatParseError(f"Unknown header line {line.strip()!r}", path, index)

    if header_end is None:
        raise FormatParseError("Missing end_header", path, len(lines))
    if vertex_count is None:
        raise FormatParseError("No vertex element declared", path, header_end)
    missing = {"x", "y", "z"} - set(properties)
    if missing:
        raise FormatParseError(f"Vertex element lacks properties {sorted(missing)}", path, header_end)

    columns = [properties.index(name) for name in ("x", "y", "z")]
    has_normals = {"nx", "ny", "nz"} <= set(properties)
    normal_columns = [properties.index(name) for name in ("nx", "ny", "nz")] if has_normals else []

    points, normals = [], []
    body = lines[header_end:header_end + vertex_count]
    if len(body) < vertex_count:
        raise FormatParseError(f"Expected {vertex_count} vertices, found {len(body)}", path, len(lines))
    for offset, line in enumerate(body):
        line_number = header_end + 1 + offset
        tokens = line.split()
        if len(tokens) < len(properties):
            raise FormatParseError(f"Expected {len(properties)} values, got {len(tokens)}", path, line_number)
        values = _floats([tokens[c] for c in columns + normal_columns], path, line_number)
        points.append(values[:3])
        if has_normals:
            normals.append(values[3:])
    return PointCloud(np.array(points).reshape(-1, 3), np.array(normals) if has_normals else None)


def load_pointcloud(path: PathLike) -> PointCloud:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Point cloud not found: {path}")
    text = path.read_text()
    cloud = parse_ply(text, str(path)) if path.suffix.lower() == ".ply" else parse_xyz(text, str(path))
    logger.info("Loaded %d points from %s", len(cloud), path)
    return cloud


def save_pointcloud(cloud: PointCloud, path: PathLike) -> None:
    """Writes XYZ, or ASCII PLY when the suffix is .ply"""
    path = Path(path)
    rows = cloud.points if cloud.normals is None else np.hstack([cloud.points, cloud.normals])
    body = "\n".join(" ".join(repr(float(v)) for v in row) for row in rows)
    if path.suffix.lower() == ".ply":
        names = ["x", "y", "z"] + ([] if cloud.normals is None else ["nx", "ny", "nz"])
        header = ["ply", "format ascii 1.0", f"element vertex {len(cloud)}"]
        header += [f"property double {name}" for name in names]
        header.append("end_header")
        body = "\n".join(header) + ("\n" + body if body else "")
    path.write_text(body + "\n")
