"""
Fitting configuration.

Values are layered: settings defaults, then a JSON config file whose keys are FitConfig field
names, then explicit overrides (command-line flags).
"""
import json
from dataclasses import asdict, dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Union

from extrude_cad.exceptions import ConfigError, InvalidParameterError
from sdf2d.distance import NearestMethod, Refinement
from sketch.params import ContinuityMode
from .env_utils import load_fit_defaults


class GradientMode(str, Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite_difference"


class SketchType(str, Enum):
    # Every radius and weight free
    FREEFORM = "freeform"
    # One scale on top of the exact circle recipe
    CIRCLE = "circle"
    # One radius per joint, straight edges
    POLYGON = "polygon"


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 1e-2
    iterations: int = 2000
    lambda_p: float = 0.01
    lambda_w: float = 0.001
    eta: float = 100.0
    eta_doubling_interval: int = 0
    eta_max: float = 1e4
    samples_per_curve: int = 100
    gradient_mode: GradientMode = GradientMode.ANALYTIC
    fd_step: float = 1e-5
    seed: int = 0
    n_curves: int = 4
    continuity_mode: ContinuityMode = ContinuityMode.C0
    sketch_type: SketchType = SketchType.FREEFORM
    optimize_weights: bool = True
    init_jitter: float = 0.05
    restarts: int = 3
    grid_resolution: int = 32
    padding: float = 0.15
    log_every: int = 100
    nearest: NearestMethod = NearestMethod.BRUTE
    refine: Refinement = Refinement.SAMPLE
    threshold: float = 0.5
    tolerance: float = 1e-8

    def __post_init__(self):
        try:
            for name, kind in (("gradient_mode", GradientMode), ("continuity_mode", ContinuityMode),
                               ("sketch_type", SketchType), ("nearest", NearestMethod), ("refine", Refinement)):
                object.__setattr__(self, name, kind(getattr(self, name)))
        except ValueError as exc:
            raise InvalidParameterError(str(exc))

        checks = [
            (self.learning_rate > 0, "learning_rate must be positive"),
            (self.iterations >= 0, "iterations must be >= 0"),
            (self.lambda_p >= 0 and self.lambda_w >= 0, "loss weights must be non-negative"),
            (self.eta > 0, "eta must be positive"),
            (self.eta_doubling_interval >= 0, "eta_doubling_interval must be >= 0"),
            (self.eta_max >= self.eta, "eta_max must be >= eta"),
            (self.samples_per_curve >= 4, "samples_per_curve must be >= 4"),
            (0 < self.fd_step <= 1e-2, "fd_step must lie in (0, 1e-2]"),
            (self.n_curves >= 2, "n_curves must be >= 2"),
            (self.init_jitter >= 0, "init_jitter must be >= 0"),
            (self.restarts >= 1, "restarts must be >= 1"),
            (self.grid_resolution >= 2, "grid_resolution must be >= 2"),
            (self.padding >= 0, "padding must be >= 0"),
            (self.log_every >= 1, "log_every must be >= 1"),
            (0 < self.threshold < 1, "threshold must lie in (0, 1)"),
            (self.tolerance >= 0, "tolerance must be >= 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidParameterError(message)

    @classmethod
    def field_names(cls):
        return {f.name for f in fields(cls)}

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None, **overrides) -> "FitConfig":
        """Settings defaults, then the JSON file at `path`, then non-None overrides"""
        values: Dict[str, Any] = dict(load_fit_defaults())
        if path:
            values.update(read_config_file(path))
        unknown = set(overrides) - cls.field_names()
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        values.update({key: value for key, value in overrides.items() if value is not None})
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(f"Bad config value: {exc}")

    def to_dict(self) -> Dict[str, Any]:
        return {key: value.value if isinstance(value, Enum) else value for key, value in asdict(self).items()}


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse a JSON config file, rejecting anything that is not a FitConfig field"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = set(data) - FitConfig.field_names()
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    return data
