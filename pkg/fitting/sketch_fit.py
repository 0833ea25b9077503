"""Fitting a single sketch to a 2D unsigned distance field."""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import torch

from extrude_cad.exceptions import InvalidParameterError
from sdf2d.distance import sdf_values
from sdf2d.fields import FieldKind, ScalarField
from sdf2d.sampling import sample_sketch
from sketch.params import SketchParams
from sketch.rbezier import circle_sketch, polygon_sketch
from sketch.tensors import DTYPE, as_tensor
from .config import FitConfig, SketchType
from .losses import loss_reconstruction, loss_weight_reg
from .optimize import LossTerms, run_adam
from .report import LossReport

logger = logging.getLogger(__name__)

SketchBuilder = Callable[[List[torch.Tensor]], SketchParams]


@dataclass
class FitResult:
    params: SketchParams
    report: LossReport
    iterations_run: int
    best_iteration: Optional[int]
    best_loss: float


def sketch_variables(config: FitConfig, rng: np.random.Generator, scale: float = 1.0,
                     start_angle: float = 0.0) -> Tuple[List[torch.Tensor], SketchBuilder]:
    """
    Free variables of one sketch and the map that builds SketchParams from them.

    Every variable is a log-value: zeros give the unit-size start, `scale` multiplies the radii.
    """
    n = config.n_curves
    jitter = config.init_jitter
    log_scale = float(np.log(scale))

    if config.sketch_type == SketchType.CIRCLE:
        base = circle_sketch(n, 1.0, start_angle, config.continuity_mode)
        raw = torch.tensor([log_scale + jitter * rng.normal()], dtype=DTYPE, requires_grad=True)
        return [raw], lambda v: SketchParams(n, base.radii * torch.exp(v[0]), base.weights,
                                             base.continuity_mode, start_angle)

    if config.sketch_type == SketchType.POLYGON:
        if n < 3:
            raise InvalidParameterError("Polygon sketches need at least 3 curves")
        raw = torch.tensor(log_scale + jitter * rng.normal(size=n), dtype=DTYPE, requires_grad=True)
        return [raw], lambda v: polygon_sketch(torch.exp(v[0]), start_angle)

    n_radii, n_weights = SketchParams.free_variable_counts(n, config.continuity_mode)
    raw_radii = torch.tensor(log_scale + jitter * rng.normal(size=n_radii), dtype=DTYPE, requires_grad=True)
    raw_weights = torch.tensor(jitter * rng.normal(size=n_weights), dtype=DTYPE,
                               requires_grad=config.optimize_weights)
    variables = [raw_radii, raw_weights] if config.optimize_weights else [raw_radii]
    mode = config.continuity_mode

    def build(v: List[torch.Tensor]) -> SketchParams:
        weights = v[1] if config.optimize_weights else raw_weights
        return SketchParams.from_unconstrained(v[0], weights, n, mode, start_angle)

    return variables, build


def fit_sketch_2d(target: ScalarField, config: FitConfig) -> FitResult:
    """
    Fit |SDF| of a sketch to an unsigned distance field by Adam on log-parameters.

    Weight regularisation is reported but not optimised: the returned report uses
    lambda_p = lambda_w = 0 so its rows still decompose exactly.
    """
    if target.dim != 2:
        raise InvalidParameterError(f"2D fitting needs a 2D field, got {target.dim}D")
    if target.kind == FieldKind.OCCUPANCY:
        raise InvalidParameterError("2D fitting needs a distance field, got an occupancy field")

    points = as_tensor(target.coordinates())
    values = as_tensor(np.abs(target.flat_values()))
    if points.shape[0] == 0:
        raise InvalidParameterError("Target field is empty")

    rng = np.random.default_rng(config.seed)
    variables, build = sketch_variables(config, rng)
    report = LossReport(lambda_p=0.0, lambda_w=0.0)

    def objective(iteration: int) -> LossTerms:
        params = build(variables)
        sketch = sample_sketch(params, config.samples_per_curve)
        sdf, _ = sdf_values(sketch, points, config.nearest, config.refine)
        recon = loss_reconstruction(torch.abs(sdf), values)
        zero = torch.zeros((), dtype=DTYPE)
        return LossTerms(recon, recon, zero, loss_weight_reg([params]).detach(), 0.0)

    outcome = run_adam(variables, objective, config, report, label="fit2d")
    with torch.no_grad():
        params = build(outcome.best_state).detach()
    return FitResult(params, report, outcome.iterations_run, outcome.best_iteration, outcome.best_loss)
