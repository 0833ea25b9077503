"""Joint fitting of K extrusions and a J-node stump to a 3D occupancy target."""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import torch

from extrude.pose import RigidPose
from extrude.solid import EtaSchedule, ExtrusionParams, occupancy, primitive_sdf_batch, sample_primitives
from extrude_cad.exceptions import InvalidParameterError
from sdf2d.fields import FieldKind, ScalarField
from shapeio.grids import occupied_bbox, resample_nearest, testing_grid
from shapeio.pointcloud import PointCloud
from shapeio.voxelize import voxelize_pointcloud
from sketch.tensors import DTYPE, as_tensor
from stump.assembly import ShapeModel
from stump.layers import StumpParams, evaluate
from .config import FitConfig
from .losses import loss_reconstruction, loss_weight_reg, primitive_loss_from_sdf, total_loss
from .optimize import LossTerms, run_adam
from .report import LossReport
from .sketch_fit import sketch_variables

logger = logging.getLogger(__name__)

# Sketch joints on the diagonals of the primitive frame, so axis-aligned boxes are reachable
START_ANGLE = math.pi / 4


@dataclass
class ShapeFitResult:
    model: ShapeModel
    hard_model: ShapeModel
    report: LossReport
    iterations_run: int
    best_iteration: Optional[int]
    best_loss: float
    restart: int


def testing_set(target: Union[ScalarField, PointCloud],
                config: FitConfig) -> Tuple[torch.Tensor, torch.Tensor, np.ndarray, np.ndarray]:
    """Testing points, their target occupancy and the unpadded target bbox"""
    if isinstance(target, PointCloud):
        lower, upper = target.bbox()
        target = voxelize_pointcloud(target, config.grid_resolution, config.padding, bbox=(lower, upper))
        return as_tensor(target.grid.points()), as_tensor(target.flat_values()), lower, upper
    if not isinstance(target, ScalarField) or not target.is_grid or target.dim != 3:
        raise InvalidParameterError("3D fitting needs a 3D grid field or a point cloud")
    if target.kind == FieldKind.SDF:
        target = ScalarField((target.values >= 0).astype(np.float64), FieldKind.OCCUPANCY, grid=target.grid)
    elif target.kind != FieldKind.OCCUPANCY:
        raise InvalidParameterError(f"3D fitting needs occupancy, got a {target.kind.value} field")

    lower, upper = occupied_bbox(target)
    # Nodes the target grid does not cover are empty space
    grid = testing_grid(lower, upper, config.grid_resolution, config.padding)
    target = resample_nearest(target, grid, fill_value=0.0)
    return as_tensor(grid.points()), as_tensor(target.flat_values()), lower, upper


class ShapeVariables:
    """Unconstrained fitting variables of every primitive and of the stump"""

    def __init__(self, config: FitConfig, n_primitives: int, n_nodes: int, lower: np.ndarray,
                 upper: np.ndarray, rng: np.random.Generator):
        extent = np.maximum(upper - lower, 1e-6)
        center = (lower + upper) / 2
        jitter = config.init_jitter

        self.sketch_builders = []
        self.sketch_variables: List[List[torch.Tensor]] = []
        rotations, translations, heights = [], [], []
        for k in range(n_primitives):
            # The first primitive starts inscribed in the target, the others smaller and spread out
            scale = 0.5 * min(extent[0], extent[1]) * (1.0 if k == 0 else 0.6)
            variables, build = sketch_variables(config, rng, scale, START_ANGLE)
            self.sketch_variables.append(variables)
            self.sketch_builders.append(build)

            offset = np.zeros(3) if k == 0 else rng.uniform(-0.25, 0.25, 3) * extent
            rotations.append(np.array([1.0, 0.0, 0.0, 0.0]) + jitter * rng.normal(size=4))
            translations.append([center[0] + offset[0], center[1] + offset[1], lower[2] + abs(offset[2])])
            heights.append(np.log(extent[2] * (1.0 if k == 0 else 0.6)))

        def leaf(values) -> torch.Tensor:
            return torch.tensor(np.asarray(values, dtype=np.float64), dtype=DTYPE, requires_grad=True)

        self.rotations = leaf(np.reshape(rotations, (n_primitives, 4)))
        self.translations = leaf(np.reshape(translations, (n_primitives, 3)))
        self.log_heights = leaf(np.reshape(heights, (n_primitives,)))
        self.raw_complement = leaf(rng.normal(-2.0, 0.5, n_primitives))
        self.raw_inter_select = leaf(rng.normal(0.5, 1.0, (n_primitives, n_nodes)))
        self.raw_union_select = leaf(rng.normal(1.0, 0.5, n_nodes))

    def tensors(self) -> List[torch.Tensor]:
        flat = [v for variables in self.sketch_variables for v in variables if v.requires_grad]
        return flat + [self.rotations, self.translations, self.log_heights, self.raw_complement,
                       self.raw_inter_select, self.raw_union_select]

    def load(self, state: List[torch.Tensor]) -> None:
        with torch.no_grad():
            for variable, value in zip(self.tensors(), state):
                variable.copy_(value)

    def primitives(self) -> List[ExtrusionParams]:
        return [
            ExtrusionParams(build(variables), RigidPose(self.rotations[k], self.translations[k]),
                            torch.exp(self.log_heights[k]))
            for k, (build, variables) in enumerate(zip(self.sketch_builders, self.sketch_variables))
        ]

    def stump(self) -> StumpParams:
        return StumpParams.from_unconstrained(self.raw_complement, self.raw_inter_select, self.raw_union_select)


def _fit_once(points: torch.Tensor, target: torch.Tensor, lower: np.ndarray, upper: np.ndarray,
              n_primitives: int, n_nodes: int, config: FitConfig, restart: int) -> ShapeFitResult:
    seed = config.seed + restart
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed)
    variables = ShapeVariables(config, n_primitives, n_nodes, lower, upper, rng)
    schedule = EtaSchedule(config.eta, config.eta_doubling_interval, config.eta_max)
    report = LossReport(config.lambda_p, config.lambda_w)

    def objective(iteration: int) -> LossTerms:
        prims = variables.primitives()
        sdf = primitive_sdf_batch(prims, points, config.samples_per_curve, config.refine,
                                  sampled=sample_primitives(prims, config.samples_per_curve),
                                  method=config.nearest)
        eta = schedule(iteration)
        final = evaluate(variables.stump(), occupancy(sdf, eta))
        recon = loss_reconstruction(final, target)
        prim = primitive_loss_from_sdf(sdf)
        weight_reg = loss_weight_reg(p.sketch for p in prims)
        total = total_loss(recon, prim, weight_reg, config.lambda_p, config.lambda_w)
        return LossTerms(total, recon, prim, weight_reg, eta)

    outcome = run_adam(variables.tensors(), objective, config, report, label=f"fit3d restart {restart}")
    variables.load(outcome.best_state)
    with torch.no_grad():
        prims = tuple(p.detach() for p in variables.primitives())
        stump = variables.stump().detach()
    final_eta = schedule(outcome.best_iteration or 0)
    metadata = {
        "bbox_lower": [float(v) for v in lower],
        "bbox_upper": [float(v) for v in upper],
        "padding": config.padding,
        "n_curves": config.n_curves,
        "seed": seed,
        "restart": restart,
    }
    model = ShapeModel(prims, stump, final_eta, metadata)
    return ShapeFitResult(model, model.binarized(config.threshold), report, outcome.iterations_run,
                          outcome.best_iteration, outcome.best_loss, restart)


def fit_shapes_3d(target: Union[ScalarField, PointCloud], n_primitives: int, n_nodes: int,
                  config: FitConfig) -> ShapeFitResult:
    """Best of `config.restarts` independent fits; returns the soft model and its binarized twin"""
    if n_primitives < 1 or n_nodes < 1:
        raise InvalidParameterError(f"Need at least one primitive and one node, got K={n_primitives}, J={n_nodes}")
    points, values, lower, upper = testing_set(target, config)
    logger.info("Fitting K=%d, J=%d to %d testing points (%d occupied)", n_primitives, n_nodes,
                points.shape[0], int((values > 0.5).sum()))

    best = None
    for restart in range(config.restarts):
        result = _fit_once(points, values, lower, upper, n_primitives, n_nodes, config, restart)
        if best is None or result.best_loss < best.best_loss:
            best = result
    logger.info("Best restart %d with loss %.6e", best.restart, best.best_loss)
    return best
