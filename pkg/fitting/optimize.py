"""Gradients and the shared Adam loop."""
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import torch

from extrude_cad.exceptions import NonFiniteLossError
from .config import FitConfig, GradientMode
from .report import LossReport

logger = logging.getLogger(__name__)


@dataclass
class LossTerms:
    total: torch.Tensor
    recon: torch.Tensor
    prim: torch.Tensor
    weight_reg: torch.Tensor
    eta: float


@dataclass
class Outcome:
    best_state: List[torch.Tensor]
    best_loss: float
    best_iteration: Optional[int]
    iterations_run: int


def gradient(variables: Sequence[torch.Tensor], loss_fn: Callable[[], torch.Tensor],
             mode=GradientMode.ANALYTIC, fd_step: float = 1e-5) -> torch.Tensor:
    """
    Flat vector of d loss / d variables.

    Analytic mode runs autograd through the whole pipeline; finite-difference mode perturbs every
    scalar by +-fd_step and takes central differences.
    """
    if GradientMode(mode) == GradientMode.ANALYTIC:
        loss = loss_fn()
        grads = torch.autograd.grad(loss, list(variables), allow_unused=True)
        return torch.cat([
            (torch.zeros_like(v) if g is None else g).reshape(-1) for v, g in zip(variables, grads)
        ])

    parts = []
    with torch.no_grad():
        for variable in variables:
            flat = variable.data.view(-1)
            part = torch.zeros_like(flat)
            for i in range(flat.numel()):
                original = float(flat[i])
                flat[i] = original + fd_step
                plus = float(loss_fn())
                flat[i] = original - fd_step
                minus = float(loss_fn())
                flat[i] = original
                part[i] = (plus - minus) / (2 * fd_step)
            parts.append(part)
    return torch.cat(parts)


def _assign_gradients(variables: Sequence[torch.Tensor], flat: torch.Tensor) -> None:
    offset = 0
    for variable in variables:
        n = variable.numel()
        variable.grad = flat[offset:offset + n].reshape(variable.shape).clone()
        offset += n


def run_adam(variables: List[torch.Tensor], objective: Callable[[int], LossTerms], config: FitConfig,
             report: LossReport, label: str = "fit") -> Outcome:
    """Minimise objective(iteration).total, keeping the best variables seen"""
    optimizer = torch.optim.Adam(variables, lr=config.learning_rate)
    analytic = config.gradient_mode == GradientMode.ANALYTIC
    best_state = [v.detach().clone() for v in variables]
    best_loss = math.inf
    best_iteration = None
    iterations_run = 0
    start_time = time.time()

    for iteration in range(config.iterations):
        optimizer.zero_grad()
        with torch.set_grad_enabled(analytic):
            terms = objective(iteration)
        total = float(terms.total)
        if not math.isfinite(total):
            raise NonFiniteLossError(iteration, report.last_row())

        report.append(iteration, float(terms.recon), float(terms.prim), float(terms.weight_reg), total, terms.eta)
        iterations_run = iteration + 1
        if total < best_loss:
            best_loss = total
            best_state = [v.detach().clone() for v in variables]
            best_iteration = iteration

        if iteration % config.log_every == 0:
            logger.info("%s iteration %d: total %.6e (recon %.3e, prim %.3e, weight_reg %.3e)",
                        label, iteration, total, float(terms.recon), float(terms.prim), float(terms.weight_reg))
        if total <= config.tolerance:
            logger.info("%s converged at iteration %d", label, iteration)
            break

        if analytic:
            terms.total.backward()
        else:
            flat = gradient(variables, lambda: objective(iteration).total, GradientMode.FINITE_DIFFERENCE,
                            config.fd_step)
            _assign_gradients(variables, flat)
        optimizer.step()

    logger.info("%s finished: %d iterations in %.1fs, best loss %.6e at iteration %s",
                label, iterations_run, time.time() - start_time, best_loss, best_iteration)
    return Outcome(best_state, best_loss, best_iteration, iterations_run)
