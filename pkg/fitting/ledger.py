"""Recording fit runs in the database; failures here never abort a fit."""
import logging
from typing import Iterable, Optional

from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone

from .config import FitConfig
from .models import FitRun

logger = logging.getLogger(__name__)


def start_run(kind: str, config: FitConfig, target_path: str = "") -> Optional[FitRun]:
    if not settings.RECORD_FIT_RUNS:
        return None
    try:
        return FitRun.objects.create(kind=kind, status='running', config=config.to_dict(),
                                     target_path=str(target_path))
    except DatabaseError as e:
        logger.warning("Could not record %s run: %s", kind, e)
        return None


def finish_run(run: Optional[FitRun], final_loss: float, iterations_run: int, output_paths: Iterable[str]) -> None:
    if run is None:
        return
    run.status = 'completed'
    # JSON has no infinity: a zero-iteration fit has no loss
    run.final_loss = final_loss if final_loss != float("inf") else None
    run.iterations_run = iterations_run
    run.output_paths = [str(p) for p in output_paths]
    run.finished_at = timezone.now()
    _save(run)


def fail_run(run: Optional[FitRun], error: Exception) -> None:
    if run is None:
        return
    run.status = 'failed'
    run.error_message = str(error)
    run.finished_at = timezone.now()
    _save(run)


def _save(run: FitRun) -> None:
    try:
        run.save()
    except DatabaseError as e:
        logger.warning("Could not update run %s: %s", run.pk, e)
