from functools import lru_cache
from typing import Any, Dict

from django.conf import settings


@lru_cache(maxsize=1)
def load_fit_defaults() -> Dict[str, Any]:
    """
    Fitting defaults from the project settings (themselves read from the environment / .env).
    Returns a dict keyed by FitConfig field name.
    """
    return {
        "learning_rate": settings.FIT_LEARNING_RATE,
        "iterations": settings.FIT_ITERATIONS,
        "lambda_p": settings.FIT_LAMBDA_P,
        "lambda_w": settings.FIT_LAMBDA_W,
        "eta": settings.FIT_ETA,
        "eta_doubling_interval": settings.FIT_ETA_DOUBLING_INTERVAL,
        "eta_max": settings.FIT_ETA_MAX,
        "samples_per_curve": settings.SKETCH_SAMPLES_PER_CURVE,
        "fd_step": settings.FIT_FD_STEP,
        "seed": settings.FIT_SEED,
        "n_curves": settings.SKETCH_CURVES,
        "restarts": settings.FIT_RESTARTS,
        "grid_resolution": settings.FIT_GRID_RESOLUTION,
        "padding": settings.FIT_PADDING,
        "nearest": settings.SDF_NEAREST,
        "refine": settings.SDF_REFINE,
        "threshold": settings.STUMP_THRESHOLD,
    }
