"""Sample-rate study: numerical sketch SDF against a closed-form oracle."""
import logging
from typing import Callable, Iterable, Union

import numpy as np
import pandas as pd

from sketch.families import SketchFamily
from sketch.params import SketchParams
from .distance import Refinement, signed_distance_batch
from .fields import GridSpec
from .sampling import sample_sketch

logger = logging.getLogger(__name__)


def accuracy_study(curve: Union[SketchParams, SketchFamily], oracle: Callable[[np.ndarray], np.ndarray],
                   rates: Iterable[int], grid: GridSpec, method=None,
                   refine: Union[Refinement, str, None] = None) -> pd.DataFrame:
    """Max and mean absolute SDF error on a grid for every sampling rate"""
    expected = oracle(grid.points())
    rows = []
    for rate in rates:
        field = signed_distance_batch(sample_sketch(curve, rate), grid, method, refine)
        error = np.abs(field.flat_values() - expected)
        rows.append({"rate": rate, "max_error": float(error.max()), "mean_error": float(error.mean())})
        logger.info("Sample rate %d: max error %.3e, mean error %.3e", rate, rows[-1]["max_error"],
                    rows[-1]["mean_error"])
    return pd.DataFrame(rows, columns=["rate", "max_error", "mean_error"])
