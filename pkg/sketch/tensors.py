"""Tensor conventions shared by the kernel: float64 on CPU."""
from typing import Any

import numpy as np
import torch

DTYPE = torch.float64


def as_tensor(value: Any) -> torch.Tensor:
    """Convert lists, numpy arrays and tensors to a float64 tensor (tensors keep their graph)"""
    if isinstance(value, torch.Tensor):
        return value if value.dtype == DTYPE else value.to(DTYPE)
    return torch.as_tensor(np.asarray(value, dtype=np.float64), dtype=DTYPE)


def to_numpy(value: torch.Tensor) -> np.ndarray:
    return value.detach().cpu().numpy()
