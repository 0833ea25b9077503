"""Per-iteration loss history."""
import math
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

COLUMNS = ["iteration", "recon", "prim", "weight_reg", "total", "eta"]


class LossReport:
    """
    Loss terms of every iteration. `lambda_p` and `lambda_w` are the weights the run used, so
    total == recon + lambda_p * prim + lambda_w * weight_reg holds row by row.
    """

    def __init__(self, lambda_p: float, lambda_w: float):
        self.lambda_p = lambda_p
        self.lambda_w = lambda_w
        self.rows: List[Dict[str, float]] = []

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, iteration: int, recon: float, prim: float, weight_reg: float, total: float,
               eta: float) -> None:
        self.rows.append({
            "iteration": iteration,
            "recon": recon,
            "prim": prim,
            "weight_reg": weight_reg,
            "total": total,
            "eta": eta,
        })

    def column(self, name: str) -> List[float]:
        return [row[name] for row in self.rows]

    @property
    def total(self) -> List[float]:
        return self.column("total")

    def last_row(self) -> Optional[Dict[str, float]]:
        return dict(self.rows[-1]) if self.rows else None

    def best_iteration(self) -> Optional[int]:
        if not self.rows:
            return None
        return min(self.rows, key=lambda row: row["total"])["iteration"]

    def decomposition_error(self) -> float:
        """Largest deviation of total from its weighted terms over all rows"""
        return max(
            (abs(row["total"] - (row["recon"] + self.lambda_p * row["prim"] + self.lambda_w * row["weight_reg"]))
             for row in self.rows),
            default=0.0,
        )

    def window_minima(self, window: int) -> List[float]:
        """Minimum total loss of each consecutive block of `window` iterations"""
        totals = self.total
        return [min(totals[start:start + window]) for start in range(0, len(totals), window)]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows, columns=COLUMNS)
        return frame.astype({"iteration": "int64"})

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path: Union[str, Path], lambda_p: float = math.nan, lambda_w: float = math.nan) -> "LossReport":
        frame = pd.read_csv(path, float_precision="round_trip")
        report = cls(lambda_p, lambda_w)
        for row in frame.to_dict("records"):
            report.append(int(row["iteration"]), row["recon"], row["prim"], row["weight_reg"], row["total"],
                          row["eta"])
        return report
