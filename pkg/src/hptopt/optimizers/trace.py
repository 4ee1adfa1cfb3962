"""Evaluation bookkeeping shared by every optimizer.

All optimizers talk to the objective through an ObjectiveHandle, which
clamps to the box, counts evaluations against a budget, and records every
call into an OptimizationTrace. Seeds and options fully determine a trace.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..feasibility import PENALTY_FLOOR

__all__ = [
    "EvalRecord",
    "OptimizationTrace",
    "ObjectiveHandle",
    "BudgetExhausted",
    "InfeasibleStartError",
]

TRACE_HEADER_4D = ("eval_index", "ap", "vh0", "vl0", "pl0", "objective", "feasible")


class BudgetExhausted(Exception):
    """Internal control flow: the evaluation budget has been spent."""


class InfeasibleStartError(ValueError):
    """The local search was started from a penalized point."""


@dataclass(frozen=True)
class EvalRecord:
    index: int
    x: np.ndarray
    value: float
    feasible: bool
    wall_time: float


class OptimizationTrace:
    """Ordered record of every objective evaluation of one run."""

    def __init__(self):
        self.records: list[EvalRecord] = []
        self.budget_exhausted = False

    def __len__(self) -> int:
        return len(self.records)

    def append(self, x: np.ndarray, value: float, feasible: bool, wall_time: float) -> None:
        self.records.append(
            EvalRecord(index=len(self.records), x=np.array(x, dtype=float),
                       value=float(value), feasible=feasible, wall_time=wall_time)
        )

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    def best_so_far(self) -> np.ndarray:
        """Running minimum of the objective, one entry per evaluation."""
        return np.minimum.accumulate(self.values())

    def best(self) -> EvalRecord:
        if not self.records:
            raise ValueError("empty trace")
        return min(self.records, key=lambda r: (r.value, r.index))

    def best_feasible(self) -> EvalRecord | None:
        feas = [r for r in self.records if r.feasible]
        if not feas:
            return None
        return min(feas, key=lambda r: (r.value, r.index))

    def to_csv(self, path, names=None) -> None:
        """Write the trace as delimited text (wall times are not exported,
        keeping the file a pure function of config and seed)."""
        if self.records and names is None:
            d = len(self.records[0].x)
            names = TRACE_HEADER_4D[1:5] if d == 4 else tuple(f"x{i}" for i in range(d))
        names = names or ()
        with open(path, "w") as fh:
            fh.write(",".join(("eval_index", *names, "objective", "feasible")) + "\n")
            for r in self.records:
                cells = [str(r.index)]
                cells += [repr(float(v)) for v in r.x]
                cells.append(repr(r.value))
                cells.append("1" if r.feasible else "0")
                fh.write(",".join(cells) + "\n")

    @classmethod
    def from_csv(cls, path) -> "OptimizationTrace":
        trace = cls()
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if len(header) < 3 or header[0] != "eval_index" or header[-2] != "objective":
                raise ValueError(f"{path}: not a trace file (header {header})")
            d = len(header) - 3
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                cells = line.split(",")
                if len(cells) != len(header):
                    raise ValueError(f"{path}:{lineno}: expected {len(header)} cells")
                trace.append(
                    np.array([float(c) for c in cells[1 : 1 + d]]),
                    float(cells[-2]),
                    cells[-1] == "1",
                    0.0,
                )
        return trace


class ObjectiveHandle:
    """Budgeted, box-clamped, trace-recording wrapper around an objective.

    `feasible` is inferred from the value sitting below the penalty floor,
    which holds for the WEC objective and trivially for benchmark
    functions.
    """

    def __init__(self, fun, bounds, budget: int, feasible_threshold: float = PENALTY_FLOOR):
        self.fun = fun
        self.bounds = np.asarray(bounds, dtype=float)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ValueError(f"bounds must be (d, 2), got {self.bounds.shape}")
        self.budget = int(budget)
        self.feasible_threshold = feasible_threshold
        self.trace = OptimizationTrace()

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def remaining(self) -> int:
        return self.budget - len(self.trace)

    def clamp(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.bounds[:, 0], self.bounds[:, 1])

    def __call__(self, x) -> float:
        if self.remaining <= 0:
            self.trace.budget_exhausted = True
            raise BudgetExhausted
        xc = self.clamp(x)
        t0 = time.perf_counter()
        value = float(self.fun(xc))
        wall = time.perf_counter() - t0
        self.trace.append(xc, value, value < self.feasible_threshold, wall)
        return value
