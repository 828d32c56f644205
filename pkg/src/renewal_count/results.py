from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Stage(str, Enum):
    RAW = "none"
    STAGE1 = "stage1"
    STAGE2 = "stage2"
    STAGE3 = "stage3"

    @property
    def n_runs(self) -> int:
        """Number of base computations (N, 2N, ...) the stage consumes."""
        return {"none": 1, "stage1": 2, "stage2": 3, "stage3": 4}[self.value]


@dataclass(frozen=True)
class ProbabilityVector:
    """Count probabilities P_0(t)..P_m(t) from one parameter set.

    ``raw`` keeps the unclamped numbers (discretization and extrapolation
    can ring a little below zero); ``probs`` is the user-facing version
    clipped to [0, 1].
    """

    raw: np.ndarray
    horizon: float
    grid_steps: int
    stage: Stage = Stage.RAW
    engine: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def probs(self) -> np.ndarray:
        return np.clip(self.raw, 0.0, 1.0)

    @property
    def m_max(self) -> int:
        return len(self.raw) - 1

    def __len__(self) -> int:
        return len(self.raw)

    def __getitem__(self, m):
        return self.probs[m]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)


def censored_tail(pv) -> float:
    """P(N_t > m_max) = 1 - sum P_i, floored at zero."""
    values = pv.probs if isinstance(pv, ProbabilityVector) else np.asarray(pv, dtype=float)
    if len(values) == 0:
        raise ValueError("probability vector is empty")
    return max(0.0, 1.0 - float(np.sum(values)))
