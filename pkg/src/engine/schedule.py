"""Step-size schedules: 1/sqrt(k+1) (convex runs) and a/(k+1) (strongly convex)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

ScheduleKind = Literal["inv_sqrt", "inv_linear"]


@dataclass(frozen=True)
class StepSchedule:
    kind: ScheduleKind = "inv_sqrt"
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("inv_sqrt", "inv_linear"):
            raise ValueError(f"unknown schedule {self.kind!r}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def alpha(self, k: int) -> float:
        if k < 0:
            raise ValueError(f"round index must be >= 0, got {k}")
        if self.kind == "inv_sqrt":
            return 1.0 / float(np.sqrt(k + 1.0))
        return self.scale / (k + 1.0)

    def alphas(self, rounds: int) -> np.ndarray:
        """alpha(0), ..., alpha(rounds - 1)."""
        k = np.arange(rounds, dtype=float)
        if self.kind == "inv_sqrt":
            return 1.0 / np.sqrt(k + 1.0)
        return self.scale / (k + 1.0)

    @property
    def initial(self) -> float:
        return self.alpha(0)
