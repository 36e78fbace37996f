"""Runtime invariant monitor – checks every round, never stops the run.

Four checks:

* containment: the projected iterate x_i(k+1) lies in its next interval
  R_i(k+1) before it is clamped for encoding;
* quantization error: ||x_i(k) - q_i(k)|| <= sqrt(d) gamma alpha(k) / (2^b - 1);
* consensus: ||X(k) - 1 xbar(k)^T|| <= S(k) where
  S(k+1) = sigma2 S(k) + 6 ||X(k) - Q(k)|| + 3 L alpha(k), S(0) = 0;
* compensation: the pre-projection average equals
  xbar(k) - (alpha(k) / n) sum_i g_i(x_i(k)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.engine.schedule import StepSchedule
from src.engine.state import EngineState

logger = logging.getLogger(__name__)

QUANT_ERROR_SLACK = 1e-12
CONSENSUS_SLACK = 1e-12
COMPENSATION_TOL = 1e-10


class ViolationKind(str, Enum):
    CONTAINMENT = "containment"
    QUANT_ERROR = "quant_error"
    CONSENSUS = "consensus"
    COMPENSATION = "compensation"


@dataclass
class ViolationReport:
    """Result of checking one round."""

    k: int
    containment: int = 0
    quant_error: int = 0
    consensus: bool = False
    compensation: bool = False
    delta_max: float = 0.0
    delta_bound: float = 0.0
    consensus_norm: float = 0.0
    consensus_bound: float = 0.0
    compensation_error: float = 0.0

    @property
    def clean(self) -> bool:
        return not (self.containment or self.quant_error or self.consensus or self.compensation)

    def kinds(self) -> list[ViolationKind]:
        found = []
        if self.containment:
            found.append(ViolationKind.CONTAINMENT)
        if self.quant_error:
            found.append(ViolationKind.QUANT_ERROR)
        if self.consensus:
            found.append(ViolationKind.CONSENSUS)
        if self.compensation:
            found.append(ViolationKind.COMPENSATION)
        return found


@dataclass
class InvariantMonitor:
    """Tracks the consensus recursion S(k) and cumulative violation counts."""

    sigma2: float
    L: float
    gamma: float
    bits: int
    d: int
    schedule: StepSchedule
    quantized: bool = True
    consensus_bound: float = 0.0
    counts: dict[ViolationKind, int] = field(default_factory=lambda: {kind: 0 for kind in ViolationKind})
    max_compensation_error: float = 0.0
    _warned: set[ViolationKind] = field(default_factory=set)

    def delta_bound(self, k: int) -> float:
        if not self.quantized:
            return 0.0
        return math.sqrt(self.d) * self.gamma * self.schedule.alpha(k) / float((1 << self.bits) - 1)

    def _check_delta(self, state: EngineState, report: ViolationReport) -> None:
        norms = np.linalg.norm(state.delta, axis=1)
        report.delta_max = float(norms.max())
        report.delta_bound = self.delta_bound(state.k)
        report.quant_error = int(np.count_nonzero(norms > report.delta_bound + QUANT_ERROR_SLACK))

    def observe_initial(self, state: EngineState) -> ViolationReport:
        """Round-0 check; identical starts make every quantity zero."""
        report = ViolationReport(k=state.k)
        self._check_delta(state, report)
        report.consensus_norm = state.consensus_error
        report.consensus_bound = self.consensus_bound
        report.consensus = report.consensus_norm > self.consensus_bound + CONSENSUS_SLACK
        self._tally(report)
        return report

    def observe(self, state: EngineState) -> ViolationReport:
        """Check the round that produced *state* (state.k = k + 1)."""
        trace = state.trace
        if trace is None:
            raise ValueError("state carries no round trace; call observe_initial for round 0")
        report = ViolationReport(k=state.k)

        if self.quantized:
            report.containment = int(np.count_nonzero(trace.outside_interval))
        self._check_delta(state, report)

        self.consensus_bound = (
            self.sigma2 * self.consensus_bound + 6.0 * trace.delta_fro + 3.0 * self.L * trace.alpha
        )
        report.consensus_norm = state.consensus_error
        report.consensus_bound = self.consensus_bound
        report.consensus = report.consensus_norm > self.consensus_bound * (1.0 + CONSENSUS_SLACK) + CONSENSUS_SLACK

        expected = trace.x_mean - (trace.alpha / state.n) * trace.grad_sum
        report.compensation_error = float(np.max(np.abs(trace.v_mean - expected)))
        report.compensation = report.compensation_error > COMPENSATION_TOL
        self.max_compensation_error = max(self.max_compensation_error, report.compensation_error)

        self._tally(report)
        return report

    def _tally(self, report: ViolationReport) -> None:
        self.counts[ViolationKind.CONTAINMENT] += report.containment
        self.counts[ViolationKind.QUANT_ERROR] += report.quant_error
        self.counts[ViolationKind.CONSENSUS] += int(report.consensus)
        self.counts[ViolationKind.COMPENSATION] += int(report.compensation)
        for kind in report.kinds():
            if kind not in self._warned:
                self._warned.add(kind)
                logger.warning("First %s violation at round %d", kind.value, report.k)

    @property
    def total(self) -> int:
        return sum(self.counts.values())
