"""Engine state – per-node arrays for one run, round traces and run records.

All node quantities are stored stacked (row i = node i) so a round is a
handful of array operations.  ``NodeState`` is the per-node view used by
tests and formatters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

import numpy as np


# ── Per-round data ───────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class RoundTrace:
    """Quantities of round k that the invariant monitor needs afterwards."""

    k: int
    alpha: float
    x_mean: np.ndarray
    v_mean: np.ndarray
    grad_sum: np.ndarray
    delta_fro: float
    outside_interval: np.ndarray


@dataclass(frozen=True, eq=False)
class NodeState:
    """Node i's slice of the engine state."""

    x: np.ndarray
    q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    z_num: np.ndarray
    z_den: float
    out_of_range_count: int

    @property
    def delta(self) -> np.ndarray:
        return self.x - self.q

    @property
    def output(self) -> np.ndarray:
        return self.z_num / self.z_den


@dataclass(eq=False)
class EngineState:
    """Whole-network state after round ``k`` has been applied (x = x(k))."""

    k: int
    x: np.ndarray
    q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    packed: Optional[np.ndarray]
    recv_lower: np.ndarray
    recv_upper: np.ndarray
    z_num: np.ndarray
    z_den: float
    out_of_range: np.ndarray
    bits_sent: int = 0
    trace: Optional[RoundTrace] = None

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def d(self) -> int:
        return int(self.x.shape[1])

    @property
    def delta(self) -> np.ndarray:
        return self.x - self.q

    @property
    def x_mean(self) -> np.ndarray:
        return self.x.mean(axis=0)

    @property
    def consensus_error(self) -> float:
        """||X - 1 xbar^T|| (Frobenius)."""
        return float(np.linalg.norm(self.x - self.x_mean))

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.linalg.norm(self.x - self.x_mean, axis=1)))

    @property
    def outputs(self) -> np.ndarray:
        return self.z_num / self.z_den

    def node(self, i: int) -> NodeState:
        return NodeState(
            x=self.x[i].copy(),
            q=self.q[i].copy(),
            lower=self.lower[i].copy(),
            upper=self.upper[i].copy(),
            z_num=self.z_num[i].copy(),
            z_den=self.z_den,
            out_of_range_count=int(self.out_of_range[i]),
        )

    def copy(self) -> "EngineState":
        return replace(
            self,
            x=self.x.copy(),
            q=self.q.copy(),
            lower=self.lower.copy(),
            upper=self.upper.copy(),
            packed=None if self.packed is None else self.packed.copy(),
            recv_lower=self.recv_lower.copy(),
            recv_upper=self.recv_upper.copy(),
            z_num=self.z_num.copy(),
            out_of_range=self.out_of_range.copy(),
        )


# ── Run records ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class MetricRow:
    """One logged round.  Counters are cumulative up to and including k."""

    k: int
    alpha: float
    gap: float
    relative_gap: float
    dist_sq: float
    max_deviation: float
    consensus: float
    consensus_bound: float
    delta_max: float
    delta_bound: float
    containment_violations: int
    delta_violations: int
    consensus_violations: int
    compensation_error: float
    bits_sent: int

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[Any]:
        return [getattr(self, name) for name in self.columns()]


@dataclass
class RunRecord:
    """Metrics series, invariant counters and run-level flags of one run."""

    algorithm: str
    n: int
    d: int
    bits: int
    gamma: float
    sigma2: float
    L: float
    assumption2_satisfied: bool
    averaging: str
    schedule: str
    scale: float
    f_star: Optional[float] = None
    rows: list[MetricRow] = field(default_factory=list)
    rounds_executed: int = 0
    bits_sent: int = 0
    containment_violations: int = 0
    delta_violations: int = 0
    consensus_violations: int = 0
    compensation_violations: int = 0
    max_compensation_error: float = 0.0
    sigma_power_exceeds_alpha_at: Optional[int] = None
    strongly_convex: bool = False
    step_scale_ok: Optional[bool] = None
    alpha0_at_most_one: bool = True
    target_reached: Optional[bool] = None
    iterations_to_target: Optional[int] = None
    final_outputs: Optional[np.ndarray] = None

    def series(self, name: str) -> np.ndarray:
        if name not in MetricRow.columns():
            raise KeyError(f"unknown metric {name!r}")
        return np.array([getattr(row, name) for row in self.rows])

    @property
    def final_gap(self) -> float:
        return self.rows[-1].gap if self.rows else float("nan")

    @property
    def total_violations(self) -> int:
        return (
            self.containment_violations
            + self.delta_violations
            + self.consensus_violations
            + self.compensation_violations
        )

    def to_dict(self) -> dict:
        """Run-level summary (no series) for metadata files."""
        return {
            "algorithm": self.algorithm,
            "n": self.n,
            "d": self.d,
            "bits": self.bits,
            "gamma": self.gamma,
            "sigma2": self.sigma2,
            "L": self.L,
            "assumption2_satisfied": self.assumption2_satisfied,
            "averaging": self.averaging,
            "schedule": self.schedule,
            "scale": self.scale,
            "f_star": self.f_star,
            "rounds_executed": self.rounds_executed,
            "bits_sent": self.bits_sent,
            "containment_violations": self.containment_violations,
            "delta_violations": self.delta_violations,
            "consensus_violations": self.consensus_violations,
            "compensation_violations": self.compensation_violations,
            "max_compensation_error": self.max_compensation_error,
            "sigma_power_exceeds_alpha_at": self.sigma_power_exceeds_alpha_at,
            "strongly_convex": self.strongly_convex,
            "step_scale_ok": self.step_scale_ok,
            "alpha0_at_most_one": self.alpha0_at_most_one,
            "target_reached": self.target_reached,
            "iterations_to_target": self.iterations_to_target,
            "final_gap": self.final_gap,
        }
