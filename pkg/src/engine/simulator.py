"""Synchronous round engine – adaptive-quantized and unquantized DSG.

One call to ``step`` is one network round: every node reads only the
round-k snapshot (its own state plus the codewords its neighbours sent),
so the whole round is computed as stacked array operations.

Quantized round k, for all nodes at once:

    receivers decode q_j(k) from the b*d-bit codewords over R_j(k)
    v_i      = x_i + (sum_j a_ij q_j - q_i) - alpha(k) g_i(x_i)
    x_i(k+1) = clip(v_i, box)
    R_i(k+1) = q_i(k) -/+ (gamma / 2) alpha(k)
    q_i(k+1) = nearest grid point of clamp(x_i(k+1), R_i(k+1))

Receivers recompute R_j(k+1) from the decoded q_j(k), so both sides agree
on every interval without it ever being transmitted.
"""

from __future__ import annotations

import logging
import math
from typing import Literal, Optional

import numpy as np

from src.codec.quantizer import (
    QuantParams,
    adaptive_interval,
    check_bandwidth,
    compute_gamma,
    grid_values,
    pack_indices,
    quantize_indices,
    unpack_bits,
)
from src.codec.wire import MessageLogWriter
from src.engine.monitor import InvariantMonitor, ViolationKind
from src.engine.schedule import StepSchedule
from src.engine.state import EngineState, MetricRow, RoundTrace, RunRecord
from src.errors import ConfigMismatch, DecodeMismatch, DegenerateSpectrum
from src.network.topology import Graph, MixingMatrix
from src.problems.objectives import Box, ObjectiveSet
from src.problems.reference import ReferenceSolution

logger = logging.getLogger(__name__)

SIGMA2_MARGIN = 1e-9
FLOAT_BITS = 64
ABSOLUTE_GAP_FLOOR = 1e-12

AlgorithmKind = Literal["qdsg", "dsg"]
AveragingMode = Literal["weighted", "plain"]


def relative_gap(gap: float, f_star: float) -> float:
    """(f(z) - f*) / |f*|, or the absolute gap when |f*| is numerically zero."""
    if abs(f_star) < ABSOLUTE_GAP_FLOOR:
        return gap
    return gap / abs(f_star)


class Engine:
    """Runs one algorithm on one (graph, mixing, objectives, box) instance."""

    def __init__(
        self,
        graph: Graph,
        mixing: MixingMatrix,
        objectives: ObjectiveSet,
        box: Box,
        schedule: StepSchedule,
        bits: int,
        algorithm: AlgorithmKind = "qdsg",
        averaging: AveragingMode = "weighted",
        gamma: Optional[float] = None,
        message_log: Optional[MessageLogWriter] = None,
    ):
        if not (graph.n == mixing.n == objectives.n):
            raise ConfigMismatch(
                f"node counts disagree: graph={graph.n}, mixing={mixing.n}, objectives={objectives.n}"
            )
        if box.dimension != objectives.d:
            raise ConfigMismatch(f"box has d={box.dimension} but objectives have d={objectives.d}")
        if algorithm not in ("qdsg", "dsg"):
            raise ValueError(f"unknown algorithm {algorithm!r}")
        if averaging not in ("weighted", "plain"):
            raise ValueError(f"unknown averaging mode {averaging!r}")
        if not 1 <= bits <= 52:
            raise ValueError(f"bits must be in [1, 52], got {bits}")
        if mixing.sigma2 >= 1.0 - SIGMA2_MARGIN:
            raise DegenerateSpectrum(
                f"sigma2={mixing.sigma2:.12f} is not below 1 - {SIGMA2_MARGIN}; graph not mixing"
            )

        self.graph = graph
        self.mixing = mixing
        self.weights = mixing.weights
        self.objectives = objectives
        self.box = box
        self.schedule = schedule
        self.algorithm: AlgorithmKind = algorithm
        self.averaging: AveragingMode = averaging
        self.message_log = message_log

        self.n = objectives.n
        self.d = objectives.d
        self.L = objectives.L_total
        self.theorem_gamma = compute_gamma(self.L, mixing.sigma2)
        effective = float(gamma) if gamma is not None else self.theorem_gamma
        self.quant = QuantParams(
            gamma=effective, bits=bits, assumption2_satisfied=check_bandwidth(self.n, self.d, effective, bits)
        )

        logger.info(
            "Engine %s: n=%d d=%d b=%d sigma2=%.6f L=%.6g gamma=%.6g%s assumption2=%s",
            algorithm, self.n, self.d, bits, mixing.sigma2, self.L, self.gamma,
            "" if gamma is None else " (override)", self.assumption2_satisfied,
        )
        if algorithm == "qdsg" and not self.assumption2_satisfied:
            logger.warning(
                "Bandwidth condition fails: sqrt(nd)*gamma=%.6g > 2^b-1=%d; clamping will absorb overflow",
                math.sqrt(self.n * self.d) * self.gamma, (1 << bits) - 1,
            )

    # ── Properties ───────────────────────────────────────────────────────

    @property
    def gamma(self) -> float:
        return self.quant.gamma

    @property
    def bits(self) -> int:
        return self.quant.bits

    @property
    def assumption2_satisfied(self) -> bool:
        return self.quant.assumption2_satisfied

    @property
    def quantized(self) -> bool:
        return self.algorithm == "qdsg"

    @property
    def bits_per_round(self) -> int:
        per_message = self.bits * self.d if self.quantized else FLOAT_BITS * self.d
        return self.graph.directed_edge_count * per_message

    def assumption3_flags(self) -> dict[str, Optional[bool]]:
        mu = self.objectives.mu
        step_scale_ok: Optional[bool] = None
        if self.schedule.kind == "inv_linear":
            step_scale_ok = mu > 0 and self.schedule.scale >= 1.0 / mu
        return {
            "strongly_convex": mu > 0,
            "step_scale_ok": step_scale_ok,
            "alpha0_at_most_one": self.schedule.initial <= 1.0,
        }

    # ── Init ─────────────────────────────────────────────────────────────

    def init_run(self, seed: int | np.random.SeedSequence | None) -> EngineState:
        """All nodes start at one shared grid point of the box grid."""
        rng = np.random.default_rng(seed)
        top = (1 << self.bits) - 1
        m = rng.integers(0, top, size=self.d, endpoint=True, dtype=np.uint64)
        x0 = grid_values(m, self.box.lower, self.box.upper, self.bits)

        X = np.tile(x0, (self.n, 1))
        lower = np.tile(self.box.lower, (self.n, 1))
        upper = np.tile(self.box.upper, (self.n, 1))
        packed = pack_indices(np.tile(m, (self.n, 1)), self.bits) if self.quantized else None
        alpha0 = self.schedule.alpha(0)
        weight = alpha0 if self.averaging == "weighted" else 1.0

        return EngineState(
            k=0,
            x=X,
            q=X.copy(),
            lower=lower,
            upper=upper,
            packed=packed,
            recv_lower=lower.copy(),
            recv_upper=upper.copy(),
            z_num=weight * X,
            z_den=weight,
            out_of_range=np.zeros(self.n, dtype=np.int64),
        )

    # ── Rounds ───────────────────────────────────────────────────────────

    def _accumulate(self, state: EngineState, X_next: np.ndarray, k_next: int) -> tuple[np.ndarray, float]:
        if self.averaging == "weighted":
            weight = self.schedule.alpha(k_next)
            return state.z_num + weight * X_next, state.z_den + weight
        return state.z_num + X_next, state.z_den + 1.0

    def qdsg_round(self, state: EngineState) -> EngineState:
        k = state.k
        alpha = self.schedule.alpha(k)

        if self.message_log is not None and state.packed is not None:
            self.message_log.write_round(k, state.packed)

        # receivers: decode every sender's codeword over their copy of R_j(k)
        recv_idx = unpack_bits(state.packed, self.bits, self.d)
        Q_recv = grid_values(recv_idx, state.recv_lower, state.recv_upper, self.bits)
        if not np.array_equal(Q_recv, state.q):
            bad = int(np.argmax(np.any(Q_recv != state.q, axis=1)))
            raise DecodeMismatch(f"round {k}: node {bad} decoded differently at the receiver")

        G = self.objectives.subgrads(state.x)
        V = state.x + (self.weights @ Q_recv - state.q) - alpha * G
        X_next = np.clip(V, self.box.lower, self.box.upper)

        lower, upper = adaptive_interval(state.q, self.gamma, alpha)
        outside = np.any((X_next < lower) | (X_next > upper), axis=1)

        idx = quantize_indices(X_next, lower, upper, self.bits)
        Q_next = grid_values(idx, lower, upper, self.bits)
        packed = pack_indices(idx, self.bits)
        recv_lower, recv_upper = adaptive_interval(Q_recv, self.gamma, alpha)

        z_num, z_den = self._accumulate(state, X_next, k + 1)
        trace = RoundTrace(
            k=k,
            alpha=alpha,
            x_mean=state.x.mean(axis=0),
            v_mean=V.mean(axis=0),
            grad_sum=G.sum(axis=0),
            delta_fro=float(np.linalg.norm(state.x - state.q)),
            outside_interval=outside,
        )
        return EngineState(
            k=k + 1,
            x=X_next,
            q=Q_next,
            lower=lower,
            upper=upper,
            packed=packed,
            recv_lower=recv_lower,
            recv_upper=recv_upper,
            z_num=z_num,
            z_den=z_den,
            out_of_range=state.out_of_range + outside.astype(np.int64),
            bits_sent=state.bits_sent + self.bits_per_round,
            trace=trace,
        )

    def dsg_round(self, state: EngineState) -> EngineState:
        k = state.k
        alpha = self.schedule.alpha(k)

        G = self.objectives.subgrads(state.x)
        V = self.weights @ state.x - alpha * G
        X_next = np.clip(V, self.box.lower, self.box.upper)

        z_num, z_den = self._accumulate(state, X_next, k + 1)
        trace = RoundTrace(
            k=k,
            alpha=alpha,
            x_mean=state.x.mean(axis=0),
            v_mean=V.mean(axis=0),
            grad_sum=G.sum(axis=0),
            delta_fro=0.0,
            outside_interval=np.zeros(self.n, dtype=bool),
        )
        return EngineState(
            k=k + 1,
            x=X_next,
            q=X_next.copy(),
            lower=state.lower,
            upper=state.upper,
            packed=None,
            recv_lower=state.recv_lower,
            recv_upper=state.recv_upper,
            z_num=z_num,
            z_den=z_den,
            out_of_range=state.out_of_range,
            bits_sent=state.bits_sent + self.bits_per_round,
            trace=trace,
        )

    def step(self, state: EngineState) -> EngineState:
        return self.qdsg_round(state) if self.quantized else self.dsg_round(state)

    # ── Inspection ───────────────────────────────────────────────────────

    def output_average(self, state: EngineState, node: int) -> np.ndarray:
        """z_i(k): weighted or plain running average, per the engine's mode."""
        return state.z_num[node] / state.z_den

    def output_values(self, state: EngineState) -> np.ndarray:
        """f(z_i(k)) for every node."""
        return self.objectives.totals(state.outputs)

    def new_monitor(self) -> InvariantMonitor:
        return InvariantMonitor(
            sigma2=self.mixing.sigma2,
            L=self.L,
            gamma=self.gamma,
            bits=self.bits,
            d=self.d,
            schedule=self.schedule,
            quantized=self.quantized,
        )

    # ── Full run ─────────────────────────────────────────────────────────

    def run(
        self,
        seed: int | np.random.SeedSequence | None,
        rounds: int,
        log_every: int = 1,
        stop_tol: Optional[float] = None,
        reference: Optional[ReferenceSolution] = None,
    ) -> RunRecord:
        """Execute up to ``rounds`` rounds, logging a row at k = 0, every
        ``log_every`` rounds and at the last round.  With ``stop_tol`` the run
        ends at the first round whose worst-node relative gap is <= stop_tol.
        """
        if rounds < 1 or log_every < 1:
            raise ValueError(f"rounds and log_every must be >= 1, got {rounds}, {log_every}")
        if stop_tol is not None and reference is None:
            raise ValueError("stop rule needs a reference solution")

        flags = self.assumption3_flags()
        record = RunRecord(
            algorithm=self.algorithm,
            n=self.n,
            d=self.d,
            bits=self.bits,
            gamma=self.gamma,
            sigma2=self.mixing.sigma2,
            L=self.L,
            assumption2_satisfied=self.assumption2_satisfied,
            averaging=self.averaging,
            schedule=self.schedule.kind,
            scale=self.schedule.scale,
            f_star=None if reference is None else reference.f_star,
            strongly_convex=bool(flags["strongly_convex"]),
            step_scale_ok=flags["step_scale_ok"],
            alpha0_at_most_one=bool(flags["alpha0_at_most_one"]),
        )
        logger.info("Run flags: %s", flags)

        monitor = self.new_monitor()
        state = self.init_run(seed)
        report = monitor.observe_initial(state)
        sigma_power = 1.0

        def evaluate(st: EngineState) -> tuple[float, float, float]:
            if reference is None:
                return float("nan"), float("nan"), float("nan")
            values = self.output_values(st)
            gap = float(values.max()) - reference.f_star
            dist_sq = float(np.max(np.sum((st.outputs - reference.x_star) ** 2, axis=1)))
            return gap, relative_gap(gap, reference.f_star), dist_sq

        def log_row(st: EngineState, rep, gap: float, rel: float, dist_sq: float) -> None:
            row = MetricRow(
                k=st.k,
                alpha=self.schedule.alpha(st.k),
                gap=gap,
                relative_gap=rel,
                dist_sq=dist_sq,
                max_deviation=st.max_deviation,
                consensus=rep.consensus_norm,
                consensus_bound=rep.consensus_bound,
                delta_max=rep.delta_max,
                delta_bound=rep.delta_bound,
                containment_violations=monitor.counts[ViolationKind.CONTAINMENT],
                delta_violations=monitor.counts[ViolationKind.QUANT_ERROR],
                consensus_violations=monitor.counts[ViolationKind.CONSENSUS],
                compensation_error=rep.compensation_error,
                bits_sent=st.bits_sent,
            )
            record.rows.append(row)
            logger.debug("k=%d gap=%.6g consensus=%.6g", row.k, row.gap, row.consensus)

        gap, rel, dist_sq = evaluate(state)
        log_row(state, report, gap, rel, dist_sq)
        if stop_tol is not None and rel <= stop_tol:
            record.target_reached, record.iterations_to_target = True, 0

        if 1.0 > self.schedule.alpha(0):
            record.sigma_power_exceeds_alpha_at = 0

        for k in range(rounds):
            if record.target_reached:
                break
            sigma_power *= self.mixing.sigma2
            if record.sigma_power_exceeds_alpha_at is None and sigma_power > self.schedule.alpha(k + 1):
                record.sigma_power_exceeds_alpha_at = k + 1

            state = self.step(state)
            report = monitor.observe(state)

            last = state.k == rounds
            due = state.k % log_every == 0 or last
            reached = False
            if due or stop_tol is not None:
                gap, rel, dist_sq = evaluate(state)
                reached = stop_tol is not None and record.target_reached is None and rel <= stop_tol
            if reached:
                record.target_reached, record.iterations_to_target = True, state.k
            if due or reached:
                log_row(state, report, gap, rel, dist_sq)

        if stop_tol is not None and record.target_reached is None:
            record.target_reached = False
            logger.warning("Target relative gap %.3g not reached within %d rounds", stop_tol, rounds)

        record.rounds_executed = state.k
        record.bits_sent = state.bits_sent
        record.containment_violations = monitor.counts[ViolationKind.CONTAINMENT]
        record.delta_violations = monitor.counts[ViolationKind.QUANT_ERROR]
        record.consensus_violations = monitor.counts[ViolationKind.CONSENSUS]
        record.compensation_violations = monitor.counts[ViolationKind.COMPENSATION]
        record.max_compensation_error = monitor.max_compensation_error
        record.final_outputs = state.outputs.copy()
        logger.info(
            "Run %s finished: %d rounds, final gap %.6g, violations=%d",
            self.algorithm, record.rounds_executed, record.final_gap, record.total_violations,
        )
        return record
