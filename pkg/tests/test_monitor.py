"""Tests for the runtime invariant monitor and the closed-form bounds."""

import logging
import math

import numpy as np
import pytest

from src.engine.bounds import consensus_sum_constant, convex_rate_bound, strongly_convex_rate_bound
from src.engine.monitor import InvariantMonitor, ViolationKind, ViolationReport
from src.engine.schedule import StepSchedule
from tests.conftest import make_engine


class TestViolationReport:
    def test_clean(self):
        assert ViolationReport(k=3).clean
        assert ViolationReport(k=3).kinds() == []

    def test_kinds(self):
        report = ViolationReport(k=1, containment=2, consensus=True)
        assert not report.clean
        assert report.kinds() == [ViolationKind.CONTAINMENT, ViolationKind.CONSENSUS]


class TestMonitor:
    def _monitor(self, quantized=True):
        return InvariantMonitor(sigma2=0.5, L=2.0, gamma=10.0, bits=4, d=4, schedule=StepSchedule(), quantized=quantized)

    def test_delta_bound(self):
        monitor = self._monitor()
        assert monitor.delta_bound(3) == pytest.approx(2.0 * 10.0 * 0.5 / 15.0)
        assert self._monitor(quantized=False).delta_bound(3) == 0.0

    def test_needs_trace(self):
        engine = make_engine()
        with pytest.raises(ValueError):
            engine.new_monitor().observe(engine.init_run(0))

    def test_initial_round_clean(self):
        engine = make_engine()
        report = engine.new_monitor().observe_initial(engine.init_run(0))
        assert report.clean
        assert report.consensus_norm <= 1e-12

    def test_consensus_recursion(self):
        engine = make_engine(5, 3)
        monitor = engine.new_monitor()
        state = engine.init_run(0)
        monitor.observe_initial(state)
        expected = 0.0
        for _ in range(20):
            delta_fro = float(np.linalg.norm(state.x - state.q))
            alpha = engine.schedule.alpha(state.k)
            expected = engine.mixing.sigma2 * expected + 6.0 * delta_fro + 3.0 * engine.L * alpha
            state = engine.step(state)
            report = monitor.observe(state)
            assert report.consensus_bound == pytest.approx(expected)
            assert report.consensus_norm <= report.consensus_bound

    @pytest.mark.parametrize("algorithm, loss", [("qdsg", "absolute"), ("qdsg", "quadratic"), ("dsg", "quadratic")])
    def test_compensation_identity(self, algorithm, loss):
        record = make_engine(6, 3, loss=loss, algorithm=algorithm, bits=6).run(1, 300, log_every=100)
        assert record.max_compensation_error <= 1e-10
        assert record.compensation_violations == 0

    def test_tiny_gamma_counts_violations(self, caplog):
        engine = make_engine(4, 2, loss="quadratic", gamma=1e-6)
        with caplog.at_level(logging.WARNING, logger="src.engine.monitor"):
            record = engine.run(0, 30)
        assert record.containment_violations > 0
        assert record.total_violations >= record.containment_violations
        assert record.rounds_executed == 30
        assert any("containment" in message for message in caplog.messages)
        assert sum("First containment" in message for message in caplog.messages) == 1

    def test_unquantized_has_no_quantization_violations(self):
        record = make_engine(algorithm="dsg").run(0, 50)
        assert record.containment_violations == 0
        assert record.delta_violations == 0


class TestBounds:
    def test_convex_at_zero(self):
        assert convex_rate_bound(1, 1, 1.0, 0.0, 0.0, 1, 1.0, 0) == pytest.approx(36.5)

    def test_strongly_convex_at_zero(self):
        assert strongly_convex_rate_bound(1, 1, 1.0, 0.0, 0.0, 1, 0.5, 0) == pytest.approx(72.0)

    def test_consensus_constant(self):
        assert consensus_sum_constant(1, 1, 1.0, 1.0, 0.0, 1) == pytest.approx(12.0)

    def test_envelopes_vanish(self):
        args = (4, 2, 300.0, 3.0, 1 / 3, 11)
        early = convex_rate_bound(*args, r0_sq=1.0, k=100)
        late = convex_rate_bound(*args, r0_sq=1.0, k=100_000)
        assert late < early
        s_early = strongly_convex_rate_bound(*args, alpha0=1.0, k=100)
        s_late = strongly_convex_rate_bound(*args, alpha0=1.0, k=100_000)
        assert s_late < s_early
        assert s_late == pytest.approx(s_early * (1 + math.log(100_001)) / 100_001 * 101 / (1 + math.log(101)))

    def test_more_bits_tighter(self):
        loose = convex_rate_bound(4, 2, 300.0, 3.0, 1 / 3, 11, 1.0, 1000)
        tight = convex_rate_bound(4, 2, 300.0, 3.0, 1 / 3, 16, 1.0, 1000)
        assert tight < loose
