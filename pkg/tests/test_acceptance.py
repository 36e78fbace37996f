"""Tests for the acceptance checks; the full-scale runs are marked slow."""

import numpy as np
import pytest

from src.harness.acceptance import (
    CheckResult,
    check_bit_sweep,
    check_compensation,
    check_convergence_match,
    check_convex_envelope,
    check_determinism,
    check_invariant_suite,
    check_strongly_convex_envelope,
    envelope_ratio,
    run_suite,
)
from src.harness.formatters import format_check_results


def test_invariant_suite_full_scale():
    result = check_invariant_suite()
    assert result.passed, result.detail
    assert result.records[0].rounds_executed == 20000
    assert result.records[0].assumption2_satisfied


def test_fast_suite():
    results = run_suite()
    names = [r.name for r in results]
    assert names == ["invariant-suite", "compensation-identity", "codec-properties", "oracle-equivalences"]
    assert all(r.passed for r in results), format_check_results(results)


def test_compensation_without_runs():
    assert not check_compensation([]).passed


def test_envelope_ratio():
    ks = np.array([0.0, np.e - 1.0])
    assert envelope_ratio(np.array([2.0, 2.0]), ks, 1.0).tolist() == pytest.approx([2.0, np.e])


def test_convex_envelope_small(settings):
    result = check_convex_envelope(n=6, d=3, bits=16, rounds=5000, radius=2.0, drop=1.0, settings=settings)
    assert result.passed, result.detail


def test_strongly_convex_envelope_small(settings):
    result = check_strongly_convex_envelope(n=6, d=3, bits=16, rounds=5000, radius=2.0, drop=0.5, settings=settings)
    assert result.passed, result.detail


def test_determinism_small(settings):
    result = check_determinism(settings, rounds=200, n=10, d=3)
    assert result.passed


def test_comparison_reports_both_losses(settings):
    result = check_convergence_match(rounds=50, settings=settings, n=8, d=2, bits=20)
    assert isinstance(result, CheckResult)
    assert result.passed, result.detail
    assert len(result.records) == 4
    assert "quadratic" in result.detail and "absolute" in result.detail


def test_sweep_reports_entries(settings):
    result = check_bit_sweep((4, 8), rounds=100, settings=settings, n=8, d=2)
    assert "b4=" in result.detail and "b8=" in result.detail


@pytest.mark.slow
class TestFullScale:
    def test_convex_envelope(self, settings):
        result = check_convex_envelope(settings=settings)
        assert result.passed, result.detail
        assert result.records[0].rounds_executed == 20000

    def test_strongly_convex_envelope(self, settings):
        result = check_strongly_convex_envelope(settings=settings)
        assert result.passed, result.detail

    def test_convergence_match(self, settings):
        result = check_convergence_match(settings=settings)
        assert result.passed, result.detail
        assert len(result.records) == 4

    def test_bit_sweep(self, settings):
        result = check_bit_sweep(settings=settings)
        assert result.passed, result.detail
        assert "b12=" in result.detail


def test_format_check_results():
    text = format_check_results([CheckResult("a", True, "ok", 0.5), CheckResult("b", False, "bad", 1.0)])
    assert "[PASS] a" in text and "[FAIL] b" in text
    assert "1/2 checks passed" in text
