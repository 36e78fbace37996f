"""Plain-text summaries for the CLI."""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional, Sequence

from src.engine.state import RunRecord
from src.problems.reference import ReferenceSolution

if TYPE_CHECKING:
    from src.harness.acceptance import CheckResult
    from src.harness.sweep import SweepResult


def _flag(value: Optional[bool]) -> str:
    if value is None:
        return "n/a"
    return "yes" if value else "no"


def format_run_summary(record: RunRecord, out_dir: str = "") -> str:
    lines = [
        f"{record.algorithm} n={record.n} d={record.d} b={record.bits} ({record.averaging} averaging, {record.schedule})",
        f"  sigma2={record.sigma2:.6f}  L={record.L:.6g}  gamma={record.gamma:.6g}",
        f"  rounds={record.rounds_executed}  bits sent={record.bits_sent}",
    ]
    if record.f_star is not None:
        lines.append(f"  f*={record.f_star:.12g}  final gap={record.final_gap:.6g}")
    if record.target_reached is not None:
        target = f"reached at k={record.iterations_to_target}" if record.target_reached else "not reached"
        lines.append(f"  target: {target}")
    lines.append(
        "  violations: "
        f"containment={record.containment_violations} "
        f"quantization={record.delta_violations} "
        f"consensus={record.consensus_violations} "
        f"compensation={record.compensation_violations}"
    )
    lines.append(
        f"  bandwidth condition: {_flag(record.assumption2_satisfied)}  "
        f"strongly convex: {_flag(record.strongly_convex)}  "
        f"step scale ok: {_flag(record.step_scale_ok)}"
    )
    if out_dir:
        lines.append(f"  output: {out_dir}")
    return "\n".join(lines)


def format_comparison(quantized: RunRecord, exact: RunRecord) -> str:
    gap_q, gap_e = quantized.final_gap, exact.final_gap
    rel = abs(gap_q - gap_e) / max(gap_e, 1e-9)
    return (
        f"final gap qdsg(b={quantized.bits})={gap_q:.6g}  dsg={gap_e:.6g}  "
        f"relative difference={rel:.3%}\n"
        f"bits sent qdsg={quantized.bits_sent}  dsg={exact.bits_sent}"
    )


def format_sweep(result: "SweepResult") -> str:
    if not result.entries:
        return "empty sweep"
    lines = [f"{'b':>4} {'iterations':>11} {'reached':>8} {'final gap':>12} {'violations':>10}"]
    for e in result.entries:
        lines.append(
            f"{e.bits:>4} {e.iterations:>11} {_flag(e.target_reached):>8} {e.final_gap:>12.6g} {e.violations:>10}"
        )
    if result.baseline is not None:
        b = result.baseline
        lines.append(f"{'dsg':>4} {b.iterations:>11} {_flag(b.target_reached):>8} {b.final_gap:>12.6g} {'-':>10}")
    if result.fit is not None:
        c0, c1 = result.fit
        lines.append(f"fit: iterations ~ {c0:.4g} + {c1:.4g} / (2^b - 1)^2")
    lines.append(f"nonincreasing in b: {_flag(result.is_nonincreasing())}")
    return "\n".join(lines)


def format_reference(reference: ReferenceSolution, path: str = "") -> str:
    head = f"f*={reference.f_star:.15g} ({reference.method}, {reference.iterations} iterations, tol={reference.tol:g})"
    x = " ".join(f"{v:.6g}" for v in reference.x_star)
    text = f"{head}\nx*=[{x}]"
    if path:
        text += f"\ncached: {path}"
    return text


def format_check_results(results: Sequence["CheckResult"]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"[{status}] {r.name} ({r.elapsed:.2f}s): {r.detail}")
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
