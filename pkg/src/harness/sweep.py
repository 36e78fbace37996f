"""Bit sweep – iterations to a relative-gap target as a function of b."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from src.config import ExperimentConfig, Settings, get_settings, merge_config, save_config
from src.engine.state import RunRecord
from src.harness.experiment import build_components, build_engine, load_or_solve_reference, run_output_dir
from src.harness.output import write_csv, write_json

logger = logging.getLogger(__name__)

SWEEP_CSV = "sweep.csv"
SWEEP_JSON = "sweep.json"
SWEEP_COLUMNS = [
    "bits", "iterations", "target_reached", "final_gap", "final_relative_gap", "violations", "bits_sent",
]


@dataclass
class SweepEntry:
    """Outcome of one b.  A run that misses the target counts the full K."""

    bits: Optional[int]
    iterations: int
    target_reached: bool
    final_gap: float
    final_relative_gap: float
    violations: int
    bits_sent: int

    @classmethod
    def from_record(cls, record: RunRecord, bits: Optional[int]) -> "SweepEntry":
        last = record.rows[-1]
        reached = bool(record.target_reached)
        return cls(
            bits=bits,
            iterations=record.iterations_to_target if reached else record.rounds_executed,
            target_reached=reached,
            final_gap=last.gap,
            final_relative_gap=last.relative_gap,
            violations=record.total_violations,
            bits_sent=record.bits_sent,
        )

    def values(self) -> list:
        return [
            self.bits, self.iterations, self.target_reached, self.final_gap,
            self.final_relative_gap, self.violations, self.bits_sent,
        ]


@dataclass
class SweepResult:
    entries: list[SweepEntry] = field(default_factory=list)
    baseline: Optional[SweepEntry] = None
    fit: Optional[tuple[float, float]] = None
    stop_tol: float = 0.05
    rounds: int = 0

    def entry(self, bits: int) -> SweepEntry:
        for e in self.entries:
            if e.bits == bits:
                return e
        raise KeyError(f"no sweep entry for b={bits}")

    @property
    def bits(self) -> list[int]:
        return [e.bits for e in self.entries if e.bits is not None]

    @property
    def iterations(self) -> list[int]:
        return [e.iterations for e in self.entries]

    def is_nonincreasing(self) -> bool:
        """Iterations never go up as b grows (ties allowed)."""
        ordered = sorted(self.entries, key=lambda e: e.bits)
        return all(a.iterations >= b.iterations for a, b in zip(ordered, ordered[1:]))

    def to_dict(self) -> dict:
        return {
            "stop_tol": self.stop_tol,
            "rounds": self.rounds,
            "entries": [dict(zip(SWEEP_COLUMNS, e.values())) for e in self.entries],
            "baseline": None if self.baseline is None else dict(zip(SWEEP_COLUMNS, self.baseline.values())),
            "fit": None if self.fit is None else {"c0": self.fit[0], "c1": self.fit[1]},
        }


def fit_iterations(entries: Iterable[SweepEntry]) -> Optional[tuple[float, float]]:
    """Least-squares (c0, c1) in iterations ~ c0 + c1 / (2^b - 1)^2 over reached entries."""
    reached = [e for e in entries if e.target_reached and e.bits is not None]
    if len({e.bits for e in reached}) < 2:
        return None
    x = np.array([1.0 / float((1 << e.bits) - 1) ** 2 for e in reached])
    y = np.array([float(e.iterations) for e in reached])
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0]), float(coef[1])


def sweep_bits(
    config: ExperimentConfig,
    b_list: Iterable[int],
    settings: Optional[Settings] = None,
    include_baseline: bool = True,
    write_files: bool = True,
) -> SweepResult:
    """Run qdsg once per b (same seed, same graph and data) until the target or K."""
    b_values = list(b_list)
    if config.stop_rule != "relative_gap":
        logger.info("Sweep forces stop_rule=relative_gap with tau=%.3g", config.stop_tol)
    result = SweepResult(stop_tol=config.stop_tol, rounds=config.rounds)
    if not b_values:
        return result

    settings = settings or get_settings()
    components = build_components(config)
    reference = load_or_solve_reference(config, components, settings)

    def run_one(cfg: ExperimentConfig) -> RunRecord:
        engine = build_engine(cfg, components)
        return engine.run(
            components.init_seed,
            rounds=cfg.rounds,
            log_every=cfg.log_every,
            stop_tol=cfg.stop_tol,
            reference=reference,
        )

    for b in b_values:
        cfg = merge_config(config, {"algorithm": "qdsg", "bits": b, "stop_rule": "relative_gap"})
        entry = SweepEntry.from_record(run_one(cfg), b)
        result.entries.append(entry)
        logger.info(
            "Sweep b=%d: %d iterations%s", b, entry.iterations, "" if entry.target_reached else " (target not reached)"
        )

    if include_baseline:
        # x(0) is a grid point, so the baseline starts where the finest entry does
        cfg = merge_config(config, {"algorithm": "dsg", "bits": max(b_values), "stop_rule": "relative_gap"})
        result.baseline = SweepEntry.from_record(run_one(cfg), None)
        logger.info("Sweep baseline dsg: %d iterations", result.baseline.iterations)

    result.fit = fit_iterations(result.entries)
    if write_files:
        write_sweep(result, config, settings)
    return result


def write_sweep(result: SweepResult, config: ExperimentConfig, settings: Settings) -> dict[str, Path]:
    out_dir = run_output_dir(config, settings)
    rows = [e.values() for e in result.entries]
    if result.baseline is not None:
        rows.append(result.baseline.values())
    files = {
        "config": save_config(config, out_dir / "config.json"),
        "csv": write_csv(out_dir / SWEEP_CSV, SWEEP_COLUMNS, rows),
        "json": write_json(out_dir / SWEEP_JSON, result.to_dict()),
    }
    logger.info("Sweep results written to %s", out_dir)
    return files
