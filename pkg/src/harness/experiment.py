"""Single-run orchestration – components, reference cache, engine, files.

Seed discipline: the master seed is split with ``SeedSequence.spawn`` into
independent streams for the graph, the dataset and the initial codeword.
The streams do not depend on the algorithm or on b, so a qdsg run and a dsg
run with the same seed share graph, data and x(0).
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from src.codec.quantizer import compute_gamma, minimum_bits
from src.codec.wire import MessageLogWriter
from src.config import ExperimentConfig, Settings, get_settings, merge_config, save_config
from src.engine.bounds import consensus_sum_constant, convex_rate_bound, strongly_convex_rate_bound
from src.engine.schedule import StepSchedule
from src.engine.simulator import Engine
from src.engine.state import RunRecord
from src.harness.output import emit_plot_data, write_json, write_metrics_csv
from src.network.topology import Graph, MixingMatrix, export_graph, generate_geometric_graph, lazy_metropolis
from src.problems.dataset import Dataset, export_dataset, generate_dataset
from src.problems.objectives import Box, ObjectiveSet
from src.problems.reference import ReferenceSolution, solve_reference

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
METADATA_FILE = "metadata.json"
CONFIG_FILE = "config.json"
MESSAGE_LOG_FILE = "messages.bin"
DATASET_FILE = "dataset.txt"
REFERENCE_DIR = "reference"


@dataclass
class Components:
    """Everything a run needs besides the algorithm choice."""

    graph: Graph
    mixing: MixingMatrix
    dataset: Dataset
    box: Box
    objectives: ObjectiveSet
    schedule: StepSchedule
    init_seed: np.random.SeedSequence


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    record: RunRecord
    reference: ReferenceSolution
    out_dir: Path
    files: dict[str, Path] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def spawn_seeds(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence, np.random.SeedSequence]:
    graph_seed, data_seed, init_seed = np.random.SeedSequence(seed).spawn(3)
    return graph_seed, data_seed, init_seed


def build_components(config: ExperimentConfig) -> Components:
    graph_seed, data_seed, init_seed = spawn_seeds(config.seed)
    graph = generate_geometric_graph(config.n, config.radius, graph_seed)
    mixing = lazy_metropolis(graph)
    dataset = generate_dataset(config.n, config.d, data_seed)
    box = Box.uniform(config.box_lower, config.box_upper, config.d)
    objectives = ObjectiveSet(config.loss, dataset.features, dataset.labels, config.reg, box)
    schedule = StepSchedule(config.schedule, config.scale)
    return Components(graph, mixing, dataset, box, objectives, schedule, init_seed)


def build_engine(
    config: ExperimentConfig, components: Components, message_log: Optional[MessageLogWriter] = None
) -> Engine:
    return Engine(
        graph=components.graph,
        mixing=components.mixing,
        objectives=components.objectives,
        box=components.box,
        schedule=components.schedule,
        bits=config.bits,
        algorithm=config.algorithm,
        averaging=config.averaging,
        gamma=config.gamma,
        message_log=message_log,
    )


# ── Reference cache ──────────────────────────────────────────────────────────


def reference_key(config: ExperimentConfig) -> str:
    """Hash of the fields that determine the centralized problem."""
    fields = {
        "n": config.n,
        "d": config.d,
        "seed": config.seed,
        "loss": config.loss,
        "reg": config.reg,
        "box_lower": config.box_lower,
        "box_upper": config.box_upper,
        "reference_tol": config.reference_tol,
    }
    return hashlib.sha256(json.dumps(fields, sort_keys=True).encode()).hexdigest()[:16]


def reference_path(config: ExperimentConfig, settings: Settings) -> Path:
    return settings.out_dir / REFERENCE_DIR / f"{reference_key(config)}.json"


def load_or_solve_reference(
    config: ExperimentConfig, components: Components, settings: Optional[Settings] = None, use_cache: bool = True
) -> ReferenceSolution:
    """Cached (x*, f*) for the config's problem; solves and stores on a miss."""
    settings = settings or get_settings()
    path = reference_path(config, settings)
    if use_cache and path.exists():
        try:
            cached = ReferenceSolution.from_dict(json.loads(path.read_text(encoding="utf-8")))
            logger.info("Reference loaded from cache %s (f*=%.12g)", path, cached.f_star)
            return cached
        except (ValueError, KeyError) as exc:
            logger.warning("Ignoring unreadable reference cache %s: %s", path, exc)

    reference = solve_reference(components.objectives, tol=config.reference_tol)
    if use_cache:
        write_json(path, reference.to_dict())
        logger.info("Reference cached at %s", path)
    return reference


# ── Run ──────────────────────────────────────────────────────────────────────


def run_output_dir(config: ExperimentConfig, settings: Settings) -> Path:
    if config.output_dir:
        return Path(config.output_dir)
    return settings.out_dir / config.run_name


def guarantee_values(engine: Engine, record: RunRecord, reference: ReferenceSolution, x0: np.ndarray) -> dict:
    """Closed-form envelopes at the last executed round."""
    k = record.rounds_executed
    args = (engine.n, engine.d, engine.gamma, engine.L, engine.mixing.sigma2, engine.bits)
    r0_sq = float(np.sum((x0 - reference.x_star) ** 2))
    return {
        "round": k,
        "convex_rate_bound": convex_rate_bound(*args, r0_sq=r0_sq, k=k),
        "strongly_convex_rate_bound": strongly_convex_rate_bound(*args, alpha0=engine.schedule.initial, k=k),
        "consensus_sum_constant": consensus_sum_constant(*args),
        "applies": engine.assumption2_satisfied,
    }


def build_metadata(
    config: ExperimentConfig, engine: Engine, record: RunRecord, reference: ReferenceSolution, x0: np.ndarray
) -> dict:
    return {
        "config": config.model_dump(),
        "n": engine.n,
        "d": engine.d,
        "bits": engine.bits,
        "L": engine.L,
        "mu": engine.objectives.mu,
        "sigma2": engine.mixing.sigma2,
        "gamma": engine.gamma,
        "theorem_gamma": engine.theorem_gamma,
        "gamma_overridden": config.gamma is not None,
        "minimum_bits": minimum_bits(engine.n, engine.d, engine.gamma),
        "assumption2_satisfied": engine.assumption2_satisfied,
        "assumption3": engine.assumption3_flags(),
        "edges": len(engine.graph.edges),
        "f_star": reference.f_star,
        "x_star": reference.x_star,
        "reference_method": reference.method,
        "reference_tol": reference.tol,
        "x0": x0,
        "run": record.to_dict(),
        "guarantees": guarantee_values(engine, record, reference, x0),
    }


def run_experiment(config: ExperimentConfig, settings: Optional[Settings] = None) -> ExperimentResult:
    """Run one config end to end and write its files.

    Files: metrics.csv, metadata.json, config.json and, when enabled, the
    graph export, the dataset export and the binary message log.
    """
    settings = settings or get_settings()
    out_dir = run_output_dir(config, settings)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Running %s into %s", config.run_name, out_dir)

    components = build_components(config)
    reference = load_or_solve_reference(config, components, settings)
    files: dict[str, Path] = {"config": save_config(config, out_dir / CONFIG_FILE)}

    if config.export_graph:
        files["edges"], files["coords"] = export_graph(components.graph, out_dir)
    if config.export_dataset:
        files["dataset"] = export_dataset(components.dataset, out_dir / DATASET_FILE)

    stop_tol = config.stop_tol if config.stop_rule == "relative_gap" else None
    message_log = None
    if config.message_log and config.algorithm == "qdsg":
        message_log = MessageLogWriter(out_dir / MESSAGE_LOG_FILE)
        files["messages"] = message_log.path
    try:
        engine = build_engine(config, components, message_log)
        x0 = engine.init_run(components.init_seed).x[0].copy()
        record = engine.run(
            components.init_seed,
            rounds=config.rounds,
            log_every=config.log_every,
            stop_tol=stop_tol,
            reference=reference,
        )
    finally:
        if message_log is not None:
            message_log.close()

    metadata = build_metadata(config, engine, record, reference, x0)
    files["metrics"] = write_metrics_csv(record, out_dir / METRICS_FILE)
    files["metadata"] = write_json(out_dir / METADATA_FILE, metadata)
    return ExperimentResult(config, record, reference, out_dir, files, metadata)


def theorem_bits(config: ExperimentConfig) -> int:
    """Smallest b meeting the bandwidth condition for this config's instance."""
    components = build_components(config)
    L = components.objectives.L_total
    gamma = config.gamma if config.gamma is not None else compute_gamma(L, components.mixing.sigma2)
    bits = minimum_bits(config.n, config.d, gamma)
    logger.info("Bandwidth condition needs b >= %d (gamma=%.6g)", bits, gamma)
    return bits


def run_comparison(
    config: ExperimentConfig, settings: Optional[Settings] = None
) -> tuple[ExperimentResult, ExperimentResult, list[Path]]:
    """qdsg and dsg on the same seed, plus one plot-data CSV per curve."""
    settings = settings or get_settings()
    base_dir = run_output_dir(config, settings)
    quantized = run_experiment(
        merge_config(config, {"algorithm": "qdsg", "output_dir": str(base_dir / "qdsg")}), settings
    )
    exact = run_experiment(
        merge_config(config, {"algorithm": "dsg", "output_dir": str(base_dir / "dsg")}), settings
    )
    curves = emit_plot_data([quantized.record, exact.record], base_dir / "curves")
    return quantized, exact, curves
