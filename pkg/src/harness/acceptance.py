"""Acceptance checks – each returns a CheckResult instead of raising.

``run_suite`` runs the fast group (invariant suite, compensation identity,
codec battery, oracle equivalences); ``full=True`` adds the rate envelopes,
the convergence comparison, the bit sweep and the determinism check.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from src.codec.quantizer import (
    compute_gamma,
    grid_values,
    minimum_bits,
    pack_indices,
    quantize_indices,
    unpack_bits,
)
from src.config import ExperimentConfig, Settings, build_config, get_settings, merge_config
from src.engine.monitor import COMPENSATION_TOL
from src.engine.schedule import StepSchedule
from src.engine.simulator import Engine
from src.engine.state import RunRecord
from src.harness.experiment import build_components, build_engine, load_or_solve_reference, run_experiment
from src.harness.sweep import sweep_bits
from src.network.topology import Graph, lazy_metropolis
from src.problems.objectives import Box, ObjectiveSet
from src.problems.reference import solve_reference

logger = logging.getLogger(__name__)

CODEC_CASES = 100_000
EXACT_INDEX_MAX_BITS = 32
FIG_GAMMA = 20.0
FIG_BITS = (4, 5, 6, 7, 8, 10, 12)
SWEEP_GAMMA = 200.0
SWEEP_RADIUS = 1.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    records: list[RunRecord] = field(default_factory=list)


def _timed(name: str, fn: Callable[[], tuple[bool, str, list[RunRecord]]]) -> CheckResult:
    start = time.perf_counter()
    passed, detail, records = fn()
    result = CheckResult(name, bool(passed), detail, time.perf_counter() - start, records)
    log = logger.info if result.passed else logger.warning
    log("Check %s: %s (%.2fs) %s", name, "pass" if passed else "FAIL", result.elapsed, detail)
    return result


# ── Invariant suite ──────────────────────────────────────────────────────────


def theorem_config(n: int = 4, d: int = 2, rounds: int = 20000, seed: int = 0) -> ExperimentConfig:
    """Complete graph (radius 2 covers the unit square), absolute loss, no regularizer.

    ``bits`` is filled in afterwards from the bandwidth condition.
    """
    return build_config(
        {"n": n, "d": d, "radius": 2.0, "loss": "absolute", "reg": 0.0, "rounds": rounds,
         "log_every": rounds, "seed": seed}
    )


def check_invariant_suite(n: int = 4, d: int = 2, rounds: int = 20000, seed: int = 0) -> CheckResult:
    def body():
        config = theorem_config(n, d, rounds, seed)
        components = build_components(config)
        gamma = compute_gamma(components.objectives.L_total, components.mixing.sigma2)
        bits = minimum_bits(n, d, gamma)
        if bits > 52:
            return False, f"bandwidth condition needs b={bits} > 52", []
        config = merge_config(config, {"bits": bits})
        record = build_engine(config, components).run(components.init_seed, rounds, log_every=rounds)
        passed = (
            record.containment_violations == 0
            and record.delta_violations == 0
            and record.consensus_violations == 0
        )
        detail = (
            f"b={bits} gamma={gamma:.4g} containment={record.containment_violations} "
            f"quantization={record.delta_violations} consensus={record.consensus_violations}"
        )
        return passed, detail, [record]

    return _timed("invariant-suite", body)


def check_compensation(records: Sequence[RunRecord]) -> CheckResult:
    def body():
        if not records:
            return False, "no runs to inspect", []
        worst = max(r.max_compensation_error for r in records)
        count = sum(r.compensation_violations for r in records)
        return worst <= COMPENSATION_TOL and count == 0, f"max error {worst:.3e} over {len(records)} run(s)", []

    return _timed("compensation-identity", body)


# ── Codec battery ────────────────────────────────────────────────────────────


def codec_battery(cases: int = CODEC_CASES, d: int = 4, seed: int = 0) -> tuple[int, list[str]]:
    """Randomized codec checks, vectorized per bit width.  Returns (cases run, failures)."""
    rng = np.random.default_rng(seed)
    per_width = math.ceil(cases / 52)
    failures: list[str] = []
    total = 0
    for bits in range(1, 53):
        top = (1 << bits) - 1
        idx = rng.integers(0, top, size=(per_width, d), dtype=np.uint64, endpoint=True)
        if not np.array_equal(unpack_bits(pack_indices(idx, bits), bits, d), idx):
            failures.append(f"b={bits}: pack/unpack mismatch")

        lower = rng.uniform(-10.0, 10.0, size=(per_width, d))
        upper = lower + rng.uniform(0.01, 10.0, size=(per_width, d))
        x = rng.uniform(lower, upper)
        q_idx = quantize_indices(x, lower, upper, bits)
        if q_idx.max() > top:
            failures.append(f"b={bits}: index above 2^b - 1")
        q = grid_values(q_idx, lower, upper, bits)
        step = (upper - lower) / top
        slack = 16.0 * np.finfo(float).eps * (np.abs(lower) + np.abs(upper))
        if np.any(np.abs(x - q) > 0.5 * step + slack):
            failures.append(f"b={bits}: error above half a grid step")

        if bits <= EXACT_INDEX_MAX_BITS:
            if not np.array_equal(quantize_indices(q, lower, upper, bits), q_idx):
                failures.append(f"b={bits}: quantize is not idempotent")
            x2 = np.minimum(x + rng.uniform(0.0, 1.0, size=x.shape) * (upper - x), upper)
            if np.any(quantize_indices(x2, lower, upper, bits) < q_idx):
                failures.append(f"b={bits}: quantize is not monotone")
        total += per_width
    return total, failures


def check_codec(cases: int = CODEC_CASES, seed: int = 0) -> CheckResult:
    def body():
        total, failures = codec_battery(cases, seed=seed)
        detail = f"{total} cases" + ("" if not failures else f"; {len(failures)} failure(s): {failures[0]}")
        return not failures, detail, []

    return _timed("codec-properties", body)


# ── Oracle equivalences ──────────────────────────────────────────────────────


def single_node_matches_centralized(rounds: int = 1000, d: int = 3, seed: int = 0) -> tuple[bool, RunRecord]:
    """n = 1 qdsg must reproduce the centralized projected subgradient bit for bit."""
    rng = np.random.default_rng(seed)
    box = Box.uniform(-1.0, 1.0, d)
    objectives = ObjectiveSet("absolute", rng.random((1, d)), rng.random(1), 0.0, box)
    graph = Graph.from_edges(1, [])
    schedule = StepSchedule()
    engine = Engine(graph, lazy_metropolis(graph), objectives, box, schedule, bits=8)

    state = engine.init_run(seed)
    x = state.x[0].copy()
    identical = True
    for k in range(rounds):
        state = engine.step(state)
        g = objectives.subgrads(x[None, :])[0]
        x = np.clip(x - schedule.alpha(k) * g, box.lower, box.upper)
        identical = identical and bool(np.array_equal(state.x[0], x))
    record = engine.run(seed, rounds, log_every=rounds)
    return identical, record


def two_node_round_error(seed: int = 0, bits: int = 16) -> float:
    """Largest gap between the engine and a scalar re-derivation of two rounds (n=2, d=1)."""
    box = Box.uniform(-1.0, 1.0, 1)
    a = np.array([0.5, 0.8])
    b = np.array([0.3, 0.9])
    objectives = ObjectiveSet("quadratic", a[:, None], b, 0.0, box)
    graph = Graph.from_edges(2, [(0, 1)])
    engine = Engine(graph, lazy_metropolis(graph), objectives, box, StepSchedule(), bits=bits)
    s0 = engine.init_run(seed)
    s2 = engine.step(engine.step(s0))

    gamma = engine.gamma
    top = float((1 << bits) - 1)
    x0 = float(s0.x[0, 0])

    def grad(i: int, x: float) -> float:
        return 2.0 * (a[i] * x - b[i]) * a[i]

    def clip(v: float) -> float:
        return min(max(v, -1.0), 1.0)

    x1 = [clip(x0 - grad(i, x0)) for i in range(2)]
    q1 = []
    for i in range(2):
        lo, hi = x0 - gamma / 2.0, x0 + gamma / 2.0
        step = (hi - lo) / top
        q1.append(lo + round((min(max(x1[i], lo), hi) - lo) / step) * step)
    alpha1 = 1.0 / math.sqrt(2.0)
    mean_q = 0.5 * q1[0] + 0.5 * q1[1]
    x2 = [clip(x1[i] + (mean_q - q1[i]) - alpha1 * grad(i, x1[i])) for i in range(2)]
    return float(np.max(np.abs(s2.x[:, 0] - np.array(x2))))


def closed_form_reference_error() -> float:
    """|f* - solve_reference| on a 1-D least-squares instance with an interior minimizer."""
    a = np.array([0.5, 1.0, 0.25])
    b = np.array([0.2, 0.3, 0.9])
    box = Box.uniform(-1.0, 1.0, 1)
    x_star = float(a @ b / (a @ a))
    f_star = float(np.sum((a * x_star - b) ** 2))
    solved = solve_reference(ObjectiveSet("quadratic", a[:, None], b, 0.0, box))
    return abs(solved.f_star - f_star)


def check_oracles(rounds: int = 1000) -> CheckResult:
    def body():
        identical, record = single_node_matches_centralized(rounds)
        two_node = two_node_round_error()
        k3 = lazy_metropolis(Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])).sigma2
        ref_err = closed_form_reference_error()
        passed = identical and two_node <= 1e-12 and abs(k3 - 0.25) <= 1e-10 and ref_err <= 1e-8
        detail = (
            f"n=1 identical={identical} n=2 error={two_node:.2e} "
            f"K3 sigma2={k3:.12f} 1-D f* error={ref_err:.2e}"
        )
        return passed, detail, [record]

    return _timed("oracle-equivalences", body)


# ── Rate envelopes ───────────────────────────────────────────────────────────


def envelope_ratio(values: np.ndarray, ks: np.ndarray, power: float) -> np.ndarray:
    """values * (k+1)^power / (ln(k+1) + 1)."""
    return values * (ks + 1.0) ** power / (np.log(ks + 1.0) + 1.0)


def _envelope_check(
    name: str,
    config: ExperimentConfig,
    series: str,
    power: float,
    start: int,
    drop: float,
    settings: Optional[Settings],
) -> CheckResult:
    def body():
        components = build_components(config)
        reference = load_or_solve_reference(config, components, settings)
        record = build_engine(config, components).run(
            components.init_seed, config.rounds, log_every=1, reference=reference
        )
        ks = record.series("k")
        values = np.maximum(record.series(series), 0.0)
        window = ks >= start
        ratio = envelope_ratio(values[window], ks[window], power)
        bounded = bool(ratio.max() <= 10.0 * ratio[0]) if ratio[0] > 0 else bool(ratio.max() == 0)
        shrinking = bool(values[-1] < drop * values[window][0])
        detail = (
            f"{series}({start})={values[window][0]:.4g} {series}({int(ks[-1])})={values[-1]:.4g} "
            f"max ratio / ratio({start})={ratio.max() / max(ratio[0], 1e-300):.3g}"
        )
        return bounded and shrinking, detail, [record]

    return _timed(name, body)


def check_convex_envelope(
    n: int = 20, d: int = 5, bits: int = 12, rounds: int = 20000, seed: int = 0, radius: float = 1.0,
    gamma: Optional[float] = None, start: int = 100, drop: float = 0.1,
    settings: Optional[Settings] = None,
) -> CheckResult:
    config = build_config(
        {"n": n, "d": d, "radius": radius, "bits": bits, "loss": "absolute", "averaging": "weighted",
         "schedule": "inv_sqrt", "rounds": rounds, "seed": seed, "gamma": gamma}
    )
    return _envelope_check("convex-envelope", config, "gap", 0.5, start, drop, settings)


def check_strongly_convex_envelope(
    n: int = 20, d: int = 5, bits: int = 12, rounds: int = 20000, seed: int = 0, radius: float = 0.4,
    reg: float = 0.05, gamma: Optional[float] = None, start: int = 100, drop: float = 0.1,
    settings: Optional[Settings] = None,
) -> CheckResult:
    config = build_config(
        {"n": n, "d": d, "radius": radius, "bits": bits, "loss": "quadratic", "reg": reg, "averaging": "plain",
         "schedule": "inv_linear", "scale": 1.0 / (2.0 * reg), "rounds": rounds, "seed": seed, "gamma": gamma}
    )
    return _envelope_check("strongly-convex-envelope", config, "dist_sq", 1.0, start, drop, settings)


# ── Shape reproduction ───────────────────────────────────────────────────────


def figure_config(loss: str, **overrides) -> ExperimentConfig:
    base = {"n": 100, "d": 10, "radius": 0.4, "loss": loss, "bits": 8, "gamma": FIG_GAMMA, "rounds": 5000,
            "log_every": 10}
    return build_config({**base, **overrides})


def check_convergence_match(
    rounds: int = 5000, tol: float = 0.05, settings: Optional[Settings] = None, **overrides
) -> CheckResult:
    def body():
        details, records, passed = [], [], True
        for loss in ("quadratic", "absolute"):
            config = figure_config(loss, rounds=rounds, **overrides)
            components = build_components(config)
            reference = load_or_solve_reference(config, components, settings)
            gaps = {}
            for algorithm in ("qdsg", "dsg"):
                cfg = merge_config(config, {"algorithm": algorithm})
                record = build_engine(cfg, components).run(
                    components.init_seed, rounds, log_every=cfg.log_every, reference=reference
                )
                records.append(record)
                gaps[algorithm] = record.final_gap
            ok = abs(gaps["qdsg"] - gaps["dsg"]) <= tol * max(gaps["dsg"], 1e-9)
            passed = passed and ok
            details.append(f"{loss}: qdsg={gaps['qdsg']:.4g} dsg={gaps['dsg']:.4g}")
        return passed, "; ".join(details), records

    return _timed("convergence-match", body)


def check_bit_sweep(
    b_list: Sequence[int] = FIG_BITS, rounds: int = 20000, settings: Optional[Settings] = None, **overrides
) -> CheckResult:
    """Iterations to a 5% relative gap for each b, on a denser graph and a wider interval than the figure."""
    knobs = {"radius": SWEEP_RADIUS, "gamma": SWEEP_GAMMA, "rounds": rounds, "log_every": rounds,
             "stop_rule": "relative_gap", "stop_tol": 0.05, **overrides}

    def body():
        details, passed = [], True
        for loss in ("quadratic", "absolute"):
            config = figure_config(loss, **knobs)
            result = sweep_bits(config, b_list, settings, include_baseline=False, write_files=False)
            low, high = result.entry(min(b_list)), result.entry(max(b_list))
            ok = result.is_nonincreasing() and low.iterations >= 1.5 * high.iterations
            passed = passed and ok
            details.append(f"{loss}: " + " ".join(f"b{e.bits}={e.iterations}" for e in result.entries))
        return passed, "; ".join(details), []

    return _timed("bit-sweep", body)


def check_determinism(settings: Optional[Settings] = None, rounds: int = 5000, **overrides) -> CheckResult:
    def body():
        s = settings or get_settings()
        base = s.out_dir / "determinism"
        config = figure_config("quadratic", rounds=rounds, **overrides)
        paths: list[Path] = []
        for tag in ("a", "b"):
            result = run_experiment(merge_config(config, {"output_dir": str(base / tag)}), s)
            paths.append(result.files["metrics"])
        same = paths[0].read_bytes() == paths[1].read_bytes()
        return same, f"metrics.csv identical={same}", []

    return _timed("determinism", body)


# ── Suite ────────────────────────────────────────────────────────────────────


def run_suite(full: bool = False, settings: Optional[Settings] = None) -> list[CheckResult]:
    results = [check_invariant_suite(), check_codec(), check_oracles()]
    if full:
        results += [
            check_convex_envelope(settings=settings),
            check_strongly_convex_envelope(settings=settings),
            check_convergence_match(settings=settings),
            check_bit_sweep(settings=settings),
            check_determinism(settings=settings),
        ]
    records = [r for result in results for r in result.records]
    results.insert(1, check_compensation(records))
    return results
