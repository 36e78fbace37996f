"""Command-line entry point.

    python -m src.main run --preset fig2-quadratic
    python -m src.main run --n 20 --d 5 --loss absolute --bits 12 --compare
    python -m src.main sweep --preset fig3-absolute
    python -m src.main reference --config my-run.json
    python -m src.main check [--full]

Config precedence: ``QDSG_*`` settings < preset < command-line flags <
``--config`` file.  ``QDSG_OUT`` sets the default output directory and
``QDSG_REFERENCE_TOL`` the default reference tolerance.

Exit codes: 0 success, 2 invalid configuration, 3 invariant-suite failure,
1 any other simulator error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Optional, Sequence

from src.config import ExperimentConfig, Settings, build_config, get_settings, read_config_mapping
from src.errors import ConfigParseError, ConfigValidationError, QdsgError
from src.harness.acceptance import FIG_BITS, run_suite
from src.harness.experiment import (
    build_components,
    load_or_solve_reference,
    reference_path,
    run_comparison,
    run_experiment,
    theorem_bits,
)
from src.harness.formatters import (
    format_check_results,
    format_comparison,
    format_reference,
    format_run_summary,
    format_sweep,
)
from src.harness.registry import ExperimentRegistry
from src.harness.sweep import sweep_bits

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3


# ── Parser ───────────────────────────────────────────────────────────────────


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    """One flag per ExperimentConfig field; unset flags stay out of the namespace."""
    opt = dict(default=argparse.SUPPRESS)
    parser.add_argument("--n", type=int, **opt)
    parser.add_argument("--radius", type=float, **opt)
    parser.add_argument("--seed", type=int, **opt)
    parser.add_argument("--d", type=int, **opt)
    parser.add_argument("--loss", choices=["quadratic", "absolute"], **opt)
    parser.add_argument("--reg", type=float, help="l2 coefficient lambda", **opt)
    parser.add_argument("--box-lower", type=float, **opt)
    parser.add_argument("--box-upper", type=float, **opt)
    parser.add_argument("--reference-tol", type=float, **opt)
    parser.add_argument("--algorithm", choices=["qdsg", "dsg"], **opt)
    parser.add_argument("--bits", type=int, help="bits per coordinate b", **opt)
    parser.add_argument("--gamma", type=float, help="override of the interval constant", **opt)
    parser.add_argument("--schedule", choices=["inv_sqrt", "inv_linear"], **opt)
    parser.add_argument("--scale", type=float, help="step scale a for inv_linear", **opt)
    parser.add_argument("--averaging", choices=["weighted", "plain"], **opt)
    parser.add_argument("--rounds", type=int, help="round cap K", **opt)
    parser.add_argument("--log-every", type=int, **opt)
    parser.add_argument("--stop-rule", choices=["none", "relative_gap"], **opt)
    parser.add_argument("--stop-tol", type=float, **opt)
    parser.add_argument("--output-dir", **opt)
    parser.add_argument("--label", **opt)
    parser.add_argument("--message-log", action="store_true", **opt)
    parser.add_argument("--export-graph", action="store_true", **opt)
    parser.add_argument("--export-dataset", action="store_true", **opt)
    parser.add_argument("--preset", help="named preset from experiments.yaml")
    parser.add_argument("--config", help="JSON or YAML config file; overrides flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdsg", description="Distributed subgradient simulator with adaptive quantization"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    _add_config_flags(run)
    run.add_argument("--compare", action="store_true", help="also run dsg on the same seed and emit curves")

    sweep = sub.add_parser("sweep", help="iterations to target versus bits")
    _add_config_flags(sweep)
    sweep.add_argument("--bits-list", help="comma-separated b values, e.g. 4,6,8")
    sweep.add_argument("--no-baseline", action="store_true", help="skip the unquantized baseline run")

    reference = sub.add_parser("reference", help="solve and cache f* for a config")
    _add_config_flags(reference)

    check = sub.add_parser("check", help="run the acceptance checks")
    check.add_argument("--full", action="store_true", help="include the long-running checks")
    return parser


_NON_CONFIG_KEYS = {"command", "preset", "config", "compare", "bits_list", "no_baseline", "full"}


def resolve_config(
    args: argparse.Namespace, settings: Settings, registry: Optional[ExperimentRegistry] = None
) -> ExperimentConfig:
    """Merge preset, flags and config file, in increasing precedence."""
    data: dict[str, Any] = {"reference_tol": settings.reference_tol}
    preset = None
    if args.preset:
        registry = registry or ExperimentRegistry(settings.presets_file)
        preset = registry.resolve(args.preset)
        if preset is None:
            known = ", ".join(registry.experiment_names())
            raise ConfigValidationError("preset", f"unknown preset {args.preset!r}; known: {known}")
        data.update(preset.get("config", {}) or {})

    data.update({k: v for k, v in vars(args).items() if k not in _NON_CONFIG_KEYS})
    if args.config:
        data.update(read_config_mapping(args.config))

    config = build_config(data)
    if preset and preset.get("auto_bits") and "bits" not in data:
        config = build_config({**data, "bits": theorem_bits(config)})
    return config


def _bits_list(args: argparse.Namespace, settings: Settings) -> list[int]:
    if args.bits_list is not None:
        try:
            return [int(tok) for tok in args.bits_list.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigValidationError("bits_list", str(exc)) from exc
    if args.preset:
        listed = ExperimentRegistry(settings.presets_file).bits_list(args.preset)
        if listed:
            return listed
    return list(FIG_BITS)


# ── Commands ─────────────────────────────────────────────────────────────────


def cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    config = resolve_config(args, settings)
    registry_compare = False
    if args.preset:
        preset = ExperimentRegistry(settings.presets_file).resolve(args.preset) or {}
        registry_compare = preset.get("compare") == "dsg"
    if args.compare or registry_compare:
        quantized, exact, curves = run_comparison(config, settings)
        print(format_run_summary(quantized.record, str(quantized.out_dir)))
        print(format_run_summary(exact.record, str(exact.out_dir)))
        print(format_comparison(quantized.record, exact.record))
        print(f"curves: {', '.join(str(p) for p in curves)}")
    else:
        result = run_experiment(config, settings)
        print(format_run_summary(result.record, str(result.out_dir)))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    config = resolve_config(args, settings)
    result = sweep_bits(config, _bits_list(args, settings), settings, include_baseline=not args.no_baseline)
    print(format_sweep(result))
    return EXIT_OK


def cmd_reference(args: argparse.Namespace, settings: Settings) -> int:
    config = resolve_config(args, settings)
    reference = load_or_solve_reference(config, build_components(config), settings)
    print(format_reference(reference, str(reference_path(config, settings))))
    return EXIT_OK


def cmd_check(args: argparse.Namespace, settings: Settings) -> int:
    results = run_suite(full=args.full, settings=settings)
    print(format_check_results(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "reference": cmd_reference, "check": cmd_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args, settings)
    except (ConfigParseError, ConfigValidationError) as exc:
        logger.error("Invalid configuration: %s", exc)
        return EXIT_INVALID
    except QdsgError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
