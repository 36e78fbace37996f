"""Metrics persistence – CSV series, JSON metadata and per-curve plot data.

Floats are written with 17 significant digits so files compare bit for bit
across runs and languages.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from src.engine.state import MetricRow, RunRecord

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ["round", "gap", "consensus", "delta_bound", "delta_max"]


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return p


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        return header, [row for row in reader]


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path: str | Path, data: dict[str, Any]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(_jsonable(data), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return p


def write_metrics_csv(record: RunRecord, path: str | Path) -> Path:
    """One row per logged round, columns as in ``MetricRow``."""
    p = write_csv(path, MetricRow.columns(), (row.values() for row in record.rows))
    logger.info("Metrics (%d rows) written to %s", len(record.rows), p)
    return p


def curve_name(record: RunRecord) -> str:
    if record.algorithm == "dsg":
        return f"dsg-{record.averaging}"
    return f"qdsg-b{record.bits}-{record.averaging}"


def emit_plot_data(records: Sequence[RunRecord], out_dir: str | Path) -> list[Path]:
    """One CSV per curve: round, gap, consensus error, delta bound and actual delta.

    Data only; rendering is left to whatever plotting tool reads the files.
    """
    if not records:
        raise ValueError("emit_plot_data needs at least one run record")
    out = Path(out_dir)
    paths: list[Path] = []
    seen: dict[str, int] = {}
    for record in records:
        name = curve_name(record)
        seen[name] = seen.get(name, 0) + 1
        if seen[name] > 1:
            name = f"{name}-{seen[name]}"
        rows = ([r.k, r.gap, r.consensus, r.delta_bound, r.delta_max] for r in record.rows)
        paths.append(write_csv(out / f"curve-{name}.csv", PLOT_COLUMNS, rows))
    logger.info("Plot data for %d curve(s) written to %s", len(paths), out)
    return paths
