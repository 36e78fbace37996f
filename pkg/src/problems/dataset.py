"""Synthetic regression data – features and labels i.i.d. uniform on [0, 1)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dataset:
    """n samples (a_i, b_i); row i belongs to node i."""

    features: np.ndarray
    labels: np.ndarray

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def samples(self) -> list[tuple[np.ndarray, float]]:
        return [(a.copy(), float(b)) for a, b in zip(self.features, self.labels)]


def generate_dataset(n: int, d: int, seed: int | np.random.SeedSequence | None) -> Dataset:
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    raw = rng.random((n, d + 1))
    return Dataset(features=raw[:, :d].copy(), labels=raw[:, d].copy())


def export_dataset(data: Dataset, path: str | Path) -> Path:
    """One line per sample: "a_1 ... a_d b", 17 significant digits."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    rows = np.column_stack([data.features, data.labels])
    p.write_text("".join(" ".join(f"{v:.17g}" for v in row) + "\n" for row in rows), encoding="utf-8")
    logger.info("Dataset (%d x %d) exported to %s", data.n, data.d, p)
    return p


def import_dataset(path: str | Path) -> Dataset:
    rows = [
        [float(tok) for tok in line.split()]
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    if not rows:
        raise ValueError(f"{path}: empty dataset file")
    widths = {len(r) for r in rows}
    if len(widths) != 1 or widths.pop() < 2:
        raise ValueError(f"{path}: every line needs the same number (>= 2) of values")
    arr = np.array(rows)
    return Dataset(features=arr[:, :-1], labels=arr[:, -1])
