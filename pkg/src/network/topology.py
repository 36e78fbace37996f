"""Network topology – random geometric graphs and lazy Metropolis mixing.

Graphs are generated by dropping n points uniformly in the unit square and
connecting every pair closer than ``radius``; disconnected draws are thrown
away and redrawn from the same RNG stream until one is connected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import networkx as nx
import numpy as np
from scipy.spatial.distance import cdist

from src.errors import NumericalFailure, RetryExhausted

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 1000
STOCHASTIC_TOL = 1e-12


# ── Data classes ─────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected communication graph with per-node positions."""

    n: int
    coords: np.ndarray
    adjacency: tuple[tuple[int, ...], ...]

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[tuple[int, int]], coords: Optional[np.ndarray] = None
    ) -> "Graph":
        neighbors: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            if i == j:
                continue
            neighbors[i].add(j)
            neighbors[j].add(i)
        if coords is None:
            coords = np.zeros((n, 2))
        return cls(n=n, coords=np.asarray(coords, dtype=float), adjacency=tuple(tuple(sorted(s)) for s in neighbors))

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.adjacency], dtype=np.int64)

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as (i, j) with i < j, sorted."""
        return [(i, j) for i, nbrs in enumerate(self.adjacency) for j in nbrs if i < j]

    @property
    def directed_edge_count(self) -> int:
        return int(self.degrees.sum())

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def is_connected(self) -> bool:
        return self.n <= 1 or nx.is_connected(self.to_networkx())


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Doubly stochastic weights A and their second largest singular value."""

    weights: np.ndarray
    sigma2: float
    row_error: float = field(default=0.0)
    col_error: float = field(default=0.0)

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    @property
    def spectral_gap(self) -> float:
        return 1.0 - self.sigma2

    @property
    def is_doubly_stochastic(self) -> bool:
        return self.row_error <= STOCHASTIC_TOL and self.col_error <= STOCHASTIC_TOL


# ── Generation ───────────────────────────────────────────────────────────────


def _geometric_edges(coords: np.ndarray, radius: float) -> list[tuple[int, int]]:
    close = cdist(coords, coords) < radius
    rows, cols = np.nonzero(np.triu(close, k=1))
    return list(zip(rows.tolist(), cols.tolist()))


def generate_geometric_graph(
    n: int, radius: float, seed: int | np.random.SeedSequence | None, max_attempts: int = MAX_ATTEMPTS
) -> Graph:
    """Draw a connected random geometric graph on [0, 1]^2.

    Each attempt takes fresh coordinates from one seeded generator, so the
    result depends only on ``(n, radius, seed)``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")

    rng = np.random.default_rng(seed)
    for attempt in range(1, max_attempts + 1):
        coords = rng.random((n, 2))
        graph = Graph.from_edges(n, _geometric_edges(coords, radius), coords)
        if graph.is_connected():
            logger.info(
                "Geometric graph n=%d radius=%.3f connected after %d attempt(s), %d edges",
                n, radius, attempt, len(graph.edges),
            )
            return graph
        logger.debug("Attempt %d: graph disconnected, redrawing", attempt)

    raise RetryExhausted(n, radius, max_attempts)


# ── Mixing matrix ────────────────────────────────────────────────────────────


def second_singular_value(m: np.ndarray) -> float:
    """Second largest singular value of a square matrix (dense SVD)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 2:
        return 0.0
    try:
        singular = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return float(singular[1])


def lazy_metropolis(g: Graph) -> MixingMatrix:
    """a_ij = 1/(2 max(deg_i, deg_j)) on edges, self-weight takes the rest."""
    weights = np.zeros((g.n, g.n))
    edges = np.array(g.edges, dtype=np.int64).reshape(-1, 2)
    if len(edges):
        deg = g.degrees
        w = 1.0 / (2.0 * np.maximum(deg[edges[:, 0]], deg[edges[:, 1]]))
        weights[edges[:, 0], edges[:, 1]] = w
        weights[edges[:, 1], edges[:, 0]] = w
    np.fill_diagonal(weights, 1.0 - weights.sum(axis=1))

    row_error = float(np.max(np.abs(weights.sum(axis=1) - 1.0)))
    col_error = float(np.max(np.abs(weights.sum(axis=0) - 1.0)))
    mixing = MixingMatrix(
        weights=weights,
        sigma2=second_singular_value(weights),
        row_error=row_error,
        col_error=col_error,
    )
    if not mixing.is_doubly_stochastic:
        logger.warning("Mixing matrix off by %.3e (rows) / %.3e (cols)", row_error, col_error)
    logger.info("Lazy Metropolis matrix n=%d sigma2=%.6f", g.n, mixing.sigma2)
    return mixing


# ── Export ───────────────────────────────────────────────────────────────────


def export_graph(g: Graph, out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``edges.txt`` ("i j") and ``coords.txt`` ("i x y", 6 decimals)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    edges_path = out / "edges.txt"
    coords_path = out / "coords.txt"
    edges_path.write_text("".join(f"{i} {j}\n" for i, j in g.edges), encoding="utf-8")
    coords_path.write_text(
        "".join(f"{i} {x:.6f} {y:.6f}\n" for i, (x, y) in enumerate(g.coords)), encoding="utf-8"
    )
    logger.info("Graph exported to %s", out)
    return edges_path, coords_path


def load_graph_edges(path: str | Path) -> list[tuple[int, int]]:
    edges = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            i, j = line.split()
            edges.append((int(i), int(j)))
    return edges
