"""Shared fixtures – small instances that run in milliseconds."""

import numpy as np
import pytest

from src.config import Settings
from src.engine.schedule import StepSchedule
from src.engine.simulator import Engine
from src.network.topology import Graph, lazy_metropolis
from src.problems.objectives import Box, ObjectiveSet


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-scale acceptance runs (deselect with -m 'not slow')")


@pytest.fixture
def settings(tmp_path, monkeypatch):
    monkeypatch.setenv("QDSG_OUT", str(tmp_path / "results"))
    return Settings()


@pytest.fixture
def box3():
    return Box.uniform(-1.0, 1.0, 3)


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def make_objectives(n: int, d: int, loss: str = "absolute", reg: float = 0.0, seed: int = 0) -> ObjectiveSet:
    rng = np.random.default_rng(seed)
    return ObjectiveSet(loss, rng.random((n, d)), rng.random(n), reg, Box.uniform(-1.0, 1.0, d))


def make_engine(
    n: int = 4,
    d: int = 2,
    loss: str = "absolute",
    reg: float = 0.0,
    bits: int = 12,
    algorithm: str = "qdsg",
    averaging: str = "weighted",
    schedule: StepSchedule | None = None,
    gamma: float | None = None,
    seed: int = 0,
) -> Engine:
    graph = complete_graph(n)
    objectives = make_objectives(n, d, loss, reg, seed)
    return Engine(
        graph,
        lazy_metropolis(graph),
        objectives,
        objectives.box,
        schedule or StepSchedule(),
        bits=bits,
        algorithm=algorithm,
        averaging=averaging,
        gamma=gamma,
    )
