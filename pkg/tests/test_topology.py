"""Tests for graph generation, the lazy Metropolis matrix and graph export."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import RetryExhausted
from src.network.topology import (
    Graph,
    export_graph,
    generate_geometric_graph,
    lazy_metropolis,
    load_graph_edges,
    second_singular_value,
)
from tests.conftest import complete_graph


class TestGeometricGraph:
    def test_same_seed_same_graph(self):
        g1 = generate_geometric_graph(30, 0.4, seed=7)
        g2 = generate_geometric_graph(30, 0.4, seed=7)
        assert g1.edges == g2.edges
        assert np.array_equal(g1.coords, g2.coords)

    def test_result_is_connected(self):
        g = generate_geometric_graph(40, 0.3, seed=1)
        assert g.is_connected()
        assert g.to_networkx().number_of_edges() == len(g.edges)

    def test_edges_respect_radius(self):
        g = generate_geometric_graph(25, 0.4, seed=3)
        for i, j in g.edges:
            assert np.linalg.norm(g.coords[i] - g.coords[j]) < 0.4

    def test_large_radius_gives_complete_graph(self):
        g = generate_geometric_graph(6, 2.0, seed=0)
        assert len(g.edges) == 15
        assert g.directed_edge_count == 30

    def test_single_node(self):
        g = generate_geometric_graph(1, 0.1, seed=0)
        assert g.n == 1
        assert g.edges == []

    def test_retry_cap(self):
        with pytest.raises(RetryExhausted) as info:
            generate_geometric_graph(50, 0.01, seed=0, max_attempts=3)
        assert info.value.attempts == 3

    @pytest.mark.parametrize("n, radius", [(0, 0.4), (5, 0.0), (5, -1.0)])
    def test_invalid_arguments(self, n, radius):
        with pytest.raises(ValueError):
            generate_geometric_graph(n, radius, seed=0)


class TestGraph:
    def test_from_edges_drops_self_loops_and_duplicates(self):
        g = Graph.from_edges(3, [(0, 1), (1, 0), (2, 2), (1, 2)])
        assert g.edges == [(0, 1), (1, 2)]
        assert list(g.degrees) == [1, 2, 1]

    def test_disconnected(self):
        assert not Graph.from_edges(3, [(0, 1)]).is_connected()


class TestLazyMetropolis:
    def test_triangle_sigma2(self):
        mixing = lazy_metropolis(complete_graph(3))
        assert abs(mixing.sigma2 - 0.25) <= 1e-10

    def test_path_weights(self):
        mixing = lazy_metropolis(Graph.from_edges(3, [(0, 1), (1, 2)]))
        expected = np.array([[0.75, 0.25, 0.0], [0.25, 0.5, 0.25], [0.0, 0.25, 0.75]])
        assert np.allclose(mixing.weights, expected, atol=1e-15)

    def test_single_node(self):
        mixing = lazy_metropolis(Graph.from_edges(1, []))
        assert mixing.weights.tolist() == [[1.0]]
        assert mixing.sigma2 == 0.0

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(2, 30))
    def test_doubly_stochastic_and_mixing(self, seed, n):
        mixing = lazy_metropolis(generate_geometric_graph(n, 0.5, seed=seed))
        w = mixing.weights
        assert mixing.is_doubly_stochastic
        assert np.array_equal(w, w.T)
        assert np.all(w >= 0)
        assert np.all(np.diag(w) >= 0.5 - 1e-12)
        assert 0.0 <= mixing.sigma2 < 1.0


class TestSecondSingularValue:
    def test_identity(self):
        assert second_singular_value(np.eye(4)) == pytest.approx(1.0)

    def test_averaging_matrix(self):
        assert second_singular_value(np.full((4, 4), 0.25)) == pytest.approx(0.0, abs=1e-12)

    def test_non_square(self):
        with pytest.raises(ValueError):
            second_singular_value(np.ones((2, 3)))


class TestExport:
    def test_round_trip(self, tmp_path):
        g = generate_geometric_graph(12, 0.5, seed=2)
        edges_path, coords_path = export_graph(g, tmp_path)
        assert load_graph_edges(edges_path) == g.edges
        lines = coords_path.read_text().splitlines()
        assert len(lines) == 12
        index, x, y = lines[0].split()
        assert index == "0"
        assert len(x.split(".")[1]) == 6
        assert float(x) == pytest.approx(g.coords[0, 0], abs=5e-7)
