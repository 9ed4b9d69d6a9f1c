# -*- coding: utf-8 -*-
# pylint: disable=wrong-import-position
"""Test decomposable regularizers and collaboration graphs."""

# python stuff
import os
import sys
import unittest

# 3rd party stuff
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


HERE = os.path.abspath(os.path.dirname(__file__))
PYTHON_ROOT = os.path.dirname(os.path.dirname(HERE))
if PYTHON_ROOT not in sys.path:
    sys.path.append(PYTHON_ROOT)  # noqa: E402

# our stuff
from proxlast.exceptions import ProxLastAdmissionError, ProxLastValueError  # noqa: E402
from proxlast.prox_core import box, edge_diff, l1, prox, zero  # noqa: E402
from proxlast.regularizers import (  # noqa: E402
    CollaborationGraph,
    DecomposableRegularizer,
    build_network_lasso,
    component_values,
    eval_sum,
    graph_complete,
    graph_cycle,
    graph_path,
    graph_random,
    load_edge_list,
    sample_component,
)
from proxlast.tests.test_setup import get_test_path  # noqa: E402


def is_connected(graph: CollaborationGraph) -> bool:
    """Connectivity through scipy's graph routines."""
    rows = [i for i, _, _ in graph.edges]
    cols = [j for _, j, _ in graph.edges]
    adjacency = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(graph.num_nodes, graph.num_nodes))
    count, _ = connected_components(adjacency, directed=False)
    return count == 1


class TestCollaborationGraph(unittest.TestCase):
    """Test graph construction."""

    def test_validation(self):
        """Test that malformed edges raise."""
        with self.assertRaises(ProxLastValueError):
            CollaborationGraph(num_nodes=3, block_dim=1, edges=((0, 0, 1.0),))
        with self.assertRaises(ProxLastValueError):
            CollaborationGraph(num_nodes=3, block_dim=1, edges=((0, 3, 1.0),))
        with self.assertRaises(ProxLastValueError):
            CollaborationGraph(num_nodes=3, block_dim=1, edges=((0, 1, 0.0),))
        with self.assertRaises(ProxLastValueError):
            CollaborationGraph(num_nodes=0, block_dim=1, edges=())

    def test_families(self):
        """Test path, cycle and complete graphs."""
        path = graph_path(5, block_dim=2)
        self.assertEqual(len(path.edges), 4)
        self.assertEqual(path.dim, 10)
        self.assertEqual(list(path.degrees()), [1, 2, 2, 2, 1])
        self.assertEqual(list(graph_cycle(5).degrees()), [2] * 5)
        self.assertEqual(len(graph_complete(6).edges), 15)
        with self.assertRaises(ProxLastValueError):
            graph_cycle(2)

    def test_random_graph_is_connected(self):
        """Test that random graphs are connected even without extra edges."""
        for seed in range(10):
            rng = np.random.default_rng(seed)
            self.assertTrue(is_connected(graph_random(12, 0.0, rng)))
            self.assertTrue(is_connected(graph_random(12, 0.3, rng)))
        self.assertEqual(len(graph_random(8, 0.0, np.random.default_rng(0)).edges), 7)
        self.assertEqual(len(graph_random(8, 1.0, np.random.default_rng(0)).edges), 28)

    def test_random_graph_is_reproducible(self):
        """Test that equal generator seeds give equal graphs."""
        first = graph_random(10, 0.3, np.random.default_rng(5))
        second = graph_random(10, 0.3, np.random.default_rng(5))
        self.assertEqual(first.edges, second.edges)

    def test_load_edge_list(self):
        """Test reading an i j weight file."""
        graph = load_edge_list(get_test_path("edges.txt"), block_dim=2)
        self.assertEqual(graph.num_nodes, 4)
        self.assertEqual(graph.dim, 8)
        self.assertEqual(graph.edges[2], (2, 3, 1.0))
        self.assertEqual(load_edge_list(get_test_path("edges.txt"), num_nodes=6).num_nodes, 6)

    def test_load_edge_list_malformed(self):
        """Test that a short line raises."""
        with self.assertRaises(ProxLastValueError):
            load_edge_list(get_test_path("edges_bad.txt"))


class TestDecomposableRegularizer(unittest.TestCase):
    """Test the sum of components."""

    def test_network_lasso(self):
        """Test one component per edge and the Lipschitz constant."""
        reg = build_network_lasso(graph_path(4, block_dim=2, weight=0.5))
        self.assertEqual(reg.m, 3)
        self.assertEqual(reg.dim, 8)
        self.assertAlmostEqual(reg.lipschitz_g, np.sqrt(2.0) * 0.5)
        self.assertAlmostEqual(build_network_lasso(graph_path(4, block_dim=2, weight=0.5), p=1).lipschitz_g, 1.0)

    def test_eval_sum(self):
        """Test that the sum matches its components."""
        reg = build_network_lasso(graph_path(3, weight=2.0))
        x = np.array([0.0, 1.0, 3.0])
        self.assertEqual(component_values(reg, x), [2.0, 4.0])
        self.assertAlmostEqual(eval_sum(reg, x), 6.0)

    def test_require_lipschitz(self):
        """Test that indicator components are refused."""
        reg = DecomposableRegularizer.from_components([l1(1.0), box([0.0], [1.0])], dim=1)
        self.assertEqual(reg.lipschitz_g, float("inf"))
        with self.assertRaises(ProxLastAdmissionError):
            reg.require_lipschitz()
        DecomposableRegularizer.from_components([l1(1.0), zero()], dim=1).require_lipschitz()

    def test_empty(self):
        """Test that at least one component is required."""
        with self.assertRaises(ProxLastValueError):
            DecomposableRegularizer.from_components([], dim=1)

    def test_sample_component(self):
        """Test uniform draws with a caller-owned generator."""
        reg = build_network_lasso(graph_complete(5))
        rng = np.random.default_rng(0)
        draws = [sample_component(reg, rng)[0] for _ in range(2000)]
        self.assertEqual(set(draws), set(range(reg.m)))
        j, op = sample_component(reg, np.random.default_rng(1))
        self.assertIs(op, reg.components[j])
        self.assertEqual(j, sample_component(reg, np.random.default_rng(1))[0])


class TestProxSum(unittest.TestCase):
    """Test the prox of the whole sum."""

    def test_l1_shares_closed_form(self):
        """Test that l1 shares collapse to one soft-threshold."""
        reg = DecomposableRegularizer.from_components([l1(0.25), l1(0.75)], dim=3)
        z, _ = reg.prox_sum(np.array([2.0, -0.5, 0.1]), 1.0)
        np.testing.assert_allclose(z, [1.0, 0.0, 0.0])

    def test_single_edge_matches_closed_form(self):
        """Test that the dual method reproduces a single edge prox."""
        op = edge_diff(0, 1, 0.3, block_dim=2)
        reg = DecomposableRegularizer.from_components([op], dim=4)
        v = np.array([1.0, -2.0, 0.5, 0.5])
        z, state = reg.prox_sum(v, 0.7)
        np.testing.assert_allclose(z, prox(op, v, 0.7), atol=1e-7)
        self.assertGreater(state.iterations, 0)

    def test_heavy_path_collapses_to_mean(self):
        """Test that heavy edges fuse every node at the mean."""
        reg = build_network_lasso(graph_path(3, weight=10.0))
        z, _ = reg.prox_sum(np.array([0.0, 1.0, 5.0]), 1.0)
        np.testing.assert_allclose(z, [2.0, 2.0, 2.0], atol=1e-6)

    def test_warm_start(self):
        """Test that a warm start from the solved dual finishes at once."""
        reg = build_network_lasso(graph_cycle(5, weight=0.4))
        v = np.array([0.0, 2.0, -1.0, 3.0, 0.5])
        z_cold, state = reg.prox_sum(v, 1.0)
        z_warm, warm_state = reg.prox_sum(v, 1.0, state=state)
        np.testing.assert_allclose(z_warm, z_cold, atol=1e-7)
        self.assertLessEqual(warm_state.iterations, state.iterations)

    def test_validation(self):
        """Test bad steps, shapes and unsupported components."""
        reg = build_network_lasso(graph_path(3))
        with self.assertRaises(ProxLastValueError):
            reg.prox_sum(np.zeros(3), 0.0)
        with self.assertRaises(ProxLastValueError):
            reg.prox_sum(np.zeros(4), 1.0)
        with self.assertRaises(ProxLastValueError):
            DecomposableRegularizer.from_components([box([0.0], [1.0])], dim=1).prox_sum(np.zeros(1), 1.0)
