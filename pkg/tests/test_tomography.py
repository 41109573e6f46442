from collections import Counter

import numpy as np
import pytest

from nsccert.matrices import binom
from nsccert.tomography import (
    DisconnectedGraphError,
    build_random_walk_instance,
    complete_graph,
    load_edge_list,
    save_edge_list,
    tree_plus_random_edges,
    wilson_spanning_tree,
)

from oracles import is_spanning_tree


def test_complete_graph():
    edges = complete_graph(12)
    assert len(edges) == binom(12, 2) == 66
    assert edges[0] == (1, 2) and edges[-1] == (11, 12)


def test_edge_list_roundtrip(tmp_path):
    edges = [(1, 2), (2, 3), (1, 3)]
    p = tmp_path / "g.txt"
    save_edge_list(edges, p)
    n, back = load_edge_list(p)
    assert n == 3 and back == edges


def test_edge_validation():
    with pytest.raises(ValueError, match="self-loop"):
        build_random_walk_instance([(1, 1)], 1, 1, 0)
    with pytest.raises(ValueError, match="duplicate"):
        build_random_walk_instance([(1, 2), (2, 1)], 1, 1, 0)


class TestRandomWalkInstance:
    def test_complete_graph_instance(self):
        inst = build_random_walk_instance(complete_graph(12), 33, 20, 5)
        assert inst.routing.shape == (33, 66)
        ent = inst.routing.entries
        assert set(np.unique(ent)) <= {0.0, 1.0}
        for i, path in enumerate(inst.paths):
            assert int(ent[i].sum()) == len(path)
        assert not inst.routing.normalized  # raw 0/1 rows, no column scaling

    def test_single_step_path(self):
        inst = build_random_walk_instance([(1, 2)], 1, 1, 3)
        assert int(inst.routing.entries[0].sum()) == 1

    def test_determinism(self):
        a = build_random_walk_instance(complete_graph(8), 10, 12, 9)
        b = build_random_walk_instance(complete_graph(8), 10, 12, 9)
        assert a.paths == b.paths
        assert a.routing.entries.tobytes() == b.routing.entries.tobytes()

    def test_disconnected_rejected(self):
        with pytest.raises(DisconnectedGraphError):
            build_random_walk_instance([(1, 2), (3, 4)], 2, 3, 0)

    def test_duplicate_paths_warn_after_retries(self):
        # a single edge: every walk visits exactly that edge, so duplicates
        # are unavoidable and must surface as a warning, not an error
        with pytest.warns(UserWarning, match="duplicates"):
            inst = build_random_walk_instance([(1, 2)], 3, 4, 1, retry_cap=5)
        assert len(inst.paths) == 3


class TestWilson:
    def test_three_node_basics(self):
        tree = wilson_spanning_tree(3, complete_graph(3), 7)
        assert len(tree) == 2
        assert is_spanning_tree(3, tree)

    def test_always_spanning_tree(self):
        base = complete_graph(6)
        for seed in range(40):
            tree = wilson_spanning_tree(6, base, seed)
            assert is_spanning_tree(6, tree)

    def test_respects_base_graph(self):
        base = [(1, 2), (2, 3), (3, 4), (4, 1)]  # 4-cycle
        normalized = {(min(u, v), max(u, v)) for u, v in base}
        for seed in range(20):
            tree = wilson_spanning_tree(4, base, seed)
            assert is_spanning_tree(4, tree)
            assert set(tree) <= normalized

    def test_determinism(self):
        base = complete_graph(7)
        assert wilson_spanning_tree(7, base, 3) == wilson_spanning_tree(7, base, 3)

    def test_disconnected_rejected(self):
        with pytest.raises(DisconnectedGraphError):
            wilson_spanning_tree(4, [(1, 2), (3, 4)], 0)

    def test_roughly_uniform_on_triangle(self):
        counts = Counter(
            tuple(wilson_spanning_tree(3, complete_graph(3), seed)) for seed in range(600)
        )
        assert len(counts) == 3
        for freq in counts.values():
            assert 0.25 <= freq / 600 <= 0.42


class TestTreePlusEdges:
    def test_size_and_connectivity(self):
        edges = tree_plus_random_edges(10, 15, 3)
        assert len(edges) == 15
        assert len(set(edges)) == 15
        inst = build_random_walk_instance(edges, 4, 5, 1, num_nodes=10)
        assert inst.routing.shape == (4, 15)

    def test_contains_a_spanning_tree(self):
        edges = tree_plus_random_edges(8, 11, 5)
        tree = wilson_spanning_tree(8, complete_graph(8), 5)
        assert set(tree) <= set(edges)

    def test_bounds_checked(self):
        with pytest.raises(ValueError):
            tree_plus_random_edges(5, 3, 0)
        with pytest.raises(ValueError):
            tree_plus_random_edges(5, 11, 0)

    def test_exact_tree_budget(self):
        edges = tree_plus_random_edges(6, 5, 9)
        assert is_spanning_tree(6, edges)
