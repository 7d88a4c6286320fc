import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bntv.model import UndirectedGraph, gen_random_net, moralize
from bntv.treedecomp import (
    TreeDecomposition,
    decompose,
    elimination_order,
    single_bag,
    treewidth_exact,
    verify_decomposition,
)


def path_graph(n):
    return UndirectedGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def clique(n):
    return UndirectedGraph.from_edges(n, itertools.combinations(range(n), 2))


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return UndirectedGraph.from_edges(n, edges)


def simulate_elimination(g, order):
    """Largest scope (vertex + live neighbours) met while eliminating along ``order``."""
    adj = [set(a) for a in g.adjacency]
    worst = 0
    for v in order:
        nbrs = adj[v]
        worst = max(worst, len(nbrs) + 1)
        for a, b in itertools.combinations(nbrs, 2):
            adj[a].add(b)
            adj[b].add(a)
        for u in nbrs:
            adj[u].discard(v)
        adj[v] = set()
    return worst


def test_path_has_width_one():
    td = decompose(path_graph(4))
    assert td.width == 1
    assert verify_decomposition(path_graph(4), td)


def test_triangle_has_width_two():
    g = clique(3)
    assert decompose(g).width == 2


@pytest.mark.parametrize("n", [2, 4, 6])
def test_clique_width(n):
    assert decompose(clique(n)).width == n - 1


def test_disconnected_graph_gives_a_tree():
    g = UndirectedGraph.from_edges(5, [(0, 1), (3, 4)])
    td = decompose(g)
    assert verify_decomposition(g, td)
    assert td.width == 1


@pytest.mark.parametrize("seed", range(10))
def test_moralized_random_dag(seed):
    g = moralize(gen_random_net(8, 2, "random-dag:2", seed=seed))
    assert verify_decomposition(g, decompose(g))


def test_single_bag_is_valid():
    g = random_graph(6, 0.5, 1)
    assert verify_decomposition(g, single_bag(6))


def test_dropping_a_vertex_breaks_coverage():
    g = path_graph(4)
    td = decompose(g)
    broken = TreeDecomposition(tuple(b - {2} for b in td.bags), td.tree_edges)
    assert not verify_decomposition(g, broken)


def test_missing_edge_and_running_intersection():
    g = path_graph(3)
    assert not verify_decomposition(g, TreeDecomposition((frozenset({0, 1}), frozenset({2})), ((0, 1),)))
    # 0 appears in bags 0 and 2 but not in bag 1 between them
    td = TreeDecomposition((frozenset({0, 1}), frozenset({1, 2}), frozenset({0, 2})), ((0, 1), (1, 2)))
    assert not verify_decomposition(UndirectedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)]), td)


def test_non_tree_rejected():
    g = path_graph(2)
    bags = (frozenset({0, 1}), frozenset({0, 1}))
    assert not verify_decomposition(g, TreeDecomposition(bags, ()))
    assert not verify_decomposition(g, TreeDecomposition(bags, ((0, 1), (1, 0))))


def test_deterministic():
    g = random_graph(10, 0.3, 7)
    assert decompose(g) == decompose(g)


def test_exact_treewidth_reference():
    assert treewidth_exact(path_graph(6)) == 1
    assert treewidth_exact(clique(5)) == 4
    cycle = UndirectedGraph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)])
    assert treewidth_exact(cycle) == 2
    grid = UndirectedGraph.from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)])
    assert treewidth_exact(grid) == 2


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 12), p=st.floats(0.0, 1.0), seed=st.integers(0, 2**32 - 1))
def test_decompose_always_verifies(n, p, seed):
    g = random_graph(n, p, seed)
    td = decompose(g)
    assert verify_decomposition(g, td)
    order = elimination_order(td)
    assert sorted(order) == list(range(n))
    assert simulate_elimination(g, order) <= td.width + 1


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 8), p=st.floats(0.0, 1.0), seed=st.integers(0, 2**32 - 1))
def test_heuristic_width_upper_bounds_treewidth(n, p, seed):
    g = random_graph(n, p, seed)
    assert decompose(g).width >= treewidth_exact(g)


@pytest.mark.parametrize("seed", range(5))
def test_trees_have_width_one(seed):
    g = moralize(gen_random_net(9, 2, "tree", seed=seed))
    assert decompose(g).width == treewidth_exact(g) == 1


def test_elimination_order_single_bag():
    assert sorted(elimination_order(single_bag(4))) == [0, 1, 2, 3]


def test_elimination_order_on_path_goes_endpoint_inward():
    g = path_graph(5)
    order = elimination_order(decompose(g))
    assert order[0] in (0, 4)
    assert simulate_elimination(g, order) <= 2
