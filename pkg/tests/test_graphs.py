import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvkahan.graphs import (
    Disconnected,
    DuplicateEdge,
    GraphError,
    LabeledGraph,
    NotCycleClosed,
    SelfLoop,
    VertexOutOfRange,
    biconnected_components,
    block_decompose,
    canonical_form,
    complete_graph,
    cycle_closure,
    enumerate_gsystem_classes,
    enumerate_labeled_trees,
    from_edge_list,
    independence_count,
    is_cycle_closed,
    matrix_tree_count,
    path_graph,
    random_connected_graph,
    spanning_trees,
    star_graph,
    tree_path_edges,
)

TRIANGLE_PENDANT = from_edge_list(4, [(1, 2), (2, 3), (3, 4), (2, 4)])


def test_graph_validation_errors():
    with pytest.raises(SelfLoop):
        from_edge_list(3, [(1, 1), (1, 2)])
    with pytest.raises(DuplicateEdge):
        from_edge_list(3, [(1, 2), (2, 1)])
    with pytest.raises(VertexOutOfRange):
        from_edge_list(3, [(1, 4)])
    disconnected = from_edge_list(4, [(1, 2), (3, 4)])
    with pytest.raises(Disconnected):
        spanning_trees(disconnected)
    with pytest.raises(Disconnected):
        cycle_closure(disconnected)
    with pytest.raises(GraphError):
        LabeledGraph.from_dict({"n": 3})


def test_json_round_trip():
    assert LabeledGraph.from_dict(TRIANGLE_PENDANT.to_json()) == TRIANGLE_PENDANT


@pytest.mark.parametrize("n,count", [(2, 1), (3, 3), (4, 16), (5, 125), (6, 1296)])
def test_labeled_tree_count(n, count):
    trees = enumerate_labeled_trees(n)
    assert len(trees) == count == n ** (n - 2)
    assert len({t.graph.edge_set for t in trees}) == count


def test_spanning_trees_of_examples():
    assert len(spanning_trees(complete_graph(4))) == 16
    trees = spanning_trees(TRIANGLE_PENDANT)
    assert len(trees) == 3
    assert {t.edges for t in trees} == {
        ((1, 2), (2, 3), (2, 4)),
        ((1, 2), (2, 3), (3, 4)),
        ((1, 2), (2, 4), (3, 4)),
    }
    assert trees[0].parent_edge_ids == (1, 2, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 7), st.integers(0, 10**6))
def test_kirchhoff_matches_networkx(n, seed):
    g = random_connected_graph(n, random.Random(seed))
    G = nx.Graph(list(g.edges))
    assert matrix_tree_count(g) == round(nx.number_of_spanning_trees(G))


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 8), st.integers(0, 10**6))
def test_biconnected_components_match_networkx(n, seed):
    g = random_connected_graph(n, random.Random(seed))
    G = nx.Graph(list(g.edges))
    expected = {frozenset(c) for c in nx.biconnected_components(G)}
    assert set(biconnected_components(g)) == expected


def test_cycle_closure():
    square = from_edge_list(4, [(1, 2), (2, 3), (3, 4), (1, 4)])
    assert not is_cycle_closed(square)
    assert cycle_closure(square).edge_set == complete_graph(4).edge_set
    assert is_cycle_closed(TRIANGLE_PENDANT)
    assert cycle_closure(path_graph(5)).edge_set == path_graph(5).edge_set


def test_block_decomposition_of_triangle_pendant():
    bd = block_decompose(TRIANGLE_PENDANT)
    assert list(bd.blocks) == [frozenset({2, 3, 4}), frozenset({1, 2})]
    assert list(bd.block_sizes) == [3, 2]
    assert independence_count(bd) == 1
    square = from_edge_list(4, [(1, 2), (2, 3), (3, 4), (1, 4)])
    with pytest.raises(NotCycleClosed):
        block_decompose(square)


def test_block_decomposition_of_tree_and_complete():
    assert independence_count(block_decompose(star_graph(5))) == 0
    assert independence_count(block_decompose(complete_graph(5))) == 3


@pytest.mark.parametrize("n,count", [(4, 2), (5, 6), (6, 16)])
def test_gsystem_class_counts(n, count):
    classes = enumerate_gsystem_classes(n)
    assert len(classes) == count
    forms = {canonical_form(g) for g, _ in classes}
    assert len(forms) == count
    for g, c in classes:
        assert is_cycle_closed(g)
        assert c == independence_count(block_decompose(g)) >= 1


def test_gsystem_classes_match_networkx_isomorphism():
    classes = [nx.Graph(list(g.edges)) for g, _ in enumerate_gsystem_classes(5)]
    for i, a in enumerate(classes):
        for b in classes[i + 1 :]:
            assert not nx.is_isomorphic(a, b)


def test_canonical_form_is_label_invariant():
    relabel = {1: 3, 2: 1, 3: 4, 4: 2}
    other = from_edge_list(4, [(relabel[u], relabel[v]) for u, v in TRIANGLE_PENDANT.edges])
    assert canonical_form(other) == canonical_form(TRIANGLE_PENDANT)


def test_tree_path_edges_first_edge():
    from lvkahan.graphs import TreeData

    t = TreeData.from_graph(path_graph(4))
    first = tree_path_edges(t, 1)
    assert first == {2: 1, 3: 1, 4: 1}
    assert tree_path_edges(t, 4) == {1: 3, 2: 3, 3: 3}
