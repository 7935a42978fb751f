from fractions import Fraction

import pytest

from conftest import alloc, inst
from graphs import (
    CyclePath, EnvyGraph, build_graph, find_cycle, has_cycle, path_from_source_to, secluded_set,
    shortest_jaundiced_path_to, sources, three_b_rest_c, to_dot
)
from models import EdgeColor, GraphKind, InputError, ThreeValueParams

def graph_with(n, edges, kind=GraphKind.PLAIN):
    g = EnvyGraph(kind, n)
    for u, v, *color in edges:
        g.add_edge(u, v, color[0] if color else EdgeColor.PLAIN)
    return g

def test_plain_graph_of_example(example_inst):
    graph = build_graph(example_inst, alloc([[0], [1], [5]], 6), GraphKind.PLAIN)
    assert graph.edge_set() == {(2, 0), (2, 1)}
    assert sources(graph) == [2]

def test_edgeless_graph_sources():
    graph = graph_with(3, [])
    assert sources(graph) == [0, 1, 2]
    assert find_cycle(graph) is None

def test_self_loop_is_not_a_source():
    graph = graph_with(2, [(0, 0, EdgeColor.DE)], GraphKind.DOUBLY_ENHANCED)
    assert sources(graph) == [1]
    cycle = find_cycle(graph, require_jaundiced=True)
    assert cycle == CyclePath((0,), True, True)
    assert cycle.edges() == [(0, 0)]

def test_reduced_drops_edge_at_two_thirds_boundary():
    # |X0| = 2 with v0(X0) = 2 against a singleton worth 3: 3*2 >= 2*3
    values = inst([["1", "1", "3"], ["0", "0", "1"]])
    a = alloc([[0, 1], [2]], 3)
    assert build_graph(values, a, GraphKind.PLAIN).edge_set() == {(0, 1)}
    assert build_graph(values, a, GraphKind.REDUCED).edge_set() == frozenset()

def test_reduced_keeps_edge_below_boundary():
    values = inst([["1", "1", "4"], ["0", "0", "1"]])
    a = alloc([[0, 1], [2]], 3)
    assert build_graph(values, a, GraphKind.REDUCED).edge_set() == {(0, 1)}

def test_enhanced_adds_red_edges_into_two_good_sources():
    # agent 1 holds a singleton and values agent 0's pair at 2/3 of its own
    values = inst([["1", "1", "1", "0"], ["1", "1", "3", "0"]])
    a = alloc([[0, 1], [2]], 4)
    graph = build_graph(values, a, GraphKind.ENHANCED)
    assert graph.edge_set() == {(1, 0)}
    assert graph.color(1, 0) == EdgeColor.RED
    assert graph.sources() == [1]

def test_grey_edges_between_value_one_singletons(example_inst):
    a = alloc([[0], [1], [2]], 6)
    graph = build_graph(example_inst, a, GraphKind.REDUCED_PLUS)
    assert graph.color(0, 1) == EdgeColor.GREY
    assert graph.color(1, 0) == EdgeColor.GREY
    assert graph.color(2, 0) == EdgeColor.PLAIN
    assert find_cycle(graph, require_jaundiced=True) is None
    plain_cycle = find_cycle(graph)
    assert plain_cycle is not None and not plain_cycle.jaundiced

def test_enhanced_plus_needs_params(example_inst):
    with pytest.raises(InputError):
        build_graph(example_inst, alloc([[0], [1], [2]], 6), GraphKind.ENHANCED_PLUS)

def test_enhanced_plus_red_edge(example_inst, example):
    # agent 0 sees a b-good in source 2's bundle and another in the pool
    a = alloc([[0], [1], [2, 4]], 6)
    values = example_inst
    rows = [list(r) for r in values.values]
    rows[0][3] = Fraction(3, 5)
    values = inst(rows)
    graph = build_graph(values, a, GraphKind.ENHANCED_PLUS, example.params)
    assert graph.has_edge(0, 2)
    assert graph.color(0, 2) == EdgeColor.RED

def test_three_b_rest_c():
    params = ThreeValueParams(Fraction(3, 5), Fraction(1, 100))
    values = inst([["3/5", "3/5", "3/5", "1/100", "1"]])
    assert three_b_rest_c(values, 0, frozenset({0, 1, 2, 3}), params)
    assert three_b_rest_c(values, 0, frozenset({0, 1, 2}), params)
    assert not three_b_rest_c(values, 0, frozenset({0, 1, 3}), params)
    assert not three_b_rest_c(values, 0, frozenset({0, 1, 2, 4}), params)

def test_find_cycle_is_deterministic():
    graph = graph_with(4, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 2)])
    cycle = find_cycle(graph)
    assert cycle.vertices == (0, 1, 2)
    assert cycle.edges() == [(0, 1), (1, 2), (2, 0)]
    assert has_cycle(graph)

def test_jaundiced_cycle_skips_all_grey_cycles():
    graph = graph_with(3, [(0, 1, EdgeColor.GREY), (1, 0, EdgeColor.GREY),
                           (1, 2, EdgeColor.PLAIN), (2, 1, EdgeColor.GREY)], GraphKind.REDUCED_PLUS)
    cycle = find_cycle(graph, require_jaundiced=True)
    assert cycle.vertices == (1, 2)
    assert cycle.jaundiced

def test_path_from_source():
    graph = graph_with(3, [(0, 1), (1, 2)])
    path = path_from_source_to(graph, 2)
    assert path.vertices == (0, 1, 2)
    assert not path.is_cycle
    assert path_from_source_to(graph, 0).vertices == (0,)

def test_path_into_cycle_is_unreachable():
    graph = graph_with(3, [(1, 2), (2, 1)])
    assert sources(graph) == [0]
    assert path_from_source_to(graph, 1) is None

def test_shortest_jaundiced_path():
    graph = graph_with(3, [(0, 1, EdgeColor.PLAIN), (1, 2, EdgeColor.GREY)], GraphKind.REDUCED_PLUS)
    path = shortest_jaundiced_path_to(graph, 2)
    assert path.vertices == (0, 1, 2)
    only_grey = graph_with(2, [(0, 1, EdgeColor.GREY)], GraphKind.REDUCED_PLUS)
    assert shortest_jaundiced_path_to(only_grey, 1) is None

def test_secluded_set_all_value_one_singletons():
    values = inst([["1", "1/2", "0"], ["1/2", "1", "0"]])
    assert secluded_set(values, alloc([[0], [1]], 3)) == {0, 1}

def test_secluded_set_empty_when_reached():
    b = "3/5"
    values = inst([[b, "1", "0"], ["0", "1", "0"]])
    assert secluded_set(values, alloc([[0], [1]], 3)) == frozenset()

def test_to_dot():
    text = to_dot(graph_with(2, [(0, 1)]))
    assert text.startswith("digraph envy {")
    assert '0 -> 1 [label="plain"];' in text
