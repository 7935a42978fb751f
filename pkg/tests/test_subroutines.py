import pytest

from conftest import alloc, inst
from graphs import CyclePath, EnvyGraph, build_graph
from models import (
    EdgeColor, GraphKind, InputError, InternalInvariantError, PreconditionError, RunTrace
)
from subroutines import (
    all_cycles_resolution, cycle_resolution, envy_cycle_elimination, path_resolution,
    path_resolution_star, single_round_robin, singleton_pool, uncontested_critical
)
from verification import max_alpha_efx

def plain_graph(n, edges):
    g = EnvyGraph(GraphKind.PLAIN, n)
    for u, v in edges:
        g.add_edge(u, v, EdgeColor.PLAIN)
    return g

def test_cycle_resolution_rotates_bundles():
    graph = plain_graph(3, [(0, 1), (1, 2), (2, 0)])
    a = alloc([[0], [1], [2]], 3)
    trace = RunTrace()
    result = cycle_resolution(a, graph, CyclePath((0, 1, 2), True, True), trace)
    assert result.to_dict() == {'bundles': [[1], [2], [0]]}
    assert trace.events[0].op == 'cycle_resolution'

def test_cycle_resolution_rejects_missing_edge():
    graph = plain_graph(2, [(0, 1)])
    with pytest.raises(InternalInvariantError):
        cycle_resolution(alloc([[0], [1]], 2), graph, CyclePath((0, 1), True, True))

def test_self_loop_resolution_keeps_bundle():
    graph = EnvyGraph(GraphKind.DOUBLY_ENHANCED, 2)
    graph.add_edge(0, 0, EdgeColor.DE)
    a = alloc([[0], [1]], 3)
    assert cycle_resolution(a, graph, CyclePath((0,), True, True)) == a

def test_all_cycles_resolution_makes_graph_acyclic():
    values = inst([["0", "1"], ["1", "0"]])
    result = all_cycles_resolution(values, alloc([[0], [1]], 2))
    assert result.to_dict() == {'bundles': [[1], [0]]}
    assert build_graph(values, result, GraphKind.PLAIN).edge_set() == frozenset()

def test_path_resolution_shifts_all_but_terminal():
    graph = plain_graph(3, [(0, 1), (1, 2)])
    a = alloc([[0], [1], [2]], 4)
    updates = path_resolution(a, graph, CyclePath((0, 1, 2), False, True))
    assert updates == {0: frozenset({1}), 1: frozenset({2})}

def test_path_resolution_needs_two_vertices():
    with pytest.raises(InputError):
        path_resolution(alloc([[0]], 1), plain_graph(1, []), CyclePath((0,), False, False))

def test_path_resolution_star_needs_pair_source():
    values = inst([["1", "1", "1"], ["1", "1", "1"]])
    graph = plain_graph(2, [(0, 1)])
    with pytest.raises(PreconditionError):
        path_resolution_star(values, alloc([[0], [1]], 3), graph, CyclePath((0, 1), False, True))

def test_singleton_pool_two_agents():
    # agent 0 holds {g0,g1} and envies agent 1's single g2; agent 1 wants pool good g3
    values = inst([["1", "1", "4", "0"], ["1", "0", "3", "3"]])
    a = alloc([[0, 1], [2]], 4)
    trace = RunTrace()
    result = singleton_pool(values, a, trace)
    assert result.to_dict() == {'bundles': [[2], [0, 3]]}
    assert result.pool == frozenset({1})
    event = trace.events[-1]
    assert event.op == 'path_resolution_star'
    assert event.detail == {'path': [0, 1], 'kept': 0, 'taken': 3, 'returned': [1]}

def test_singleton_pool_without_wanting_agent():
    values = inst([["1", "1", "4", "0"], ["1", "0", "3", "1"]])
    with pytest.raises(InternalInvariantError):
        singleton_pool(values, alloc([[0, 1], [2]], 4))

def test_single_round_robin_order():
    values = inst([["5", "1", "2"], ["5", "1", "2"]])
    result = single_round_robin(values, alloc([[], []], 3), [1, 0])
    assert result.to_dict() == {'bundles': [[0], [2]]}

def test_envy_cycle_elimination_without_envy():
    values = inst([["1", "1", "1"], ["1", "1", "1"]])
    result = envy_cycle_elimination(values, alloc([[0], [1]], 3))
    assert result.to_dict() == {'bundles': [[0, 2], [1]]}

def test_envy_cycle_elimination_feeds_sources(example_inst):
    result = envy_cycle_elimination(example_inst, alloc([[0], [1], [2, 3, 4]], 6))
    assert result.to_dict() == {'bundles': [[0], [1], [2, 3, 4, 5]]}
    assert result.is_complete

def test_envy_cycle_elimination_observer_sees_monotone_values(example_inst):
    seen = []
    envy_cycle_elimination(example_inst, alloc([[2], [3], [4]], 6),
                           observer=lambda a: seen.append([example_inst.bundle_value(i, a.bundles[i])
                                                           for i in range(3)]))
    assert seen
    for before, after in zip(seen, seen[1:]):
        assert all(x <= y for x, y in zip(before, after))

def test_uncontested_critical_source_keeps_good():
    # agent 0 is a source and takes its own critical good
    values = inst([["1", "0", "1"], ["0", "1", "0"]])
    result = uncontested_critical(values, alloc([[0], [1]], 3))
    assert result.to_dict() == {'bundles': [[0, 2], [1]]}
    assert max_alpha_efx(values, result).meets(2)

def test_uncontested_critical_rejects_contested():
    values = inst([["1", "0", "1"], ["0", "1", "1"]])
    with pytest.raises(PreconditionError):
        uncontested_critical(values, alloc([[0], [1]], 3))

def test_uncontested_critical_rejects_two_critical_goods():
    values = inst([["1", "0", "1", "1"], ["0", "1", "0", "0"]])
    with pytest.raises(PreconditionError):
        uncontested_critical(values, alloc([[0], [1]], 4))
