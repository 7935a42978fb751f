"""
Envy graphs over a partial allocation: construction, sources, cycles, paths, secluded sets
"""
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import networkx as nx

from models import (
    EdgeColor, GraphKind, InputError, Instance, ONE, PartialAllocation, ThreeValueParams
)

@dataclass(frozen=True)
class CyclePath:
    """An ordered vertex sequence; cycles close from the last vertex back to the first"""
    vertices: Tuple[int, ...]
    is_cycle: bool
    jaundiced: bool

    def edges(self) -> List[Tuple[int, int]]:
        pairs = list(zip(self.vertices, self.vertices[1:]))
        if self.is_cycle:
            pairs.append((self.vertices[-1], self.vertices[0]))
        return pairs

    def __len__(self):
        return len(self.vertices)

    def to_dict(self) -> Dict:
        return {'vertices': list(self.vertices), 'cycle': self.is_cycle, 'jaundiced': self.jaundiced}

class EnvyGraph:
    """A directed graph over agents with colored edges"""

    def __init__(self, kind: GraphKind, num_agents: int):
        self.kind = kind
        self.digraph = nx.DiGraph()
        self.digraph.add_nodes_from(range(num_agents))

    @property
    def num_agents(self) -> int:
        return self.digraph.number_of_nodes()

    def add_edge(self, u: int, v: int, color: EdgeColor):
        self.digraph.add_edge(u, v, color=color)

    def has_edge(self, u: int, v: int) -> bool:
        return self.digraph.has_edge(u, v)

    def color(self, u: int, v: int) -> EdgeColor:
        return self.digraph.edges[u, v]['color']

    def edges(self) -> List[Tuple[int, int, EdgeColor]]:
        return sorted((u, v, d['color']) for u, v, d in self.digraph.edges(data=True))

    def edge_set(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset(self.digraph.edges())

    def successors(self, u: int) -> List[int]:
        return sorted(self.digraph.successors(u))

    def predecessors(self, u: int) -> List[int]:
        return sorted(self.digraph.predecessors(u))

    def sources(self) -> List[int]:
        return sorted(v for v, deg in self.digraph.in_degree() if deg == 0)

    def copy_as(self, kind: GraphKind) -> 'EnvyGraph':
        other = EnvyGraph(kind, self.num_agents)
        other.digraph = self.digraph.copy()
        return other

    def is_jaundiced(self, pairs: Sequence[Tuple[int, int]]) -> bool:
        return any(self.color(u, v) != EdgeColor.GREY for u, v in pairs)

class _Views:
    """Per-allocation value tables shared by the graph builders"""

    def __init__(self, inst: Instance, alloc: PartialAllocation):
        n = inst.num_agents
        self.inst = inst
        self.alloc = alloc
        self.sizes = [len(b) for b in alloc.bundles]
        self.cross = [[inst.bundle_value(i, alloc.bundles[j]) for j in range(n)] for i in range(n)]
        self.pool = sorted(alloc.pool)

    def own(self, i: int) -> Fraction:
        return self.cross[i][i]

def build_graph(inst: Instance, alloc: PartialAllocation, kind: GraphKind,
                params: Optional[ThreeValueParams] = None) -> EnvyGraph:
    """Build the requested envy graph from scratch"""
    if kind.needs_params and params is None:
        raise InputError(f"graph kind '{kind.value}' needs the 3-value parameters b and c")
    if alloc.num_agents != inst.num_agents or alloc.num_goods != inst.num_goods:
        raise InputError("allocation does not match the instance")
    views = _Views(inst, alloc)
    return _build(views, kind, params)

def _build(views: _Views, kind: GraphKind, params: Optional[ThreeValueParams]) -> EnvyGraph:
    n = views.inst.num_agents
    if kind == GraphKind.PLAIN:
        graph = EnvyGraph(kind, n)
        for i in range(n):
            for j in range(n):
                if i != j and views.own(i) < views.cross[i][j]:
                    graph.add_edge(i, j, EdgeColor.PLAIN)
        return graph

    if kind in (GraphKind.REDUCED, GraphKind.ENHANCED, GraphKind.REDUCED_PLUS):
        graph = _build(views, GraphKind.PLAIN, params).copy_as(kind)
        sizes = views.sizes
        for i, j, _ in graph.edges():
            if sizes[i] > 1 and sizes[j] == 1 and 3 * views.own(i) >= 2 * views.cross[i][j]:
                graph.digraph.remove_edge(i, j)
        if kind == GraphKind.ENHANCED:
            for s in graph.sources():
                if sizes[s] <= 1:
                    continue
                for i in range(n):
                    if sizes[i] == 1 and 3 * views.cross[i][s] >= 2 * views.own(i):
                        graph.add_edge(i, s, EdgeColor.RED)
        elif kind == GraphKind.REDUCED_PLUS:
            for i in range(n):
                for j in range(n):
                    if (i != j and sizes[i] == 1 and sizes[j] == 1
                            and views.own(i) == ONE and views.cross[i][j] == ONE):
                        graph.add_edge(i, j, EdgeColor.GREY)
        return graph

    if kind == GraphKind.ENHANCED_PLUS:
        graph = _build(views, GraphKind.REDUCED_PLUS, params).copy_as(kind)
        inst, b = views.inst, params.b
        for j in graph.sources():
            for i in range(n):
                if i == j or views.sizes[i] != 1:
                    continue
                if (any(inst.value(i, g) == b for g in views.alloc.bundles[j])
                        and any(inst.value(i, g) == b for g in views.pool)):
                    graph.add_edge(i, j, EdgeColor.RED)
        return graph

    # doubly enhanced
    graph = _build(views, GraphKind.ENHANCED_PLUS, params).copy_as(kind)
    inst, b = views.inst, params.b
    for j in graph.sources():
        for i in range(n):
            if not (ONE + b <= views.own(i) < 2):
                continue
            if not three_b_rest_c(inst, i, views.alloc.bundles[j], params):
                continue
            if any(inst.value(i, g) == b for g in views.pool):
                graph.add_edge(i, j, EdgeColor.DE)
    return graph

def three_b_rest_c(inst: Instance, agent: int, goods: FrozenSet[int], params: ThreeValueParams) -> bool:
    """From the agent's view: exactly three goods worth b, all others worth c"""
    b_count = 0
    for g in goods:
        v = inst.value(agent, g)
        if v == params.b:
            b_count += 1
        elif v != params.c:
            return False
    return b_count == 3

def sources(graph: EnvyGraph) -> List[int]:
    """Agents with in-degree 0, ascending (a self-loop counts as an in-edge)"""
    return graph.sources()

def find_cycle(graph: EnvyGraph, require_jaundiced: bool = False) -> Optional[CyclePath]:
    """Deterministic cycle search.

    Without the jaundiced requirement this is a DFS from the lex-least vertex that
    explores successors in ascending order and returns the first back edge's cycle.
    With it, non-grey edges (u, v) are scanned in lex order and the first one that
    closes through a BFS-shortest path v ~> u yields the cycle.
    """
    if require_jaundiced:
        return _find_jaundiced_cycle(graph)

    state: Dict[int, int] = {}
    stack_path: List[int] = []

    def visit(u: int) -> Optional[List[int]]:
        state[u] = 1
        stack_path.append(u)
        for v in graph.successors(u):
            if state.get(v) == 1:
                return stack_path[stack_path.index(v):]
            if v not in state:
                found = visit(v)
                if found:
                    return found
        stack_path.pop()
        state[u] = 2
        return None

    for start in range(graph.num_agents):
        if start in state:
            continue
        cycle = visit(start)
        if cycle:
            vertices = tuple(cycle)
            path = CyclePath(vertices, True, False)
            return CyclePath(vertices, True, graph.is_jaundiced(path.edges()))
    return None

def _find_jaundiced_cycle(graph: EnvyGraph) -> Optional[CyclePath]:
    for u, v, color in graph.edges():
        if color == EdgeColor.GREY:
            continue
        if u == v:
            return CyclePath((u,), True, True)
        back = _bfs_path(graph, v, u)
        if back is not None:
            return CyclePath(tuple([u] + back[:-1]), True, True)
    return None

def _bfs_path(graph: EnvyGraph, start: int, target: int) -> Optional[List[int]]:
    """Shortest start ~> target path, successors visited in ascending order"""
    parents: Dict[int, Optional[int]] = {start: None}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        if u == target:
            path = [u]
            while parents[path[-1]] is not None:
                path.append(parents[path[-1]])
            return list(reversed(path))
        for v in graph.successors(u):
            if v not in parents:
                parents[v] = u
                queue.append(v)
    return None

def path_from_source_to(graph: EnvyGraph, target: int) -> Optional[CyclePath]:
    """Path from the lex-least source that reaches `target`, BFS-shortest from it"""
    for s in graph.sources():
        path = _bfs_path(graph, s, target)
        if path is not None:
            vertices = tuple(path)
            pairs = list(zip(vertices, vertices[1:]))
            return CyclePath(vertices, False, graph.is_jaundiced(pairs))
    return None

def shortest_path(graph: EnvyGraph, start: int, target: int) -> Optional[CyclePath]:
    """BFS-shortest path between two given agents"""
    path = _bfs_path(graph, start, target)
    if path is None:
        return None
    vertices = tuple(path)
    return CyclePath(vertices, False, graph.is_jaundiced(list(zip(vertices, vertices[1:]))))

def shortest_jaundiced_path_to(graph: EnvyGraph, target: int) -> Optional[CyclePath]:
    """Shortest path ending at `target` that uses at least one non-grey edge.

    Backward BFS over (vertex, seen-non-grey) states with predecessors in
    ascending order. Returns None when no such path exists or when the shortest
    walk repeats a vertex (impossible once jaundiced cycles are gone).
    """
    start = (target, False)
    parents: Dict[Tuple[int, bool], Optional[Tuple[int, bool]]] = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        v, seen = state
        if seen:
            walk = [state]
            while parents[walk[-1]] is not None:
                walk.append(parents[walk[-1]])
            vertices = tuple(s[0] for s in walk)
            if len(set(vertices)) != len(vertices):
                return None
            return CyclePath(vertices, False, True)
        for u in graph.predecessors(v):
            if u == v:
                continue
            nxt = (u, seen or graph.color(u, v) != EdgeColor.GREY)
            if nxt not in parents:
                parents[nxt] = state
                queue.append(nxt)
    return None

def secluded_set(inst: Instance, alloc: PartialAllocation) -> FrozenSet[int]:
    """Largest secluded set: agents not reachable in Gr+ from any agent whose bundle value is not 1"""
    graph = build_graph(inst, alloc, GraphKind.REDUCED_PLUS)
    unsettled = {j for j in inst.agents if inst.bundle_value(j, alloc.bundles[j]) != ONE}
    reached = set(unsettled)
    for j in unsettled:
        reached |= nx.descendants(graph.digraph, j)
    return frozenset(i for i in inst.agents if i not in reached)

def has_cycle(graph: EnvyGraph) -> bool:
    return not nx.is_directed_acyclic_graph(graph.digraph)

def to_dot(graph: EnvyGraph, name: str = "envy") -> str:
    """DOT text: vertices are agent ids, edge labels are colors"""
    lines = [f"digraph {name} {{", f'  label="{graph.kind.value}";']
    for v in range(graph.num_agents):
        lines.append(f"  {v};")
    for u, v, color in graph.edges():
        lines.append(f'  {u} -> {v} [label="{color.value}"];')
    lines.append("}")
    return '\n'.join(lines) + '\n'
