"""
Allocation-mutating subroutines shared by the engines and allocators
"""
from typing import Callable, Dict, FrozenSet, Iterable, Optional

from graphs import CyclePath, EnvyGraph, build_graph, find_cycle, path_from_source_to
from models import (
    GraphKind, InputError, Instance, InternalInvariantError, PartialAllocation,
    PreconditionError, RunTrace, ThreeValueParams, TWO_THIRDS
)
from verification import critical_goods, max_alpha_efx

AllocationObserver = Callable[[PartialAllocation], None]

def _record(trace: Optional[RunTrace], op: str, alloc: PartialAllocation, **detail):
    if trace is not None:
        trace.record(op, len(alloc.pool), **detail)

def _check_edges(graph: EnvyGraph, path: CyclePath):
    for u, v in path.edges():
        if not graph.has_edge(u, v):
            raise InternalInvariantError(f"edge ({u},{v}) is not in the {graph.kind.value} graph")

# ========== CYCLES ==========

def cycle_resolution(alloc: PartialAllocation, graph: EnvyGraph, cycle: CyclePath,
                     trace: Optional[RunTrace] = None) -> PartialAllocation:
    """Every cycle member receives the bundle of its successor"""
    _check_edges(graph, cycle)
    updates = {u: alloc.bundles[v] for u, v in cycle.edges()}
    result = alloc.with_bundles(updates)
    _record(trace, 'cycle_resolution', result, graph=graph.kind.value, cycle=list(cycle.vertices))
    return result

def all_cycles_resolution(inst: Instance, alloc: PartialAllocation, kind: GraphKind = GraphKind.PLAIN,
                          params: Optional[ThreeValueParams] = None,
                          trace: Optional[RunTrace] = None) -> PartialAllocation:
    """Resolve cycles of the given graph kind until it is acyclic"""
    limit = (inst.num_agents ** 2 + 1) * (inst.num_goods + 1)
    for _ in range(limit):
        graph = build_graph(inst, alloc, kind, params)
        cycle = find_cycle(graph)
        if cycle is None:
            return alloc
        alloc = cycle_resolution(alloc, graph, cycle, trace)
    raise InternalInvariantError(f"{kind.value} cycles still present after {limit} resolutions")

# ========== PATHS ==========

def path_resolution(alloc: PartialAllocation, graph: EnvyGraph, path: CyclePath) -> Dict[int, FrozenSet[int]]:
    """Shifted bundles for every path vertex except the last.

    The terminal's new bundle and the source's old bundle are left to the caller.
    """
    if len(path) < 2:
        raise InputError(f"path resolution needs at least two vertices, got {list(path.vertices)}")
    _check_edges(graph, path)
    return {u: alloc.bundles[v] for u, v in path.edges()}

def path_resolution_star(inst: Instance, alloc: PartialAllocation, graph: EnvyGraph, path: CyclePath,
                         trace: Optional[RunTrace] = None) -> PartialAllocation:
    """Shift along a path from a two-good source; the terminal takes its favourite of the
    source's goods plus its favourite pool good, the other source good returns to the pool"""
    source, terminal = path.vertices[0], path.vertices[-1]
    old_source = alloc.bundles[source]
    if len(old_source) != 2:
        raise PreconditionError(f"path source {source} holds {len(old_source)} goods, expected 2")
    pool = alloc.pool
    if not pool:
        raise PreconditionError("path resolution needs a nonempty pool")

    kept = inst.favourite(terminal, old_source)
    taken = inst.favourite(terminal, pool)
    updates = path_resolution(alloc, graph, path) if len(path) > 1 else {}
    updates[terminal] = frozenset([kept, taken])
    result = alloc.with_bundles(updates)
    _record(trace, 'path_resolution_star', result, path=list(path.vertices),
            kept=kept, taken=taken, returned=sorted(old_source - {kept}))
    return result

def singleton_pool(inst: Instance, alloc: PartialAllocation,
                   trace: Optional[RunTrace] = None) -> PartialAllocation:
    """Allocate the single pool good to a singleton agent that wants it over 2/3 of its bundle"""
    pool = sorted(alloc.pool)
    if len(pool) != 1:
        raise InternalInvariantError(f"singleton pool called with {len(pool)} pool goods")
    g = pool[0]
    wanting = [i for i in inst.agents if len(alloc.bundles[i]) == 1
               and inst.value(i, g) > TWO_THIRDS * inst.bundle_value(i, alloc.bundles[i])]
    if not wanting:
        raise InternalInvariantError(f"no singleton agent wants pool good {g}")
    agent = wanting[0]
    graph = build_graph(inst, alloc, GraphKind.REDUCED)
    sources = graph.sources()
    if agent in sources:
        raise InternalInvariantError(f"agent {agent} is a reduced-graph source")
    if any(len(alloc.bundles[s]) != 2 for s in sources):
        raise InternalInvariantError("a reduced-graph source does not hold exactly two goods")
    path = path_from_source_to(graph, agent)
    if path is None:
        raise InternalInvariantError(f"no reduced-graph source reaches agent {agent}")
    return path_resolution_star(inst, alloc, graph, path, trace)

# ========== ROUND ROBIN ==========

def single_round_robin(inst: Instance, alloc: PartialAllocation, agents: Iterable[int],
                       trace: Optional[RunTrace] = None) -> PartialAllocation:
    """Agents in ascending order each take their favourite pool good once"""
    pool = set(alloc.pool)
    updates = {}
    picks = []
    for i in sorted(agents):
        if not pool:
            break
        g = inst.favourite(i, pool)
        pool.discard(g)
        updates[i] = alloc.bundles[i] | {g}
        picks.append([i, g])
    result = alloc.with_bundles(updates)
    if picks:
        _record(trace, 'single_round_robin', result, picks=picks)
    return result

# ========== COMPLETION ==========

def envy_cycle_elimination(inst: Instance, alloc: PartialAllocation, trace: Optional[RunTrace] = None,
                           observer: Optional[AllocationObserver] = None) -> PartialAllocation:
    """Complete the allocation: each pool good in ascending order goes to the lex-least
    source of the acyclic plain envy graph"""
    for g in sorted(alloc.pool):
        alloc = all_cycles_resolution(inst, alloc, GraphKind.PLAIN, trace=trace)
        if observer is not None:
            observer(alloc)
        sources = build_graph(inst, alloc, GraphKind.PLAIN).sources()
        if not sources:
            raise InternalInvariantError("acyclic plain envy graph without a source")
        s = sources[0]
        alloc = alloc.with_bundles({s: alloc.bundles[s] | {g}})
        _record(trace, 'envy_cycle_elimination', alloc, agent=s, good=g)
        if observer is not None:
            observer(alloc)
    return alloc

def _check_uncontested(inst: Instance, alloc: PartialAllocation):
    report = max_alpha_efx(inst, alloc)
    if not report.meets(TWO_THIRDS):
        raise PreconditionError(f"allocation is not 2/3-EFX (witness {report.witness})")
    critical = critical_goods(inst, alloc)
    holders: Dict[int, int] = {}
    for i, goods in critical.items():
        if len(goods) > 1:
            raise PreconditionError(f"agent {i} has {len(goods)} critical goods {sorted(goods)}")
        for g in goods:
            if g in holders:
                raise PreconditionError(f"good {g} is critical for agents {holders[g]} and {i}")
            holders[g] = i

def uncontested_critical(inst: Instance, alloc: PartialAllocation, kind: GraphKind = GraphKind.PLAIN,
                         params: Optional[ThreeValueParams] = None,
                         trace: Optional[RunTrace] = None) -> PartialAllocation:
    """Allocate every critical good when each is critical for a single agent only"""
    _check_uncontested(inst, alloc)
    alloc = all_cycles_resolution(inst, alloc, kind, params, trace)
    for _ in range(inst.num_goods + 1):
        critical = critical_goods(inst, alloc)
        holders = [i for i in inst.agents if critical[i]]
        if not holders:
            return alloc
        i = holders[0]
        g = min(critical[i])
        graph = build_graph(inst, alloc, kind, params)
        path = path_from_source_to(graph, i)
        if path is None:
            raise InternalInvariantError(f"no {kind.value} source reaches agent {i}")
        s = path.vertices[0]
        old_source = alloc.bundles[s]
        own = inst.bundle_value(i, alloc.bundles[i])
        if inst.bundle_value(i, old_source | {g}) > own:
            updates = path_resolution(alloc, graph, path) if s != i else {}
            updates[i] = old_source | {g}
            alloc = alloc.with_bundles(updates)
            _record(trace, 'uncontested_critical', alloc, agent=i, good=g, path=list(path.vertices), to='path')
        else:
            alloc = alloc.with_bundles({s: old_source | {g}})
            _record(trace, 'uncontested_critical', alloc, agent=i, good=g, source=s, to='source')
        alloc = all_cycles_resolution(inst, alloc, kind, params, trace)
    raise InternalInvariantError(f"critical goods remain after {inst.num_goods + 1} iterations")
