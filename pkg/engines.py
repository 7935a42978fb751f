"""
Step-priority allocation engines: each loop iteration fires the first step whose condition holds
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Set, Tuple

from graphs import (
    build_graph, find_cycle, has_cycle, path_from_source_to, secluded_set,
    shortest_jaundiced_path_to, shortest_path, three_b_rest_c
)
from logger import RunLogger, get_run_logger
from models import (
    EngineLimits, GraphKind, HALF, Instance, InternalInvariantError, ONE, PartialAllocation,
    PreconditionError, RunTrace, ThreeValueParams, TWO_THIRDS, pool_of
)
from subroutines import (
    all_cycles_resolution, cycle_resolution, path_resolution, path_resolution_star,
    single_round_robin, singleton_pool
)
from utils import lex_pairs
from verification import (
    PotentialValue, check_properties, check_properties_f, critical_goods,
    hierarchy_levels, is_seed_allocation, potential
)

@dataclass
class StepResult:
    """The allocation a fired step produces, with a JSON-able summary"""
    allocation: PartialAllocation
    detail: Dict[str, Any] = field(default_factory=dict)

StepFn = Callable[[PartialAllocation, Optional[RunTrace]], Optional[StepResult]]

class AllocationEngine(ABC):
    """Abstract step-priority engine"""

    name = 'engine'

    def __init__(self, inst: Instance, debug: bool = False, logger: Optional[RunLogger] = None):
        self.inst = inst
        self.debug = debug
        self.logger = logger or get_run_logger('engines')

    @abstractmethod
    def steps(self) -> List[Tuple[str, StepFn]]:
        pass

    @abstractmethod
    def limits(self) -> EngineLimits:
        pass

    def check_seed(self, seed: PartialAllocation):
        pass

    def check_final(self, alloc: PartialAllocation):
        pass

    def start(self, seed: PartialAllocation):
        """Reset per-run debug state"""
        pass

    def check_iteration(self, before: PartialAllocation, after: PartialAllocation, iteration: int):
        report = check_properties(self.inst, after)
        if not report.passes('a', 'b'):
            raise InternalInvariantError(
                f"{self.name}: properties {report.failed()} broken at iteration {iteration}: {after.describe()}")

    def own(self, alloc: PartialAllocation, agent: int) -> Fraction:
        return self.inst.bundle_value(agent, alloc.bundles[agent])

    # shared swap steps

    def step_swap_single(self, alloc, trace):
        pool = sorted(alloc.pool)
        for i in self.inst.agents:
            if len(alloc.bundles[i]) != 1:
                continue
            own = self.own(alloc, i)
            for g in pool:
                if self.inst.value(i, g) > own:
                    return StepResult(alloc.with_bundles({i: {g}}),
                                      {'agent': i, 'good': g, 'returned': sorted(alloc.bundles[i])})
        return None

    def step_downsize_pair(self, alloc, trace):
        pool = sorted(alloc.pool)
        for i in self.inst.agents:
            if len(alloc.bundles[i]) != 2:
                continue
            own = self.own(alloc, i)
            for g in pool:
                if 2 * self.inst.value(i, g) > 3 * own:
                    return StepResult(alloc.with_bundles({i: {g}}),
                                      {'agent': i, 'good': g, 'returned': sorted(alloc.bundles[i])})
        return None

    def run(self, seed: PartialAllocation, trace: Optional[RunTrace] = None) -> Tuple[PartialAllocation, RunTrace]:
        """Run the loop from `seed` until the break step fires or the pool is empty"""
        pool_of(self.inst, seed)
        self.check_seed(seed)
        trace = trace if trace is not None else RunTrace()
        trace.begin_stage(self.name)
        steps = self.steps()
        limit = self.limits().max_iterations
        self.start(seed)

        alloc = seed
        for iteration in range(1, limit + 1):
            trace.iteration = iteration
            fired = None
            if alloc.pool:
                for index, (step_id, step) in enumerate(steps):
                    result = step(alloc, trace)
                    if result is not None:
                        fired = (index, step_id, result)
                        break

            if fired is None:
                trace.record_step(iteration, 'break', len(alloc.pool))
                self.logger.debug(f"{self.name} stopped", {'iteration': iteration, 'pool': len(alloc.pool)})
                self.check_final(alloc)
                return alloc, trace

            index, step_id, result = fired
            if self.debug:
                self._check_priority(alloc, steps[:index], step_id)
                self.check_iteration(alloc, result.allocation, iteration)
            trace.record_step(iteration, step_id, len(result.allocation.pool), **result.detail)
            self.logger.debug(f"{self.name} step {step_id}",
                              {'iteration': iteration, 'pool': len(result.allocation.pool)})
            alloc = result.allocation

        raise InternalInvariantError(f"{self.name}: iteration limit {limit} exceeded")

    def _check_priority(self, alloc: PartialAllocation, earlier: List[Tuple[str, StepFn]], step_id: str):
        for earlier_id, step in earlier:
            if step(alloc, None) is not None:
                raise InternalInvariantError(
                    f"{self.name}: step {step_id} fired while step {earlier_id} was applicable")

# ========== 3PA FAMILY ==========

class ThreePA(AllocationEngine):
    """Property-preserving partial allocation"""

    name = '3PA'
    track_history = True

    def __init__(self, inst: Instance, debug: bool = False, logger: Optional[RunLogger] = None):
        super().__init__(inst, debug, logger)
        self._history: List[Set[FrozenSet[int]]] = []

    def steps(self) -> List[Tuple[str, StepFn]]:
        return [
            ('1', self.step_swap_single),
            ('2', self.step_downsize_pair),
            ('3', self.step_single_to_pair),
            ('4', self.step_swap_into_pair),
            ('5', self.step_reduced_cycles),
            ('6', self.step_feed_source),
            ('7', self.step_singleton_pool),
            ('8', self.step_enhanced_cycles),
        ]

    def limits(self) -> EngineLimits:
        return EngineLimits.for_property_preserving(self.inst.num_agents, self.inst.num_goods)

    def check_seed(self, seed: PartialAllocation):
        if not is_seed_allocation(self.inst, seed):
            raise PreconditionError(
                f"{self.name} needs a seed allocation (size <= 2, no empty bundle, properties a and b): {seed.describe()}")

    def start(self, seed: PartialAllocation):
        self._history = [{bundle} for bundle in seed.bundles]

    def check_iteration(self, before: PartialAllocation, after: PartialAllocation, iteration: int):
        super().check_iteration(before, after, iteration)
        if not self.track_history:
            return
        for i, bundle in enumerate(after.bundles):
            if bundle != before.bundles[i] and bundle in self._history[i]:
                raise InternalInvariantError(
                    f"{self.name}: agent {i} got back bundle {sorted(bundle)} at iteration {iteration}")
            self._history[i].add(bundle)

    def check_final(self, alloc: PartialAllocation):
        report = check_properties(self.inst, alloc)
        if not report.passed:
            raise InternalInvariantError(f"{self.name} output breaks properties {report.failed()}")
        if not alloc.has_size_at_most(2):
            raise InternalInvariantError(f"{self.name} output has a bundle of size {alloc.size}")
        if alloc.pool:
            graph = build_graph(self.inst, alloc, GraphKind.ENHANCED)
            sources = graph.sources()
            if not sources or any(len(alloc.bundles[s]) != 2 for s in sources):
                raise InternalInvariantError(
                    f"{self.name} output: enhanced sources {sources} do not all hold two goods")

    # ----- steps -----

    def step_single_to_pair(self, alloc, trace):
        for i in self.inst.agents:
            if len(alloc.bundles[i]) != 1:
                continue
            own = self.own(alloc, i)
            for g1, g2 in lex_pairs(alloc.pool):
                if 3 * self.inst.bundle_value(i, (g1, g2)) > 2 * own:
                    return StepResult(alloc.with_bundles({i: {g1, g2}}),
                                      {'agent': i, 'goods': [g1, g2], 'returned': sorted(alloc.bundles[i])})
        return None

    def step_swap_into_pair(self, alloc, trace):
        pool = sorted(alloc.pool)
        for i in self.inst.agents:
            bundle = alloc.bundles[i]
            if len(bundle) != 2:
                continue
            for g in pool:
                for held in sorted(bundle):
                    if self.inst.value(i, g) > self.inst.value(i, held):
                        return StepResult(alloc.with_bundles({i: (bundle - {held}) | {g}}),
                                          {'agent': i, 'good': g, 'returned': [held]})
        return None

    def step_reduced_cycles(self, alloc, trace):
        if not has_cycle(build_graph(self.inst, alloc, GraphKind.REDUCED)):
            return None
        return StepResult(all_cycles_resolution(self.inst, alloc, GraphKind.REDUCED, trace=trace),
                          {'graph': GraphKind.REDUCED.value})

    def step_feed_source(self, alloc, trace):
        for s in build_graph(self.inst, alloc, GraphKind.REDUCED).sources():
            if len(alloc.bundles[s]) == 1:
                g = self.inst.favourite(s, alloc.pool)
                return StepResult(alloc.with_bundles({s: alloc.bundles[s] | {g}}), {'agent': s, 'good': g})
        return None

    def step_singleton_pool(self, alloc, trace):
        wanted = {g for g in alloc.pool for i in self.inst.agents
                  if len(alloc.bundles[i]) == 1 and 3 * self.inst.value(i, g) > 2 * self.own(alloc, i)}
        if len(wanted) != 1:
            return None
        return StepResult(singleton_pool(self.inst, alloc, trace), {'good': min(wanted)})

    def step_enhanced_cycles(self, alloc, trace):
        if not has_cycle(build_graph(self.inst, alloc, GraphKind.ENHANCED)):
            return None
        return StepResult(all_cycles_resolution(self.inst, alloc, GraphKind.ENHANCED, trace=trace),
                          {'graph': GraphKind.ENHANCED.value})

class ThreePAPlus(ThreePA):
    """Property-preserving allocation with a two-good path transfer before the break"""

    name = '3PA+'

    def steps(self) -> List[Tuple[str, StepFn]]:
        return super().steps() + [('8.5', self.step_path_transfer)]

    def transfer_wanted(self, own: Fraction, size: int, pair_value: Fraction) -> bool:
        return own < pair_value

    def step_path_transfer(self, alloc, trace):
        graph = build_graph(self.inst, alloc, GraphKind.REDUCED)
        sources = [s for s in graph.sources() if len(alloc.bundles[s]) == 2]
        pool = alloc.pool
        for i in self.inst.agents:
            own = self.own(alloc, i)
            best_pool = self.inst.value(i, self.inst.favourite(i, pool))
            for s in sources:
                if s == i:
                    continue
                best_held = self.inst.value(i, self.inst.favourite(i, alloc.bundles[s]))
                if not self.transfer_wanted(own, len(alloc.bundles[i]), best_pool + best_held):
                    continue
                path = shortest_path(graph, s, i)
                if path is None:
                    continue
                return StepResult(path_resolution_star(self.inst, alloc, graph, path, trace),
                                  {'agent': i, 'source': s, 'path': list(path.vertices)})
        return None

class ThreePAStar(ThreePAPlus):
    """Path transfer relaxed to 3/2 for singleton holders"""

    name = '3PA*'
    track_history = False

    def steps(self) -> List[Tuple[str, StepFn]]:
        return ThreePA.steps(self) + [('8.5*', self.step_path_transfer)]

    def transfer_wanted(self, own: Fraction, size: int, pair_value: Fraction) -> bool:
        return own <= Fraction(4 - size, 2) * pair_value

# ========== 3PA++ ==========

class ThreePAPlusPlus(AllocationEngine):
    """Property-preserving allocation for 3-value instances with b > 1/2 and b + c < 2/3"""

    name = '3PA++'

    def __init__(self, inst: Instance, params: ThreeValueParams, k_max: int,
                 debug: bool = False, logger: Optional[RunLogger] = None):
        super().__init__(inst, debug, logger)
        self.params = params
        self.k_max = k_max
        self._last_potential: Optional[PotentialValue] = None
        self._last_increase = 0

    def steps(self) -> List[Tuple[str, StepFn]]:
        return [
            ('1', self.step_reduced_cycle),
            ('2', self.step_swap_single),
            ('3', self.step_downsize_pair),
            ('4', self.step_equal_value_path),
            ('5', self.step_secluded),
            ('6', self.step_single_to_pair),
            ('7', self.step_keep_best),
            ('8', self.step_three_b),
            ('9', self.step_enhanced_cycle),
            ('10', self.step_doubly_enhanced_cycle),
            ('11', self.step_add_critical),
            ('12', self.step_critical_via_path),
        ]

    def limits(self) -> EngineLimits:
        return EngineLimits.for_three_value(self.inst.num_agents, self.inst.num_goods)

    def check_seed(self, seed: PartialAllocation):
        b, c = self.params.b, self.params.c
        if not (b > HALF and b + c < TWO_THIRDS and c > 0):
            raise PreconditionError(
                f"{self.name} needs b > 1/2, b + c < 2/3 and c > 0 (b={b}, c={c})")
        if self.inst.num_goods <= self.inst.num_agents:
            raise PreconditionError(f"{self.name} needs m > n")
        if any(len(bundle) != 1 for bundle in seed.bundles):
            raise PreconditionError(f"{self.name} needs a seed with exactly one good per agent: {seed.describe()}")

    def start(self, seed: PartialAllocation):
        self._last_potential = potential(self.inst, self.params, seed)
        self._last_increase = 0

    def check_iteration(self, before: PartialAllocation, after: PartialAllocation, iteration: int):
        super().check_iteration(before, after, iteration)
        if after.size > self.k_max:
            raise InternalInvariantError(f"{self.name}: bundle of size {after.size} > k_max={self.k_max}")
        old_levels = hierarchy_levels(self.inst, before, self.params.b)
        new_levels = hierarchy_levels(self.inst, after, self.params.b)
        for i, (old, new) in enumerate(zip(old_levels, new_levels)):
            if new > old:
                raise InternalInvariantError(
                    f"{self.name}: agent {i} fell from {old.name} to {new.name} at iteration {iteration}")
        current = potential(self.inst, self.params, after)
        if current < self._last_potential:
            raise InternalInvariantError(f"{self.name}: potential decreased at iteration {iteration}")
        if current > self._last_potential:
            self._last_increase = iteration
        window = 2 * self.inst.num_goods * self.inst.num_agents ** 2
        if iteration - self._last_increase > window:
            raise InternalInvariantError(
                f"{self.name}: potential flat for more than {window} iterations at iteration {iteration}")
        self._last_potential = current

    def check_final(self, alloc: PartialAllocation):
        report = check_properties(self.inst, alloc)
        if not report.passes('a', 'b'):
            raise InternalInvariantError(f"{self.name} output breaks properties {report.failed()}")
        if alloc.pool:
            f_report = check_properties_f(self.inst, self.params, alloc)
            if not f_report.passed:
                raise InternalInvariantError(f"{self.name} output breaks properties {f_report.failed()}")
        critical = {i: sorted(goods) for i, goods in critical_goods(self.inst, alloc).items() if goods}
        if critical:
            raise InternalInvariantError(f"{self.name} output leaves critical goods {critical}")

    def _goods_valued(self, agent: int, goods, value: Fraction) -> List[int]:
        return sorted(g for g in goods if self.inst.value(agent, g) == value)

    # ----- steps -----

    def step_reduced_cycle(self, alloc, trace):
        graph = build_graph(self.inst, alloc, GraphKind.REDUCED_PLUS)
        cycle = find_cycle(graph, require_jaundiced=True)
        if cycle is None:
            return None
        return StepResult(cycle_resolution(alloc, graph, cycle, trace), {'cycle': list(cycle.vertices)})

    def step_equal_value_path(self, alloc, trace):
        graph = build_graph(self.inst, alloc, GraphKind.REDUCED_PLUS)
        pool = sorted(alloc.pool)
        for t in self.inst.agents:
            own = self.own(alloc, t)
            equal = [g for g in pool if self.inst.value(t, g) == own]
            if not equal:
                continue
            path = shortest_jaundiced_path_to(graph, t)
            if path is None:
                continue
            updates = path_resolution(alloc, graph, path)
            updates[t] = frozenset([equal[0]])
            result = alloc.with_bundles(updates)
            return StepResult(result, {'agent': t, 'good': equal[0], 'path': list(path.vertices),
                                       'returned': sorted(alloc.bundles[path.vertices[0]])})
        return None

    def step_secluded(self, alloc, trace):
        secluded = secluded_set(self.inst, alloc)
        if not secluded:
            return None
        return StepResult(single_round_robin(self.inst, alloc, secluded, trace), {'agents': sorted(secluded)})

    def step_single_to_pair(self, alloc, trace):
        for i in self.inst.agents:
            if len(alloc.bundles[i]) != 1:
                continue
            own = self.own(alloc, i)
            for g1, g2 in lex_pairs(alloc.pool):
                if self.inst.bundle_value(i, (g1, g2)) > own:
                    return StepResult(alloc.with_bundles({i: {g1, g2}}),
                                      {'agent': i, 'goods': [g1, g2], 'returned': sorted(alloc.bundles[i])})
        pool = sorted(alloc.pool)
        if len(pool) == 1:
            g = pool[0]
            for i in build_graph(self.inst, alloc, GraphKind.REDUCED_PLUS).sources():
                if len(alloc.bundles[i]) == 1 and self.own(alloc, i) == self.inst.value(i, g):
                    return StepResult(alloc.with_bundles({i: alloc.bundles[i] | {g}}),
                                      {'agent': i, 'good': g, 'branch': 'last_good'})
        return None

    def step_keep_best(self, alloc, trace):
        pool = sorted(alloc.pool)
        for i in self.inst.agents:
            bundle = alloc.bundles[i]
            if len(bundle) < 2:
                continue
            best = self.inst.favourite(i, bundle)
            rest = self.own(alloc, i) - self.inst.value(i, best)
            for g in pool:
                if self.inst.value(i, g) > rest:
                    return StepResult(alloc.with_bundles({i: {best, g}}),
                                      {'agent': i, 'kept': best, 'good': g, 'returned': sorted(bundle - {best})})
        return None

    def step_three_b(self, alloc, trace):
        for i in self.inst.agents:
            bundle = alloc.bundles[i]
            if not three_b_rest_c(self.inst, i, bundle, self.params):
                continue
            ones = self._goods_valued(i, alloc.pool, ONE)
            if not ones:
                continue
            kept = self._goods_valued(i, bundle, self.params.b)[0]
            return StepResult(alloc.with_bundles({i: {kept, ones[0]}}),
                              {'agent': i, 'kept': kept, 'good': ones[0], 'returned': sorted(bundle - {kept})})
        return None

    def step_enhanced_cycle(self, alloc, trace):
        graph = build_graph(self.inst, alloc, GraphKind.ENHANCED_PLUS, self.params)
        cycle = find_cycle(graph, require_jaundiced=True)
        if cycle is None:
            return None
        reduced_sources = set(build_graph(self.inst, alloc, GraphKind.REDUCED_PLUS).sources())
        targets = sorted({u for u, v in cycle.edges() if v in reduced_sources})
        if not targets:
            raise InternalInvariantError(f"jaundiced enhanced+ cycle {list(cycle.vertices)} enters no reduced+ source")
        chosen = targets[0]
        result = cycle_resolution(alloc, graph, cycle, trace)
        held = self._goods_valued(chosen, result.bundles[chosen], self.params.b)
        pooled = self._goods_valued(chosen, result.pool, self.params.b)
        if not held or not pooled:
            raise InternalInvariantError(f"agent {chosen} lacks a b-valued good in its new bundle or in the pool")
        result = result.with_bundles({chosen: {held[0], pooled[0]}})
        result = single_round_robin(self.inst, result, targets[1:], trace)
        return StepResult(result, {'cycle': list(cycle.vertices), 'agent': chosen, 'targets': targets})

    def step_doubly_enhanced_cycle(self, alloc, trace):
        if self.k_max < 4:
            return None
        graph = build_graph(self.inst, alloc, GraphKind.DOUBLY_ENHANCED, self.params)
        cycle = find_cycle(graph, require_jaundiced=True)
        if cycle is None:
            return None
        enhanced = build_graph(self.inst, alloc, GraphKind.ENHANCED_PLUS, self.params)
        enhanced_sources = set(enhanced.sources())
        reduced_sources = set(build_graph(self.inst, alloc, GraphKind.REDUCED_PLUS).sources())
        chosen_from = sorted(u for u, v in cycle.edges() if v in enhanced_sources)
        if not chosen_from:
            raise InternalInvariantError(f"doubly enhanced cycle {list(cycle.vertices)} enters no enhanced+ source")
        chosen = chosen_from[0]
        targets = {u for u, v in cycle.edges() if v in reduced_sources and enhanced.has_edge(u, v)}

        result = cycle_resolution(alloc, graph, cycle, trace)
        held = self._goods_valued(chosen, result.bundles[chosen], self.params.b)
        pooled = self._goods_valued(chosen, result.pool, self.params.b)
        if len(held) < 3 or not pooled:
            raise InternalInvariantError(f"agent {chosen} lacks three b-valued goods or a pool b-good")
        result = result.with_bundles({chosen: set(held[:3]) | {pooled[0]}})
        singles = [i for i in sorted(targets) if len(result.bundles[i]) == 1]
        result = single_round_robin(self.inst, result, singles, trace)
        return StepResult(result, {'cycle': list(cycle.vertices), 'agent': chosen, 'targets': sorted(targets)})

    def _first_critical(self, alloc: PartialAllocation) -> Optional[Tuple[int, int]]:
        critical = critical_goods(self.inst, alloc)
        for i in self.inst.agents:
            if critical[i]:
                return i, min(critical[i])
        return None

    def step_add_critical(self, alloc, trace):
        found = self._first_critical(alloc)
        if found is None:
            return None
        i, g = found
        graph = build_graph(self.inst, alloc, GraphKind.DOUBLY_ENHANCED, self.params)
        for s in graph.sources():
            if len(alloc.bundles[s]) < self.k_max:
                return StepResult(alloc.with_bundles({s: alloc.bundles[s] | {g}}),
                                  {'agent': i, 'good': g, 'source': s})
        return None

    def step_critical_via_path(self, alloc, trace):
        found = self._first_critical(alloc)
        if found is None:
            return None
        i, g = found
        graph = build_graph(self.inst, alloc, GraphKind.DOUBLY_ENHANCED, self.params)
        sources = graph.sources()
        if any(len(alloc.bundles[s]) != self.k_max for s in sources):
            return None
        path = path_from_source_to(graph, i)
        if path is None:
            raise InternalInvariantError(f"no doubly enhanced source reaches agent {i}")
        s = path.vertices[0]
        old_source = alloc.bundles[s]
        returned = min(old_source)
        updates = path_resolution(alloc, graph, path) if len(path) > 1 else {}
        updates[i] = (old_source | {g}) - {returned}
        return StepResult(alloc.with_bundles(updates),
                          {'agent': i, 'good': g, 'path': list(path.vertices), 'returned': [returned]})
