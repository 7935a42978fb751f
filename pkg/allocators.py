"""
End-to-end 2/3-EFX pipelines: seed, engine, critical-good handling, completion
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from engines import AllocationEngine, ThreePA, ThreePAPlus, ThreePAPlusPlus, ThreePAStar
from graphs import build_graph
from logger import RunLogger, get_run_logger
from models import (
    AnyInstance, GraphKind, HALF, InputError, Instance, InternalInvariantError, MultigraphInstance,
    PartialAllocation, PreconditionError, RunTrace, ThreeValueCase, ThreeValueInstance, TWO_THIRDS,
    seed_allocation, trivial_allocation
)
from subroutines import envy_cycle_elimination, uncontested_critical
from utils import format_value
from verification import Certificate, certify, contested_goods, critical_goods, max_alpha_efx

MAX_FEW_AGENTS = 7

@dataclass
class AllocationResult:
    """Allocator output with its trace and verifier certificate"""
    allocation: PartialAllocation
    trace: RunTrace
    certificate: Certificate
    algorithm: str
    case: Optional[ThreeValueCase] = None
    iterations: int = 0

    @property
    def passed(self) -> bool:
        return self.certificate.passed

    def to_dict(self) -> Dict:
        return {
            'algorithm': self.algorithm,
            'case': self.case.value if self.case else None,
            'iterations': self.iterations,
            'allocation': self.allocation.to_dict(),
            'certificate': self.certificate.to_dict()
        }

# ========== 3-VALUE PARAMETERS ==========

def classify_case(b: Fraction, c: Fraction) -> ThreeValueCase:
    if b == c:
        raise InputError("degenerate instance with b = c: this is a two-value instance")
    if not (1 > b > c >= 0):
        raise InputError(f"3-value parameters must satisfy 1 > b > c >= 0 (b={format_value(b)}, c={format_value(c)})")
    if b <= HALF:
        return ThreeValueCase.CASE1
    if b + c >= TWO_THIRDS:
        return ThreeValueCase.CASE2
    return ThreeValueCase.CASE3

def k_max(b: Fraction, c: Fraction) -> int:
    """Unique k with b + (k-1)c >= 2/3 > b + (k-2)c"""
    if not (b > HALF and b + c < TWO_THIRDS and c > 0):
        raise InputError(f"k_max needs b > 1/2, b + c < 2/3 and c > 0 (b={format_value(b)}, c={format_value(c)})")
    return 1 + math.ceil((TWO_THIRDS - b) / c)

def perturbed_c(b: Fraction, num_goods: int) -> Fraction:
    """Smallest nonzero |k + l*b| over k, l in [-3m, 2m], divided by 3m"""
    if num_goods < 1:
        raise InputError("perturbed c needs at least one good")
    span = range(-3 * num_goods, 2 * num_goods + 1)
    smallest = min(abs(k + l * b) for k in span for l in span if k + l * b != 0)
    return smallest / (3 * num_goods)

def perturb_zero_c(inst: ThreeValueInstance) -> ThreeValueInstance:
    """Replace c = 0 by a small positive c; other instances are returned unchanged"""
    if inst.c != 0:
        return inst
    return inst.with_c(perturbed_c(inst.b, inst.num_goods))

# ========== PIPELINE HELPERS ==========

def _trivial_result(inst: Instance, algorithm: str, trace: RunTrace,
                   case: Optional[ThreeValueCase] = None) -> AllocationResult:
    trace.begin_stage('trivial')
    alloc = trivial_allocation(inst)
    trace.record('trivial_allocation', len(alloc.pool), bundles=[sorted(b) for b in alloc.bundles])
    return AllocationResult(alloc, trace, certify(inst, alloc), algorithm, case, 0)

def _run_engine(engine: AllocationEngine, seed: PartialAllocation, trace: RunTrace,
                logger: RunLogger) -> PartialAllocation:
    alloc, _ = engine.run(seed, trace)
    logger.info(f"{engine.name} finished", {
        'n': engine.inst.num_agents, 'm': engine.inst.num_goods,
        'iterations': trace.iterations(engine.name), 'pool': len(alloc.pool)
    })
    return alloc

def _ensure_extendable(inst: Instance, alloc: PartialAllocation, stage: str):
    """No critical goods and 2/3-EFX, so envy-cycle elimination keeps 2/3-EFX"""
    critical = {i: sorted(g) for i, g in critical_goods(inst, alloc).items() if g}
    if critical:
        raise InternalInvariantError(f"critical goods {critical} remain after {stage}")
    report = max_alpha_efx(inst, alloc)
    if not report.meets(TWO_THIRDS):
        raise InternalInvariantError(f"allocation is not 2/3-EFX after {stage} (witness {report.witness})")

def _complete(inst: Instance, alloc: PartialAllocation, trace: RunTrace, logger: RunLogger) -> PartialAllocation:
    trace.begin_stage('completion')
    final = envy_cycle_elimination(inst, alloc, trace)
    if not final.is_complete:
        raise InternalInvariantError("envy-cycle elimination left goods in the pool")
    report = max_alpha_efx(inst, final)
    if not report.meets(TWO_THIRDS):
        raise InternalInvariantError(f"final allocation is not 2/3-EFX (witness {report.witness})")
    logger.info("allocation completed", {'alpha': format_value(report.alpha)})
    return final

def _handle_uncontested(inst: Instance, alloc: PartialAllocation, trace: RunTrace) -> PartialAllocation:
    trace.begin_stage('uncontested')
    try:
        return uncontested_critical(inst, alloc, GraphKind.PLAIN, trace=trace)
    except PreconditionError as e:
        raise InternalInvariantError(f"critical-good handling precondition failed: {e}") from e

def _enhanced_sources(inst: Instance, alloc: PartialAllocation) -> List[int]:
    sources = build_graph(inst, alloc, GraphKind.ENHANCED).sources()
    if not sources:
        raise InternalInvariantError("enhanced envy graph has no source")
    return sources

# ========== ALLOCATORS ==========

def multigraph_allocate(mg: MultigraphInstance, debug: bool = False,
                        logger: Optional[RunLogger] = None, trace: Optional[RunTrace] = None) -> AllocationResult:
    """2/3-EFX allocation for multigraph value instances"""
    logger = logger or get_run_logger('allocators')
    trace = trace if trace is not None else RunTrace()
    inst = mg.to_instance()
    if inst.num_goods <= inst.num_agents:
        return _trivial_result(inst, 'multigraph', trace)

    engine = ThreePA(inst, debug, logger)
    alloc = _run_engine(engine, seed_allocation(inst), trace, logger)

    contested = sorted(contested_goods(inst, alloc))
    critical = critical_goods(inst, alloc)
    for g in contested:
        holders = [i for i in inst.agents if g in critical[i]]
        others = [i for i in inst.agents if i not in holders and inst.value(i, g) != 0]
        if len(holders) != 2 or others:
            raise InternalInvariantError(
                f"contested good {g} is critical for {holders} and valued by non-endpoints {others}")

    trace.begin_stage('contested')
    if contested:
        s = _enhanced_sources(inst, alloc)[0]
        alloc = alloc.with_bundles({s: alloc.bundles[s] | set(contested)})
        trace.record('give_contested', len(alloc.pool), source=s, goods=contested)
    alloc = _handle_uncontested(inst, alloc, trace)
    _ensure_extendable(inst, alloc, 'critical-good handling')
    final = _complete(inst, alloc, trace, logger)
    return AllocationResult(final, trace, certify(inst, final), 'multigraph', None, trace.iterations(engine.name))

def few_agents_allocate(source: AnyInstance, debug: bool = False,
                        logger: Optional[RunLogger] = None, trace: Optional[RunTrace] = None) -> AllocationResult:
    """2/3-EFX allocation for additive instances with at most seven agents"""
    logger = logger or get_run_logger('allocators')
    trace = trace if trace is not None else RunTrace()
    inst = source.to_instance()
    if inst.num_agents > MAX_FEW_AGENTS:
        raise PreconditionError(
            f"few-agents allocation supports at most {MAX_FEW_AGENTS} agents, got n={inst.num_agents}")
    if inst.num_goods <= inst.num_agents:
        return _trivial_result(inst, 'few-agents', trace)

    engine = ThreePAPlus(inst, debug, logger)
    alloc = _run_engine(engine, seed_allocation(inst), trace, logger)

    contested = sorted(contested_goods(inst, alloc))
    trace.begin_stage('contested')
    if contested:
        sources = _enhanced_sources(inst, alloc)
        if len(sources) >= 2 and len(contested) > 2:
            raise InternalInvariantError(f"{len(contested)} contested goods with {len(sources)} enhanced sources")
        if len(contested) > 3:
            raise InternalInvariantError(f"{len(contested)} contested goods with a single enhanced source")
        if len(contested) == 2 and len(sources) >= 2:
            s1, s2 = sources[0], sources[1]
            alloc = alloc.with_bundles({s1: alloc.bundles[s1] | {contested[0]},
                                        s2: alloc.bundles[s2] | {contested[1]}})
            trace.record('split_contested', len(alloc.pool), sources=[s1, s2], goods=contested)
        else:
            s = sources[0]
            alloc = alloc.with_bundles({s: alloc.bundles[s] | set(contested)})
            trace.record('give_contested', len(alloc.pool), source=s, goods=contested)
    alloc = _handle_uncontested(inst, alloc, trace)
    _ensure_extendable(inst, alloc, 'critical-good handling')
    final = _complete(inst, alloc, trace, logger)
    return AllocationResult(final, trace, certify(inst, final), 'few-agents', None, trace.iterations(engine.name))

def three_values_allocate(tv: ThreeValueInstance, debug: bool = False,
                          logger: Optional[RunLogger] = None, trace: Optional[RunTrace] = None) -> AllocationResult:
    """2/3-EFX allocation for 3-value instances; certified against the input values"""
    logger = logger or get_run_logger('allocators')
    trace = trace if trace is not None else RunTrace()
    case = classify_case(tv.b, tv.c)
    original = tv.to_instance()
    if original.num_goods <= original.num_agents:
        return _trivial_result(original, 'three-values', trace, case)

    work = tv
    if case == ThreeValueCase.CASE1:
        engine: AllocationEngine = ThreePA(original, debug, logger)
    elif case == ThreeValueCase.CASE2:
        engine = ThreePAStar(original, debug, logger)
    else:
        work = perturb_zero_c(tv)
        if work is not tv:
            logger.info("zero c perturbed", {'c': format_value(work.c)})
        engine = ThreePAPlusPlus(work.to_instance(), work.params, k_max(work.b, work.c), debug, logger)
    inst = work.to_instance()

    alloc = _run_engine(engine, seed_allocation(inst), trace, logger)
    _ensure_extendable(inst, alloc, engine.name)
    final = _complete(inst, alloc, trace, logger)

    if work is not tv:
        report = max_alpha_efx(original, final)
        if not report.meets(TWO_THIRDS):
            raise InternalInvariantError(
                f"allocation is 2/3-EFX for the perturbed values but not for the input (witness {report.witness})")
    certificate = certify(original, final)
    return AllocationResult(final, trace, certificate, 'three-values', case, trace.iterations(engine.name))

ALGORITHMS: Dict[str, Callable[..., AllocationResult]] = {
    'multigraph': multigraph_allocate,
    'few-agents': few_agents_allocate,
    'three-values': three_values_allocate,
}

def allocate(algorithm: str, instance: AnyInstance, debug: bool = False,
             logger: Optional[RunLogger] = None, trace: Optional[RunTrace] = None) -> AllocationResult:
    """Dispatch by algorithm name after checking the instance kind"""
    if algorithm not in ALGORITHMS:
        raise InputError(f"unknown algorithm '{algorithm}', expected one of {sorted(ALGORITHMS)}")
    if algorithm == 'multigraph' and not isinstance(instance, MultigraphInstance):
        raise InputError("the multigraph algorithm needs a multigraph instance")
    if algorithm == 'three-values' and not isinstance(instance, ThreeValueInstance):
        raise InputError("the three-values algorithm needs a 3-value instance")
    return ALGORITHMS[algorithm](instance, debug=debug, logger=logger, trace=trace)
