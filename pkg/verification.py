"""
Engine-free checkers: alpha-EFX, critical goods, allocation properties, hierarchy,
potential and a brute-force oracle. Everything here is recomputed from (instance, allocation).
"""
import itertools
import math
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from models import (
    InputError, Instance, ONE, PartialAllocation, ThreeValueParams, TWO_THIRDS, pool_of
)
from utils import format_value

HIERARCHY_BOUNDARIES = "L1 [2,inf); L2 [1+b,2); L3 (1,1+b); L4 [2/3,1); L5 {1} or [0,2/3)"
ORACLE_STATE_BITS = 24

# ========== ALPHA-EFX ==========

@dataclass(frozen=True)
class AlphaReport:
    """Minimal EFX ratio over ordered agent pairs; alpha None means unbounded"""
    alpha: Optional[Fraction]
    witness: Optional[Tuple[int, int, int]] = None
    binding: FrozenSet[Tuple[int, int]] = frozenset()

    @property
    def unbounded(self) -> bool:
        return self.alpha is None

    def meets(self, threshold: Fraction) -> bool:
        """True iff the allocation is threshold-EFX"""
        return self.alpha is None or self.alpha >= threshold

    def better_than(self, other: Optional['AlphaReport']) -> bool:
        if other is None:
            return True
        if other.alpha is None:
            return False
        return self.alpha is None or self.alpha > other.alpha

    def to_dict(self) -> Dict:
        return {
            'alpha': format_value(self.alpha),
            'witness': list(self.witness) if self.witness else None
        }

def efx_pairs(inst: Instance, alloc: PartialAllocation) -> List[Tuple[int, int, int, Fraction, Fraction]]:
    """Per ordered pair (i, j) with a positive denominator: (i, j, removed good, v_i(X_i), max_g v_i(X_j minus g))"""
    rows = []
    for i in inst.agents:
        own = inst.bundle_value(i, alloc.bundles[i])
        for j in inst.agents:
            bundle = alloc.bundles[j]
            if i == j or not bundle:
                continue
            cheapest = min(bundle, key=lambda g: (inst.value(i, g), g))
            rest = inst.bundle_value(i, bundle) - inst.value(i, cheapest)
            if rest > 0:
                rows.append((i, j, cheapest, own, rest))
    return rows

def max_alpha_efx(inst: Instance, alloc: PartialAllocation) -> AlphaReport:
    """Largest alpha for which the (partial) allocation is alpha-EFX"""
    best_num: Optional[Fraction] = None
    best_den: Optional[Fraction] = None
    witness = None
    binding = set()
    for i, j, g, own, rest in efx_pairs(inst, alloc):
        if best_num is None:
            best_num, best_den, witness, binding = own, rest, (i, j, g), {(i, j)}
            continue
        # compare own/rest with best_num/best_den without dividing
        lhs, rhs = own * best_den, best_num * rest
        if lhs < rhs:
            best_num, best_den, witness, binding = own, rest, (i, j, g), {(i, j)}
        elif lhs == rhs:
            binding.add((i, j))
    if best_num is None:
        return AlphaReport(None)
    return AlphaReport(best_num / best_den, witness, frozenset(binding))

def is_alpha_efx(inst: Instance, alloc: PartialAllocation, alpha: Fraction) -> bool:
    for _, _, _, own, rest in efx_pairs(inst, alloc):
        if own < alpha * rest:
            return False
    return True

# ========== CRITICAL GOODS ==========

def critical_goods(inst: Instance, alloc: PartialAllocation) -> Dict[int, FrozenSet[int]]:
    """Pool goods g with 2 v_i(g) > v_i(X_i), per agent"""
    pool = alloc.pool
    result = {}
    for i in inst.agents:
        own = inst.bundle_value(i, alloc.bundles[i])
        result[i] = frozenset(g for g in pool if 2 * inst.value(i, g) > own)
    return result

def has_critical_goods(inst: Instance, alloc: PartialAllocation) -> bool:
    return any(critical_goods(inst, alloc).values())

def contested_goods(inst: Instance, alloc: PartialAllocation) -> FrozenSet[int]:
    """Pool goods that are critical for at least two agents"""
    counts: Dict[int, int] = {}
    for goods in critical_goods(inst, alloc).values():
        for g in goods:
            counts[g] = counts.get(g, 0) + 1
    return frozenset(g for g, c in counts.items() if c >= 2)

# ========== PROPERTIES ==========

@dataclass
class PropertyReport:
    """Pass/fail verdict per property, with witnesses for failures"""
    verdicts: Dict[str, bool] = field(default_factory=dict)
    violations: Dict[str, List[Dict]] = field(default_factory=dict)

    def record(self, name: str, violations: List[Dict]):
        self.verdicts[name] = not violations
        self.violations[name] = violations

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def failed(self) -> List[str]:
        return [name for name, ok in self.verdicts.items() if not ok]

    def passes(self, *names: str) -> bool:
        return all(self.verdicts.get(name, False) for name in names)

    def merge(self, other: 'PropertyReport') -> 'PropertyReport':
        merged = PropertyReport(dict(self.verdicts), dict(self.violations))
        merged.verdicts.update(other.verdicts)
        merged.violations.update(other.violations)
        return merged

    def to_dict(self) -> Dict:
        return {
            'properties': dict(self.verdicts),
            'violations': {k: v for k, v in self.violations.items() if v}
        }

def _efx_violations(inst: Instance, alloc: PartialAllocation, alpha: Fraction,
                    agents: Iterable[int]) -> List[Dict]:
    out = []
    for i in agents:
        own = inst.bundle_value(i, alloc.bundles[i])
        for j in inst.agents:
            if i == j:
                continue
            bundle = alloc.bundles[j]
            total = inst.bundle_value(i, bundle)
            for g in sorted(bundle):
                if own < alpha * (total - inst.value(i, g)):
                    out.append({'agent': i, 'other': j, 'removed': g})
                    break
    return out

def check_properties(inst: Instance, alloc: PartialAllocation) -> PropertyReport:
    """Properties a-e of property-preserving partial allocations"""
    report = PropertyReport()
    pool = sorted(alloc.pool)
    singles = [i for i in inst.agents if len(alloc.bundles[i]) == 1]
    report.record('a', _efx_violations(inst, alloc, ONE, singles))
    report.record('b', _efx_violations(inst, alloc, TWO_THIRDS, inst.agents))

    c_bad, d_bad, e_bad = [], [], []
    for i in inst.agents:
        own = inst.bundle_value(i, alloc.bundles[i])
        for g in pool:
            if inst.value(i, g) > own:
                c_bad.append({'agent': i, 'good': g})
        if len(alloc.bundles[i]) > 1:
            for g in pool:
                if 2 * inst.value(i, g) > own:
                    d_bad.append({'agent': i, 'good': g})
        critical = [g for g in pool if 2 * inst.value(i, g) > own]
        if len(critical) > 1:
            e_bad.append({'agent': i, 'goods': critical})
        elif critical and 3 * inst.value(i, critical[0]) > 2 * own:
            e_bad.append({'agent': i, 'goods': critical})
    report.record('c', c_bad)
    report.record('d', d_bad)
    report.record('e', e_bad)
    return report

class HierarchyLevel(IntEnum):
    """Agent hierarchy levels; a larger index is lower in the hierarchy"""
    L1 = 1
    L2 = 2
    L3 = 3
    L4 = 4
    L5 = 5

def hierarchy_level(value: Fraction, b: Fraction) -> HierarchyLevel:
    if value >= 2:
        return HierarchyLevel.L1
    if value >= ONE + b:
        return HierarchyLevel.L2
    if value > ONE:
        return HierarchyLevel.L3
    if TWO_THIRDS <= value < ONE:
        return HierarchyLevel.L4
    return HierarchyLevel.L5

def hierarchy_levels(inst: Instance, alloc: PartialAllocation, b: Fraction) -> List[HierarchyLevel]:
    return [hierarchy_level(inst.bundle_value(i, alloc.bundles[i]), b) for i in inst.agents]

def check_properties_f(inst: Instance, params: ThreeValueParams, alloc: PartialAllocation) -> PropertyReport:
    """Properties F1 and F2 for agents on the lowest hierarchy level"""
    report = PropertyReport()
    low = [i for i, level in enumerate(hierarchy_levels(inst, alloc, params.b)) if level == HierarchyLevel.L5]
    pool = sorted(alloc.pool)
    f1 = [{'agent': i, 'good': g} for i in low for g in pool if inst.value(i, g) >= ONE]
    f2 = []
    for i in low:
        for j in inst.agents:
            if j == i or len(alloc.bundles[j]) < 2:
                continue
            for g in sorted(alloc.bundles[j]):
                if inst.value(i, g) >= ONE:
                    f2.append({'agent': i, 'other': j, 'good': g})
    report.record('F1', f1)
    report.record('F2', f2)
    return report

def is_seed_allocation(inst: Instance, alloc: PartialAllocation) -> bool:
    if not alloc.has_size_at_most(2) or any(not b for b in alloc.bundles):
        return False
    return check_properties(inst, alloc).passes('a', 'b')

# ========== POTENTIAL ==========

@dataclass(frozen=True, order=True)
class PotentialValue:
    """Hierarchy level counts plus the welfare of agents below 1+b, compared lexicographically"""
    top: int
    upper: int
    middle: int
    lower: int
    welfare: Fraction

    def as_tuple(self) -> Tuple[int, int, int, int, Fraction]:
        return (self.top, self.upper, self.middle, self.lower, self.welfare)

    def to_dict(self) -> Dict:
        return {
            'counts': [self.top, self.upper, self.middle, self.lower],
            'welfare': format_value(self.welfare)
        }

def potential(inst: Instance, params: ThreeValueParams, alloc: PartialAllocation) -> PotentialValue:
    counts = {level: 0 for level in HierarchyLevel}
    welfare = Fraction(0)
    for i in inst.agents:
        value = inst.bundle_value(i, alloc.bundles[i])
        counts[hierarchy_level(value, params.b)] += 1
        if value < ONE + params.b:
            welfare += value
    return PotentialValue(counts[HierarchyLevel.L1], counts[HierarchyLevel.L2],
                          counts[HierarchyLevel.L3], counts[HierarchyLevel.L4], welfare)

# ========== ORACLE ==========

AllocationFilter = Callable[[Instance, PartialAllocation, AlphaReport], bool]

ORACLE_FILTERS: Dict[str, AllocationFilter] = {
    'efx23': lambda inst, alloc, report: report.meets(TWO_THIRDS),
    'nocritical': lambda inst, alloc, report: not has_critical_goods(inst, alloc),
    'efx23-nocritical': lambda inst, alloc, report: (
        report.meets(TWO_THIRDS) and not has_critical_goods(inst, alloc)),
}

@dataclass
class OracleResult:
    """Best alpha over the enumerated allocations passing every filter"""
    best: Optional[AlphaReport]
    witness: Optional[PartialAllocation]
    examined: int
    accepted: int

    @property
    def exists(self) -> bool:
        return self.best is not None

    def to_dict(self) -> Dict:
        if self.best is None:
            return {'result': 'none exists', 'examined': self.examined, 'accepted': 0}
        return {
            'result': 'found',
            'best_alpha': format_value(self.best.alpha),
            'witness': self.witness.to_dict(),
            'examined': self.examined,
            'accepted': self.accepted
        }

def oracle_guard(num_agents: int, num_goods: int) -> bool:
    """True iff (n+1)^m assignments fit the enumeration budget"""
    return num_goods * math.log2(num_agents + 1) <= ORACLE_STATE_BITS

def brute_force_best_alpha(inst: Instance, max_bundle_size: Optional[int] = None,
                           require_complete: bool = True,
                           filters: Sequence[AllocationFilter] = ()) -> OracleResult:
    """Enumerate every (partial) allocation and return the best alpha among those passing the filters"""
    n, m = inst.num_agents, inst.num_goods
    if not oracle_guard(n, m):
        raise InputError(
            f"oracle guard exceeded: m*log2(n+1) = {m * math.log2(n + 1):.1f} > {ORACLE_STATE_BITS} (n={n}, m={m})")
    owners = range(n) if require_complete else range(n + 1)
    best, witness, examined, accepted = None, None, 0, 0
    for assignment in itertools.product(owners, repeat=m):
        bundles = [[] for _ in range(n)]
        for g, owner in enumerate(assignment):
            if owner < n:
                bundles[owner].append(g)
        if max_bundle_size is not None and any(len(b) > max_bundle_size for b in bundles):
            continue
        examined += 1
        alloc = PartialAllocation.from_lists(bundles, m)
        report = max_alpha_efx(inst, alloc)
        if not all(f(inst, alloc, report) for f in filters):
            continue
        accepted += 1
        if report.better_than(best):
            best, witness = report, alloc
    return OracleResult(best, witness, examined, accepted)

# ========== CERTIFICATES ==========

@dataclass
class Certificate:
    """Verifier report attached to every allocator output"""
    alpha: AlphaReport
    complete: bool
    critical: Dict[int, FrozenSet[int]]
    threshold: Fraction = TWO_THIRDS
    properties: Optional[PropertyReport] = None

    @property
    def passed(self) -> bool:
        return self.complete and self.alpha.meets(self.threshold)

    def to_dict(self) -> Dict:
        data = {
            'alpha': format_value(self.alpha.alpha),
            'witness': list(self.alpha.witness) if self.alpha.witness else None,
            'complete': self.complete,
            'threshold': format_value(self.threshold),
            'passed': self.passed,
            'critical': {str(i): sorted(goods) for i, goods in self.critical.items()},
            'hierarchy_boundaries': HIERARCHY_BOUNDARIES
        }
        if self.properties is not None:
            data['properties'] = dict(self.properties.verdicts)
        return data

def certify(inst: Instance, alloc: PartialAllocation, threshold: Fraction = TWO_THIRDS,
            params: Optional[ThreeValueParams] = None, with_properties: bool = False) -> Certificate:
    """Recompute the verifier verdicts for an allocation"""
    properties = None
    if with_properties:
        properties = check_properties(inst, alloc)
        if params is not None:
            properties = properties.merge(check_properties_f(inst, params, alloc))
    return Certificate(max_alpha_efx(inst, alloc), alloc.is_complete,
                       critical_goods(inst, alloc), threshold, properties)

# ========== VERIFY ==========

VERIFY_CHECKS = ('efx', 'critical', 'props', 'propsF')

@dataclass
class VerifyReport:
    """Outcome of the requested checks on one (instance, allocation) pair"""
    alpha: AlphaReport
    threshold: Fraction
    checks: Dict[str, bool]
    critical: Dict[int, FrozenSet[int]]
    properties: Optional[PropertyReport] = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> Dict:
        data = {
            **self.alpha.to_dict(),
            'threshold': format_value(self.threshold),
            'checks': dict(self.checks),
            'critical': {str(i): sorted(goods) for i, goods in self.critical.items()},
            'passed': self.passed
        }
        if self.properties is not None:
            data.update(self.properties.to_dict())
        return data

def verify_allocation(inst: Instance, alloc: PartialAllocation, alpha: Fraction = TWO_THIRDS,
                      checks: Sequence[str] = ('efx',),
                      params: Optional[ThreeValueParams] = None) -> VerifyReport:
    unknown = [c for c in checks if c not in VERIFY_CHECKS]
    if unknown:
        raise InputError(f"unknown checks {unknown}, expected a subset of {list(VERIFY_CHECKS)}")
    if 'propsF' in checks and params is None:
        raise InputError("propsF needs a 3-value instance")
    pool_of(inst, alloc)

    report = max_alpha_efx(inst, alloc)
    critical = critical_goods(inst, alloc)
    verdicts: Dict[str, bool] = {}
    properties = None
    if 'efx' in checks:
        verdicts['efx'] = report.meets(alpha)
    if 'critical' in checks:
        verdicts['critical'] = not any(critical.values())
    if 'props' in checks:
        properties = check_properties(inst, alloc)
        verdicts['props'] = properties.passed
    if 'propsF' in checks:
        f_report = check_properties_f(inst, params, alloc)
        properties = properties.merge(f_report) if properties else f_report
        verdicts['propsF'] = f_report.passed
    return VerifyReport(report, alpha, verdicts, critical, properties)
