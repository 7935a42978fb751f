"""
Data models with serialization support: exact values, instances, partial allocations, traces
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from utils import format_value, parse_value

TWO_THIRDS = Fraction(2, 3)
HALF = Fraction(1, 2)
ONE = Fraction(1)

# ========== ERRORS ==========

class EfxError(Exception):
    """Base error for the allocation toolkit"""
    pass

class InputError(EfxError):
    """Malformed input or bad identifiers"""
    pass

class PreconditionError(InputError):
    """An operation was called outside its precondition"""
    pass

class InternalInvariantError(EfxError):
    """A guaranteed invariant or bound did not hold"""
    pass

# ========== ENUMS ==========

class InstanceKind(Enum):
    """Instance file kinds"""
    ADDITIVE = "additive"
    MULTIGRAPH = "multigraph"
    THREE_VALUE = "threevalue"

class GraphKind(Enum):
    """Envy graph variants"""
    PLAIN = "plain"
    REDUCED = "reduced"
    ENHANCED = "enhanced"
    REDUCED_PLUS = "reduced_plus"
    ENHANCED_PLUS = "enhanced_plus"
    DOUBLY_ENHANCED = "doubly_enhanced"

    @property
    def needs_params(self) -> bool:
        return self in (GraphKind.ENHANCED_PLUS, GraphKind.DOUBLY_ENHANCED)

class EdgeColor(Enum):
    """Envy graph edge colors"""
    PLAIN = "plain"
    RED = "red"
    GREY = "grey"
    DE = "de"

class ThreeValueCase(Enum):
    """Parameter regimes of 3-value instances"""
    CASE1 = "case1"
    CASE2 = "case2"
    CASE3 = "case3"

class ValueLabel(Enum):
    """Entry labels of a 3-value instance (a is normalised to 1)"""
    A = "A"
    B = "B"
    C = "C"

# ========== VALUES ==========

def to_value(raw: Any, what: str = "value") -> Fraction:
    """Parse a rational, turning parse failures into InputError"""
    try:
        return parse_value(raw)
    except ValueError as e:
        raise InputError(f"invalid {what}: {e}") from None

def _require_int(data: Mapping, key: str) -> int:
    value = data.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"'{key}' must be an integer, got {value!r}")
    return value

# ========== INSTANCES ==========

@dataclass(frozen=True)
class Instance:
    """Additive instance: values[i][g] is agent i's value for good g"""
    values: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        if not self.values:
            raise InputError("instance needs at least one agent")
        width = len(self.values[0])
        if width == 0:
            raise InputError("instance needs at least one good")
        for i, row in enumerate(self.values):
            if len(row) != width:
                raise InputError(f"agent {i} has {len(row)} values, expected {width}")
            for g, v in enumerate(row):
                if not isinstance(v, Fraction):
                    raise InputError(f"value ({i},{g}) is not exact: {v!r}")
                if v < 0:
                    raise InputError(f"negative value {format_value(v)} for agent {i}, good {g}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Any]]) -> 'Instance':
        """Build from rows of raw values ("p/q" strings, ints, decimals)"""
        return cls(tuple(
            tuple(to_value(v, f"value ({i},{g})") for g, v in enumerate(row))
            for i, row in enumerate(rows)
        ))

    @property
    def num_agents(self) -> int:
        return len(self.values)

    @property
    def num_goods(self) -> int:
        return len(self.values[0])

    @property
    def agents(self) -> range:
        return range(self.num_agents)

    @property
    def goods(self) -> range:
        return range(self.num_goods)

    def value(self, agent: int, good: int) -> Fraction:
        return self.values[agent][good]

    def bundle_value(self, agent: int, goods: Iterable[int]) -> Fraction:
        """Exact additive value of a set of goods"""
        if not 0 <= agent < self.num_agents:
            raise InputError(f"agent {agent} out of range [0, {self.num_agents})")
        row = self.values[agent]
        total = Fraction(0)
        for g in goods:
            if not 0 <= g < self.num_goods:
                raise InputError(f"good {g} out of range [0, {self.num_goods})")
            total += row[g]
        return total

    def favourite(self, agent: int, goods: Iterable[int]) -> int:
        """Most valuable good for `agent`, lex-least on ties"""
        row = self.values[agent]
        return min(goods, key=lambda g: (-row[g], g))

    def scaled(self, agent: int, factor: Fraction) -> 'Instance':
        """Copy with one agent's row multiplied by a positive factor"""
        if factor <= 0:
            raise InputError("scale factor must be positive")
        rows = list(self.values)
        rows[agent] = tuple(v * factor for v in rows[agent])
        return Instance(tuple(rows))

    def to_instance(self) -> 'Instance':
        return self

    def to_dict(self) -> Dict:
        return {
            'kind': InstanceKind.ADDITIVE.value,
            'n': self.num_agents,
            'm': self.num_goods,
            'values': [[format_value(v) for v in row] for row in self.values]
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Instance':
        rows = data.get('values')
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise InputError("'values' must be a list of lists")
        instance = cls.from_rows(rows)
        _check_shape(data, instance.num_agents, instance.num_goods)
        return instance

@dataclass(frozen=True)
class MultigraphEdge:
    """One good: an edge between two agents with the two endpoint values"""
    a: int
    b: int
    value_a: Fraction
    value_b: Fraction

    def to_list(self) -> List:
        return [self.a, self.b, format_value(self.value_a), format_value(self.value_b)]

@dataclass(frozen=True)
class MultigraphInstance:
    """Goods are edges of a multigraph over the agents"""
    num_agents: int
    edges: Tuple[MultigraphEdge, ...]

    def __post_init__(self):
        if self.num_agents < 1:
            raise InputError("multigraph instance needs at least one agent")
        if not self.edges:
            raise InputError("multigraph instance needs at least one edge")
        for g, e in enumerate(self.edges):
            for end in (e.a, e.b):
                if not 0 <= end < self.num_agents:
                    raise InputError(f"edge g{g} endpoint {end} out of range")
            if e.a == e.b:
                raise InputError(f"edge g{g} is a self-loop at agent {e.a}")
            if e.value_a < 0 or e.value_b < 0:
                raise InputError(f"edge g{g} has a negative value")

    @property
    def num_goods(self) -> int:
        return len(self.edges)

    @cached_property
    def instance(self) -> Instance:
        rows = [[Fraction(0)] * len(self.edges) for _ in range(self.num_agents)]
        for g, e in enumerate(self.edges):
            rows[e.a][g] = e.value_a
            rows[e.b][g] = e.value_b
        return Instance(tuple(tuple(r) for r in rows))

    def to_instance(self) -> Instance:
        return self.instance

    def to_dict(self) -> Dict:
        return {
            'kind': InstanceKind.MULTIGRAPH.value,
            'n': self.num_agents,
            'm': self.num_goods,
            'edges': [e.to_list() for e in self.edges]
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'MultigraphInstance':
        n = _require_int(data, 'n')
        raw_edges = data.get('edges')
        if not isinstance(raw_edges, list):
            raise InputError("'edges' must be a list")
        edges = []
        for g, raw in enumerate(raw_edges):
            if isinstance(raw, dict):
                raw = [raw.get('a'), raw.get('b'), raw.get('value_a'), raw.get('value_b')]
            if not isinstance(raw, list) or len(raw) != 4:
                raise InputError(f"edge g{g} must be [a, b, value_a, value_b]")
            a, b, va, vb = raw
            if isinstance(a, bool) or isinstance(b, bool) or not isinstance(a, int) or not isinstance(b, int):
                raise InputError(f"edge g{g} endpoints must be agent ids")
            edges.append(MultigraphEdge(a, b, to_value(va, f"edge g{g} value"), to_value(vb, f"edge g{g} value")))
        instance = cls(n, tuple(edges))
        _check_shape(data, n, len(edges))
        return instance

@dataclass(frozen=True)
class ThreeValueParams:
    """The two non-top values of a 3-value instance"""
    b: Fraction
    c: Fraction

    def to_dict(self) -> Dict:
        return {'b': format_value(self.b), 'c': format_value(self.c)}

@dataclass(frozen=True)
class ThreeValueInstance:
    """Every entry is 1, b or c with 1 > b > c >= 0"""
    b: Fraction
    c: Fraction
    labels: Tuple[Tuple[ValueLabel, ...], ...]

    def __post_init__(self):
        if self.b == self.c:
            raise InputError(
                "degenerate instance with b = c: this is a two-value instance, "
                "for which exact EFX algorithms from prior work apply")
        if not (ONE > self.b > self.c >= 0):
            raise InputError(
                f"3-value parameters must satisfy 1 > b > c >= 0, got b={format_value(self.b)}, c={format_value(self.c)}")
        if not self.labels or not self.labels[0]:
            raise InputError("3-value instance needs at least one agent and one good")
        width = len(self.labels[0])
        for i, row in enumerate(self.labels):
            if len(row) != width:
                raise InputError(f"agent {i} has {len(row)} labels, expected {width}")

    @property
    def num_agents(self) -> int:
        return len(self.labels)

    @property
    def num_goods(self) -> int:
        return len(self.labels[0])

    @property
    def params(self) -> ThreeValueParams:
        return ThreeValueParams(self.b, self.c)

    @cached_property
    def instance(self) -> Instance:
        lookup = {ValueLabel.A: ONE, ValueLabel.B: self.b, ValueLabel.C: self.c}
        return Instance(tuple(tuple(lookup[x] for x in row) for row in self.labels))

    def to_instance(self) -> Instance:
        return self.instance

    def with_c(self, c: Fraction) -> 'ThreeValueInstance':
        return ThreeValueInstance(self.b, c, self.labels)

    def to_dict(self) -> Dict:
        return {
            'kind': InstanceKind.THREE_VALUE.value,
            'n': self.num_agents,
            'm': self.num_goods,
            'b': format_value(self.b),
            'c': format_value(self.c),
            'labels': [''.join(x.value for x in row) for row in self.labels]
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'ThreeValueInstance':
        raw_labels = data.get('labels')
        if not isinstance(raw_labels, list):
            raise InputError("'labels' must be a list")
        labels = []
        for i, row in enumerate(raw_labels):
            if not isinstance(row, (str, list)):
                raise InputError(f"labels of agent {i} must be a string or a list")
            try:
                labels.append(tuple(ValueLabel(str(x).upper()) for x in row))
            except ValueError:
                raise InputError(f"labels of agent {i} must be drawn from A, B, C") from None
        instance = cls(to_value(data.get('b'), 'b'), to_value(data.get('c'), 'c'), tuple(labels))
        _check_shape(data, instance.num_agents, instance.num_goods)
        return instance

AnyInstance = Union[Instance, MultigraphInstance, ThreeValueInstance]

def _check_shape(data: Dict, n: int, m: int):
    if 'n' in data and data['n'] != n:
        raise InputError(f"'n' is {data['n']} but the payload has {n} agents")
    if 'm' in data and data['m'] != m:
        raise InputError(f"'m' is {data['m']} but the payload has {m} goods")

def instance_from_dict(data: Any) -> AnyInstance:
    """Parse any instance JSON object by its "kind" field"""
    if not isinstance(data, dict):
        raise InputError("instance JSON must be an object")
    try:
        kind = InstanceKind(data.get('kind', InstanceKind.ADDITIVE.value))
    except ValueError:
        raise InputError(f"unknown instance kind: {data.get('kind')!r}") from None
    if kind == InstanceKind.MULTIGRAPH:
        return MultigraphInstance.from_dict(data)
    if kind == InstanceKind.THREE_VALUE:
        return ThreeValueInstance.from_dict(data)
    return Instance.from_dict(data)

# ========== ALLOCATIONS ==========

@dataclass(frozen=True)
class PartialAllocation:
    """Disjoint bundles per agent; unallocated goods form the pool"""
    bundles: Tuple[FrozenSet[int], ...]
    num_goods: int

    def __post_init__(self):
        seen: Dict[int, int] = {}
        for i, bundle in enumerate(self.bundles):
            for g in bundle:
                if not 0 <= g < self.num_goods:
                    raise InputError(f"good {g} of agent {i} out of range [0, {self.num_goods})")
                if g in seen:
                    raise InputError(f"good {g} is in the bundles of agents {seen[g]} and {i}")
                seen[g] = i

    @classmethod
    def from_lists(cls, bundles: Iterable[Iterable[int]], num_goods: int) -> 'PartialAllocation':
        return cls(tuple(frozenset(b) for b in bundles), num_goods)

    @classmethod
    def empty(cls, num_agents: int, num_goods: int) -> 'PartialAllocation':
        return cls(tuple(frozenset() for _ in range(num_agents)), num_goods)

    @property
    def num_agents(self) -> int:
        return len(self.bundles)

    @cached_property
    def pool(self) -> FrozenSet[int]:
        allocated = set().union(*self.bundles) if self.bundles else set()
        return frozenset(g for g in range(self.num_goods) if g not in allocated)

    @property
    def is_complete(self) -> bool:
        return not self.pool

    @property
    def size(self) -> int:
        """Largest bundle cardinality"""
        return max((len(b) for b in self.bundles), default=0)

    def has_size_at_most(self, k: int) -> bool:
        return self.size <= k

    def owner(self, good: int) -> Optional[int]:
        for i, bundle in enumerate(self.bundles):
            if good in bundle:
                return i
        return None

    def with_bundles(self, updates: Mapping[int, Iterable[int]]) -> 'PartialAllocation':
        """New allocation with some bundles replaced"""
        bundles = list(self.bundles)
        for agent, goods in updates.items():
            bundles[agent] = frozenset(goods)
        return PartialAllocation(tuple(bundles), self.num_goods)

    def to_dict(self) -> Dict:
        return {'bundles': [sorted(b) for b in self.bundles]}

    @classmethod
    def from_dict(cls, data: Any, num_goods: int) -> 'PartialAllocation':
        if not isinstance(data, dict) or not isinstance(data.get('bundles'), list):
            raise InputError("allocation JSON must be an object with a 'bundles' list")
        bundles = []
        for i, raw in enumerate(data['bundles']):
            if not isinstance(raw, list) or any(isinstance(g, bool) or not isinstance(g, int) for g in raw):
                raise InputError(f"bundle of agent {i} must be a list of good ids")
            if len(set(raw)) != len(raw):
                raise InputError(f"bundle of agent {i} lists a good twice")
            bundles.append(frozenset(raw))
        return cls(tuple(bundles), num_goods)

    def describe(self) -> str:
        return '(' + ', '.join('{' + ','.join(f"g{g}" for g in sorted(b)) + '}' for b in self.bundles) + ')'

def bundle_value(inst: Instance, agent: int, goods: Iterable[int]) -> Fraction:
    """v_agent(goods)"""
    return inst.bundle_value(agent, goods)

def pool_of(inst: Instance, alloc: PartialAllocation) -> FrozenSet[int]:
    """Unallocated goods"""
    if alloc.num_agents != inst.num_agents or alloc.num_goods != inst.num_goods:
        raise InputError(
            f"allocation shape ({alloc.num_agents} agents, {alloc.num_goods} goods) does not match "
            f"the instance ({inst.num_agents} agents, {inst.num_goods} goods)")
    return alloc.pool

def seed_allocation(inst: Instance) -> PartialAllocation:
    """Agent j receives good j"""
    if inst.num_goods <= inst.num_agents:
        raise PreconditionError(
            f"seed allocation needs m > n (got n={inst.num_agents}, m={inst.num_goods})")
    return PartialAllocation(tuple(frozenset([j]) for j in inst.agents), inst.num_goods)

def trivial_allocation(inst: Instance) -> PartialAllocation:
    """For m <= n: agent j < m receives good j; exactly EFX"""
    if inst.num_goods > inst.num_agents:
        raise PreconditionError("trivial allocation only applies when m <= n")
    return PartialAllocation(
        tuple(frozenset([j]) if j < inst.num_goods else frozenset() for j in inst.agents),
        inst.num_goods)

# ========== TRACES ==========

@dataclass
class TraceEvent:
    """One recorded mutation"""
    iteration: int
    op: str
    pool_size: int
    stage: str = ''
    kind: str = 'op'
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'iter': self.iteration,
            'stage': self.stage,
            'kind': self.kind,
            'op': self.op,
            'pool': self.pool_size,
            'detail': self.detail
        }

@dataclass
class RunTrace:
    """Ordered log of engine steps and subroutine operations"""
    events: List[TraceEvent] = field(default_factory=list)
    stage: str = ''
    iteration: int = 0

    def begin_stage(self, stage: str):
        self.stage = stage
        self.iteration = 0

    def record(self, op: str, pool_size: int, **detail):
        self.events.append(TraceEvent(self.iteration, op, pool_size, self.stage, 'op', detail))

    def record_step(self, iteration: int, step: str, pool_size: int, **detail):
        self.iteration = iteration
        self.events.append(TraceEvent(iteration, step, pool_size, self.stage, 'step', detail))

    def steps(self, stage: Optional[str] = None) -> List[TraceEvent]:
        return [e for e in self.events if e.kind == 'step' and (stage is None or e.stage == stage)]

    def iterations(self, stage: Optional[str] = None) -> int:
        """Number of engine loop iterations recorded for a stage"""
        return len(self.steps(stage))

    def to_dicts(self) -> List[Dict]:
        return [e.to_dict() for e in self.events]

@dataclass(frozen=True)
class EngineLimits:
    """Hard iteration cap of an engine loop"""
    max_iterations: int

    @classmethod
    def for_property_preserving(cls, n: int, m: int) -> 'EngineLimits':
        return cls(n * m * m + 1)

    @classmethod
    def for_three_value(cls, n: int, m: int) -> 'EngineLimits':
        return cls(56 * m * n ** 4)
