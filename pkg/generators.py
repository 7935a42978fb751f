"""
Seeded instance generators (random.Random, i.e. MT19937) and the fixed three-agent fixture
"""
import random
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, List, Optional

from models import (
    AnyInstance, HALF, InputError, Instance, InstanceKind, MultigraphEdge, MultigraphInstance,
    PreconditionError, ThreeValueCase, ThreeValueInstance, TWO_THIRDS, ValueLabel
)

MAX_REJECTIONS = 10000

@dataclass
class GenSpec:
    """Everything a generated instance depends on"""
    seed: int
    family: str = InstanceKind.ADDITIVE.value
    n: int = 3
    m: int = 6
    grid: int = 100
    allow_zero: bool = True
    case: Optional[str] = None
    zero_c: bool = False

    def __post_init__(self):
        try:
            InstanceKind(self.family)
        except ValueError:
            raise InputError(f"unknown family '{self.family}'") from None
        if self.case is not None:
            try:
                ThreeValueCase(self.case)
            except ValueError:
                raise InputError(f"unknown case '{self.case}'") from None
        if self.n < 1:
            raise InputError("n must be at least 1")
        if self.m <= self.n:
            raise PreconditionError(f"generators need m > n (got n={self.n}, m={self.m})")
        if self.grid < 2:
            raise InputError("grid denominator must be at least 2")

    @property
    def kind(self) -> InstanceKind:
        return InstanceKind(self.family)

    def rng(self) -> random.Random:
        return random.Random(self.seed)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'GenSpec':
        if not isinstance(data, dict) or 'seed' not in data:
            raise InputError("generator spec must be an object with a 'seed'")
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        for key in ('seed', 'n', 'm', 'grid'):
            if key in known and (isinstance(known[key], bool) or not isinstance(known[key], int)):
                raise InputError(f"'{key}' must be an integer")
        return cls(**known)

def _grid_value(rng: random.Random, spec: GenSpec) -> Fraction:
    low = 0 if spec.allow_zero else 1
    return Fraction(rng.randint(low, spec.grid), spec.grid)

def gen_additive(spec: GenSpec) -> Instance:
    rng = spec.rng()
    return Instance(tuple(
        tuple(_grid_value(rng, spec) for _ in range(spec.m)) for _ in range(spec.n)
    ))

def gen_multigraph(spec: GenSpec) -> MultigraphInstance:
    if spec.n < 2:
        raise InputError("multigraph instances need at least two agents")
    rng = spec.rng()
    edges = []
    for _ in range(spec.m):
        a, b = sorted(rng.sample(range(spec.n), 2))
        edges.append(MultigraphEdge(a, b, _grid_value(rng, spec), _grid_value(rng, spec)))
    return MultigraphInstance(spec.n, tuple(edges))

def _case_holds(case: ThreeValueCase, b: Fraction, c: Fraction) -> bool:
    if case == ThreeValueCase.CASE1:
        return b <= HALF
    if case == ThreeValueCase.CASE2:
        return b > HALF and b + c >= TWO_THIRDS
    return b > HALF and b + c < TWO_THIRDS

def gen_three_value(spec: GenSpec, case: Optional[ThreeValueCase] = None) -> ThreeValueInstance:
    """Rejection-sample (b, c) on the grid for the requested case, then uniform labels"""
    rng = spec.rng()
    if case is None and spec.case is not None:
        case = ThreeValueCase(spec.case)
    if spec.zero_c and case not in (None, ThreeValueCase.CASE3):
        raise InputError("c = 0 instances are only generated for case3")

    for _ in range(MAX_REJECTIONS):
        b_index = rng.randint(1, spec.grid - 1)
        c_index = 0 if spec.zero_c else rng.randint(0, b_index - 1)
        b, c = Fraction(b_index, spec.grid), Fraction(c_index, spec.grid)
        if spec.zero_c and not _case_holds(ThreeValueCase.CASE3, b, c):
            continue
        if case is None or _case_holds(case, b, c):
            break
    else:
        raise InputError(f"no (b, c) on a 1/{spec.grid} grid found for {case.value if case else 'any case'}")

    labels = tuple(
        tuple(rng.choice((ValueLabel.A, ValueLabel.B, ValueLabel.C)) for _ in range(spec.m))
        for _ in range(spec.n)
    )
    return ThreeValueInstance(b, c, labels)

def example_one() -> ThreeValueInstance:
    """Three agents, six goods: g0 and g1 are worth 1 to everyone, agent i values g(2+i) at 3/5, the rest at 1/100"""
    rows: List[List[ValueLabel]] = []
    for i in range(3):
        row = [ValueLabel.A, ValueLabel.A] + [ValueLabel.C] * 4
        row[2 + i] = ValueLabel.B
        rows.append(row)
    return ThreeValueInstance(Fraction(3, 5), Fraction(1, 100), tuple(tuple(r) for r in rows))

def generate(spec: GenSpec) -> AnyInstance:
    """Dispatch on the spec's family"""
    if spec.kind == InstanceKind.MULTIGRAPH:
        return gen_multigraph(spec)
    if spec.kind == InstanceKind.THREE_VALUE:
        return gen_three_value(spec)
    return gen_additive(spec)
