"""
Hypothesis-based checks of the verifier and the allocators.
"""
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from allocators import few_agents_allocate, multigraph_allocate, three_values_allocate
from models import (
    Instance, MultigraphEdge, MultigraphInstance, PartialAllocation, ThreeValueInstance, ValueLabel
)
from subroutines import envy_cycle_elimination
from verification import (
    brute_force_best_alpha, check_properties, critical_goods, max_alpha_efx
)

Values = st.fractions(min_value=0, max_value=1, max_denominator=12)

@st.composite
def instances(draw, max_agents=3, max_goods=6):
    n = draw(st.integers(1, max_agents))
    m = draw(st.integers(1, max_goods))
    rows = draw(st.lists(st.lists(Values, min_size=m, max_size=m), min_size=n, max_size=n))
    return Instance(tuple(tuple(Fraction(v) for v in row) for row in rows))

@st.composite
def instance_and_allocation(draw, max_agents=3, max_goods=6):
    inst = draw(instances(max_agents, max_goods))
    owners = draw(st.lists(st.integers(-1, inst.num_agents - 1),
                           min_size=inst.num_goods, max_size=inst.num_goods))
    bundles = [[g for g, o in enumerate(owners) if o == i] for i in inst.agents]
    return inst, PartialAllocation.from_lists(bundles, inst.num_goods)

@st.composite
def multigraphs(draw):
    n = draw(st.integers(2, 4))
    m = draw(st.integers(n + 1, 8))
    edges = []
    for _ in range(m):
        a, b = sorted(draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True)))
        edges.append(MultigraphEdge(a, b, Fraction(draw(Values)), Fraction(draw(Values))))
    return MultigraphInstance(n, tuple(edges))

@st.composite
def three_value_instances(draw):
    n = draw(st.integers(2, 3))
    m = draw(st.integers(n + 1, 7))
    c = draw(st.fractions(min_value=0, max_value=Fraction(1, 2), max_denominator=30))
    b = draw(st.fractions(min_value=c, max_value=1, max_denominator=30).filter(lambda x: c < x < 1))
    labels = draw(st.lists(st.lists(st.sampled_from(list(ValueLabel)), min_size=m, max_size=m),
                           min_size=n, max_size=n))
    return ThreeValueInstance(Fraction(b), Fraction(c), tuple(tuple(row) for row in labels))

@given(instance_and_allocation(), st.integers(0, 2), st.fractions(min_value=Fraction(1, 10), max_value=10))
def test_verdicts_invariant_under_scaling(pair, agent, factor):
    inst, alloc = pair
    agent = agent % inst.num_agents
    scaled = inst.scaled(agent, Fraction(factor))
    before, after = max_alpha_efx(inst, alloc), max_alpha_efx(scaled, alloc)
    assert before.alpha == after.alpha
    assert before.binding == after.binding
    assert critical_goods(inst, alloc) == critical_goods(scaled, alloc)
    assert check_properties(inst, alloc).verdicts == check_properties(scaled, alloc).verdicts

@given(instance_and_allocation())
def test_alpha_is_exact_threshold(pair):
    inst, alloc = pair
    report = max_alpha_efx(inst, alloc)
    if report.unbounded:
        return
    assert report.meets(report.alpha)
    assert not report.meets(report.alpha + Fraction(1, 10 ** 6))

@given(instance_and_allocation())
def test_envy_cycle_elimination_never_lowers_values(pair):
    inst, alloc = pair
    history = []
    final = envy_cycle_elimination(
        inst, alloc, observer=lambda a: history.append([inst.bundle_value(i, a.bundles[i]) for i in inst.agents]))
    assert final.is_complete
    for before, after in zip(history, history[1:]):
        assert all(x <= y for x, y in zip(before, after))

@settings(max_examples=40, deadline=None)
@given(multigraphs())
def test_multigraph_allocation_certified(mg):
    result = multigraph_allocate(mg)
    assert result.passed

@settings(max_examples=40, deadline=None)
@given(instances(max_agents=4, max_goods=8))
def test_few_agents_allocation_certified(inst):
    assert few_agents_allocate(inst).passed

@settings(max_examples=40, deadline=None)
@given(three_value_instances())
def test_three_value_allocation_certified(tv):
    assert three_values_allocate(tv).passed

@settings(max_examples=15, deadline=None)
@given(instances(max_agents=3, max_goods=6))
def test_allocation_never_beats_oracle(inst):
    result = few_agents_allocate(inst)
    best = brute_force_best_alpha(inst)
    alpha = result.certificate.alpha
    if best.best.unbounded:
        return
    assert alpha.alpha is not None
    assert alpha.alpha <= best.best.alpha
