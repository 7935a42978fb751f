from fractions import Fraction

import pytest

from conftest import alloc, inst
from models import InputError, ThreeValueParams
from verification import (
    ORACLE_FILTERS, HierarchyLevel, PotentialValue, brute_force_best_alpha, certify,
    check_properties, check_properties_f, contested_goods, critical_goods, efx_pairs,
    hierarchy_level, is_alpha_efx, max_alpha_efx, oracle_guard, potential, verify_allocation
)

F = Fraction

def test_alpha_of_example_output(example_inst):
    report = max_alpha_efx(example_inst, alloc([[0], [1], [2, 3, 4, 5]], 6))
    assert report.alpha == F(50, 31)
    assert report.witness == (0, 2, 3)
    assert report.binding == {(0, 2), (1, 2)}
    assert report.meets(F(2, 3))
    assert report.to_dict() == {'alpha': '50/31', 'witness': [0, 2, 3]}

def test_alpha_of_bad_allocation(example_inst):
    a = alloc([[0, 1], [2], [3]], 6)
    report = max_alpha_efx(example_inst, a)
    assert report.alpha == F(1, 100)
    assert report.witness == (1, 0, 0)
    assert report.binding == {(1, 0), (2, 0)}
    assert not report.meets(F(2, 3))
    assert not is_alpha_efx(example_inst, a, F(2, 3))
    assert is_alpha_efx(example_inst, a, F(1, 100))

def test_singletons_are_unbounded(example_inst):
    report = max_alpha_efx(example_inst, alloc([[0], [1], [2]], 6))
    assert report.unbounded
    assert report.meets(F(100))
    assert efx_pairs(example_inst, alloc([[0], [1], [2]], 6)) == []

def test_zero_valued_removal_is_skipped():
    values = inst([["1", "0", "0"], ["0", "1", "0"]])
    assert max_alpha_efx(values, alloc([[0], [1, 2]], 3)).unbounded

def test_critical_and_contested(example_inst):
    a = alloc([[0], [1], [5]], 6)
    assert critical_goods(example_inst, a) == {0: {2}, 1: {3}, 2: {2, 3, 4}}
    assert contested_goods(example_inst, a) == {2, 3}

def test_properties_of_bad_allocation(example_inst):
    report = check_properties(example_inst, alloc([[0, 1], [2], [3]], 6))
    assert not report.verdicts['a']
    assert not report.verdicts['b']
    assert 'a' in report.failed()

def test_properties_of_seed(example_inst):
    report = check_properties(example_inst, alloc([[0], [1], [2]], 6))
    assert report.passes('a', 'b')
    # agent 2 holds a c-good while b-goods sit in the pool
    assert not report.verdicts['c']

@pytest.mark.parametrize("value,level", [
    (F(5, 2), HierarchyLevel.L1),
    (F(2), HierarchyLevel.L1),
    (F(31, 20), HierarchyLevel.L2),
    (F(6, 5), HierarchyLevel.L3),
    (F(1), HierarchyLevel.L5),
    (F(2, 3), HierarchyLevel.L4),
    (F(9, 10), HierarchyLevel.L4),
    (F(1, 2), HierarchyLevel.L5),
    (F(0), HierarchyLevel.L5),
])
def test_hierarchy_boundaries(value, level):
    assert hierarchy_level(value, F(11, 20)) == level

def test_potential_example():
    values = inst([["5/2", "0", "0", "0"], ["0", "6/5", "0", "0"], ["0", "0", "1/2", "0"]])
    p = potential(values, ThreeValueParams(F(11, 20), F(1, 20)), alloc([[0], [1], [2]], 4))
    assert p == PotentialValue(1, 0, 1, 0, F(17, 10))
    assert p > PotentialValue(1, 0, 0, 5, F(100))
    assert p.to_dict() == {'counts': [1, 0, 1, 0], 'welfare': '17/10'}

def test_properties_f(example_inst, example):
    params = example.params
    good = check_properties_f(example_inst, params, alloc([[0], [1], [2, 3, 4]], 6))
    assert good.passed
    # agent 2 sits at level L5 while a value-1 good is in the pool
    bad = check_properties_f(example_inst, params, alloc([[0], [3], [2, 4]], 6))
    assert not bad.verdicts['F1']

def test_oracle_guard():
    assert oracle_guard(3, 12)
    assert not oracle_guard(3, 13)
    with pytest.raises(InputError, match="oracle guard"):
        brute_force_best_alpha(inst([["1"] * 13] * 3))

def test_oracle_example_partial_size_two_has_no_critical_free_allocation(example_inst):
    result = brute_force_best_alpha(example_inst, 2, False, [ORACLE_FILTERS['efx23-nocritical']])
    assert not result.exists
    assert result.to_dict()['result'] == 'none exists'
    assert result.examined > 0

def test_oracle_example_complete(example_inst):
    result = brute_force_best_alpha(example_inst)
    assert result.exists
    assert result.best.alpha >= F(50, 31)
    assert result.witness.is_complete
    assert max_alpha_efx(example_inst, result.witness).alpha == result.best.alpha

def test_oracle_single_agent_is_unbounded():
    result = brute_force_best_alpha(inst([["1", "2"]]))
    assert result.best.unbounded
    assert result.to_dict()['best_alpha'] == 'unbounded'

def test_certify(example_inst, example):
    cert = certify(example_inst, alloc([[0], [1], [2, 3, 4, 5]], 6), params=example.params, with_properties=True)
    assert cert.passed
    data = cert.to_dict()
    assert data['alpha'] == '50/31'
    assert data['complete'] is True
    assert data['critical'] == {'0': [], '1': [], '2': []}
    assert 'F1' in data['properties']

    partial = certify(example_inst, alloc([[0], [1], [2]], 6))
    assert not partial.passed

def test_verify_allocation_checks(example_inst, example):
    a = alloc([[0], [1], [2, 3, 4, 5]], 6)
    report = verify_allocation(example_inst, a, F(2, 3), ['efx', 'critical', 'props', 'propsF'], example.params)
    assert report.passed
    assert report.checks == {'efx': True, 'critical': True, 'props': True, 'propsF': True}

    strict = verify_allocation(example_inst, a, F(2))
    assert not strict.passed
    assert strict.to_dict()['alpha'] == '50/31'

def test_verify_allocation_rejects_bad_requests(example_inst):
    a = alloc([[0], [1], [2]], 6)
    with pytest.raises(InputError):
        verify_allocation(example_inst, a, checks=['efx', 'nope'])
    with pytest.raises(InputError):
        verify_allocation(example_inst, a, checks=['propsF'])
    with pytest.raises(InputError):
        verify_allocation(example_inst, alloc([[0], [1]], 6))
