import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakft.dense import CZ, H
from leakft.mbqc import (
    GraphPattern,
    Measurement,
    basic_unit,
    branch_maps,
    check_exrec_goodness,
    compose_units,
    gate_fidelity,
    leak_fault,
    partition_exrecs,
    pattern_elements,
    simulate_pattern,
    uz,
    ux,
    verify_pattern,
)


def test_basic_unit_structure():
    p = basic_unit(0.1, 0.2, 0.3, 0.4)
    assert p.inputs == [0, 1] and p.outputs == [4, 5]
    assert sorted(p.edges) == [(0, 1), (0, 2), (1, 3), (2, 4), (3, 5)]
    assert [m.node for m in p.schedule] == [0, 2, 1, 3]
    assert p.byproducts[4] == (frozenset({2}), frozenset({0}))
    d = json.loads(p.to_json())
    assert d["outputs"] == [4, 5] and len(d["schedule"]) == 4


def test_zero_angles_give_cz():
    p = basic_unit(0, 0, 0, 0)
    assert np.allclose(p.target_unitary(), CZ)
    maps = branch_maps(p)
    assert len(maps) == 16


def test_rotations_compose_as_expected():
    assert np.allclose(ux(0.7), H @ uz(0.7) @ H)
    p = basic_unit(math.pi / 2, 0, 0, math.pi)
    expected = np.kron(uz(math.pi / 2), ux(math.pi)) @ CZ
    assert np.allclose(p.target_unitary(), expected)


def test_measurement_adaptation():
    m = Measurement(3, 0.4, frozenset({1}), frozenset({2}))
    assert m.actual({1: 0, 2: 0}) == pytest.approx(0.4)
    assert m.actual({1: 1, 2: 0}) == pytest.approx(-0.4)
    assert m.actual({1: 1, 2: 1}) == pytest.approx(math.pi - 0.4)


def test_pattern_validation():
    with pytest.raises(ValueError):
        GraphPattern([0, 1], [0], [1], [(0, 1)], [Measurement(0, 0.0, frozenset({1}))], {})
    with pytest.raises(ValueError):
        GraphPattern([0, 1, 2], [0], [2], [(0, 1)], [Measurement(0, 0.0)], {})


def test_gate_fidelity_is_phase_blind():
    u = np.kron(ux(0.3), uz(0.5)) @ CZ
    assert gate_fidelity(np.exp(0.7j) * u, u) == pytest.approx(1.0)
    assert gate_fidelity(np.eye(4), CZ) < 1


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-math.pi, math.pi, allow_nan=False), min_size=4, max_size=4))
def test_unit_realizes_target_for_any_angles(angles):
    rep = verify_pattern(basic_unit(*angles))
    assert rep.branches == 16
    assert rep.min_fidelity >= 1 - 1e-10
    assert rep.max_output_leakage <= 1e-12
    assert rep.passed


def test_branch_probabilities_sum_to_one():
    p = basic_unit(0.3, 1.1, -0.7, 2.0)
    brs = simulate_pattern(p)
    assert sum(b.probability for b in brs) == pytest.approx(1.0)
    assert all(max(b.leakage) <= 1e-12 for b in brs)


def test_composed_units():
    a = basic_unit(0, math.pi / 4, 0, 0)
    b = basic_unit(math.pi / 2, 0, 0, math.pi / 4)
    q = compose_units(a, b)
    assert len(q.nodes) == 10
    assert np.allclose(q.target_unitary(), b.target_unitary() @ a.target_unitary())
    part = partition_exrecs(q)
    assert [len(r) for r in part.recs] == [13, 13]
    assert [len(e) for e in part.exrecs] == [13, 25]
    assert len(part.overlap(0, 1)) == 12
    assert set().union(*part.recs) == pattern_elements(q)


def test_exrec_independence():
    q = compose_units(basic_unit(0, 0, 0, 0), basic_unit(0, 0, 0, 0))
    part = partition_exrecs(q)
    shared = next(iter(part.overlap(0, 1)))
    only_second = next(iter(part.exrecs[1] - part.exrecs[0]))
    only_first = next(iter(part.exrecs[0] - part.exrecs[1]))
    assert part.bad([shared]) == [True, True]
    assert not part.independent(0, 1, [shared])
    assert part.independent(0, 1, [only_first, only_second])


def test_good_exrec_is_correct():
    p = basic_unit(0.3, 1.1, -0.7, 2.0)
    rep = check_exrec_goodness(p, partition_exrecs(p))
    assert rep.bad == [False]
    assert rep.min_fidelity >= 1 - 1e-10
    assert rep.max_output_leakage <= 1e-12


@pytest.mark.parametrize("element", [("prep", 2), ("meas", 0), ("meas", 2)])
def test_internal_leak_faults_do_not_reach_outputs(element):
    p = basic_unit(0.3, 1.1, -0.7, 2.0)
    rep = check_exrec_goodness(p, partition_exrecs(p), {element: leak_fault()})
    assert rep.bad == [True]
    assert rep.max_output_leakage <= 1e-12


def test_output_prep_fault_leaks():
    p = basic_unit(0.3, 1.1, -0.7, 2.0)
    rep = check_exrec_goodness(p, partition_exrecs(p), {("prep", 4): leak_fault()})
    assert rep.max_output_leakage > 0.1


def test_unknown_fault_element():
    p = basic_unit(0, 0, 0, 0)
    with pytest.raises(ValueError):
        check_exrec_goodness(p, partition_exrecs(p), {("prep", 99): leak_fault()})
