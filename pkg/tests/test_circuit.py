import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakft.circuit import (
    CircuitBuilder,
    CircuitError,
    Kind,
    Location,
    build_circuit,
    compose,
    count_locations,
    from_json,
    from_text,
    to_json,
    to_text,
)


def bell_circuit():
    b = CircuitBuilder()
    q0, q1 = b.qubits(2)
    b.prep(q0, "+")
    b.prep(q1, "0")
    b.gate("CNOT", q0, q1)
    m = b.measure(q0, "X")
    b.classical("parity", [m], [q1], "Z")
    b.set_outputs([q1])
    return b.build()


def test_builder_schedules_as_soon_as_possible():
    c = bell_circuit()
    assert [loc.timestep for loc in c.locations] == [0, 0, 1, 2]
    assert c.depth == 3
    assert c.dims == (3, 3)
    assert c.outputs == (1,)
    assert count_locations(c, lambda loc: loc.kind is Kind.PREP) == 2


def test_location_validation():
    with pytest.raises(CircuitError):
        Location(Kind.GATE2, "CNOT", (0,))
    with pytest.raises(CircuitError):
        Location(Kind.GATE2, "CNOT", (1, 1))
    with pytest.raises(CircuitError):
        Location(Kind.GATE1, "H", (0,), timestep=-1)


def test_overlap_and_use_after_measurement_rejected():
    with pytest.raises(CircuitError):
        build_circuit(2, 1, [Location(Kind.GATE1, "H", (0,), 0), Location(Kind.GATE2, "CNOT", (0, 1), 0)],
                      inputs=[0, 1])
    with pytest.raises(CircuitError):
        build_circuit(1, 1, [Location(Kind.MEASURE, "Z", (0,), 0), Location(Kind.GATE1, "H", (0,), 1)],
                      inputs=[0])


def test_unprepared_non_input_rejected():
    with pytest.raises(CircuitError):
        build_circuit(1, 1, [Location(Kind.GATE1, "H", (0,), 0)])


def test_builder_rejects_unknown_labels():
    b = CircuitBuilder()
    q = b.qubit(input=True)
    with pytest.raises(CircuitError):
        b.gate("T", q)
    with pytest.raises(CircuitError):
        b.prep(q, "1")
    with pytest.raises(CircuitError):
        b.measure(q, "Y")


def test_timesteps_are_normalized():
    c = build_circuit(1, 1, [Location(Kind.GATE1, "H", (0,), 3), Location(Kind.GATE1, "S", (0,), 7)], inputs=[0])
    assert [loc.timestep for loc in c.locations] == [0, 1]


def test_text_and_json_round_trip():
    c = bell_circuit()
    assert from_text(to_text(c)) == c
    assert from_json(to_json(c)) == c


def test_compose_shifts_time_and_wires():
    a = bell_circuit()
    b = CircuitBuilder()
    q = b.qubit(input=True)
    b.gate("H", q)
    b.set_outputs([q])
    c = compose(a, b.build(), {0: 1})
    assert len(c) == 5
    assert c.locations[-1].timestep == a.depth
    assert c.locations[-1].qubits == (1,)
    assert c.outputs == (1,)


def test_compose_rejects_measured_target():
    a = bell_circuit()
    b = CircuitBuilder()
    q = b.qubit(input=True)
    b.gate("H", q)
    with pytest.raises(CircuitError):
        compose(a, b.build(), {0: 0})


GATES1 = ("H", "S", "X", "Z")


@st.composite
def random_circuits(draw):
    n = draw(st.integers(1, 4))
    b = CircuitBuilder(draw(st.integers(0, 2)))
    qs = b.qubits(n, input=True)
    for _ in range(draw(st.integers(0, 12))):
        if n > 1 and draw(st.booleans()):
            i, j = draw(st.lists(st.sampled_from(qs), min_size=2, max_size=2, unique=True))
            b.gate(draw(st.sampled_from(("CNOT", "CZ"))), i, j)
        else:
            b.gate(draw(st.sampled_from(GATES1)), draw(st.sampled_from(qs)))
    return b.build()


@settings(max_examples=60, deadline=None)
@given(random_circuits())
def test_serialization_round_trip_property(c):
    assert from_text(to_text(c)) == c
    assert from_json(to_json(c)) == c


@settings(max_examples=60, deadline=None)
@given(random_circuits())
def test_no_qubit_used_twice_per_timestep(c):
    seen = set()
    for loc in c.locations:
        for q in loc.qubits:
            assert (q, loc.timestep) not in seen
            seen.add((q, loc.timestep))
