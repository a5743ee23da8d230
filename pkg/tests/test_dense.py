import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakft.circuit import CircuitBuilder, Kind
from leakft.dense import (
    GATES,
    MAX_STATE_QUBITS,
    CapacityError,
    ExtendedState,
    basis_state,
    channel_of,
    embed_ideal_gate,
    fidelity,
    is_unitary,
    leakage_weight,
    local_vector,
    location_operator,
    opnorm,
    outcome_bit,
    product_state,
    run,
    run_branches,
    system_indices,
    tensor_channels,
    unitary_channel,
)


def full_operator(loc, dims):
    """Independent oracle: lift a location to the full register with explicit index arithmetic."""
    n = len(dims)
    D = int(np.prod(dims))
    m = location_operator(loc, dims)
    out = np.zeros((D, D), dtype=complex)
    local = [dims[q] for q in loc.qubits]
    for col in range(D):
        idx = list(np.unravel_index(col, dims))
        sub_in = np.ravel_multi_index([idx[q] for q in loc.qubits], local)
        for sub_out in range(m.shape[0]):
            amp = m[sub_out, sub_in]
            if amp == 0:
                continue
            new = list(idx)
            for q, v in zip(loc.qubits, np.unravel_index(sub_out, local)):
                new[q] = v
            out[np.ravel_multi_index(new, dims), col] += amp
    assert n == len(dims)
    return out


def test_embedded_gate_is_identity_on_leaked_levels():
    cx = embed_ideal_gate(GATES["CNOT"], 3).matrix
    assert is_unitary(cx)
    for a in range(3):
        for b in range(3):
            i = a * 3 + b
            if a == 2 or b == 2:
                assert cx[i, i] == 1
    assert set(system_indices((3, 3))) == {0, 1, 3, 4}


def test_embed_rejects_non_unitary():
    with pytest.raises(ValueError):
        embed_ideal_gate(np.ones((2, 2)))


def test_bell_state_branches():
    b = CircuitBuilder()
    q0, q1 = b.qubits(2)
    b.prep(q0, "+")
    b.prep(q1, "0")
    b.gate("CNOT", q0, q1)
    b.measure(q0, "Z")
    c = b.build()
    brs = run_branches(c)
    assert len(brs) == 2
    for br in brs:
        assert br.probability == pytest.approx(0.5)
        expected = local_vector(3, {br.outcomes[3]: 1})
        assert fidelity(br.state.amplitudes, expected) == pytest.approx(1.0)


def test_leaked_measurement_reads_zero():
    b = CircuitBuilder()
    q = b.qubit(input=True)
    m = b.measure(q, "Z")
    c = b.build()
    (br,) = run_branches(c, basis_state((3,), (2,)))
    assert br.outcomes[m] == 2
    assert outcome_bit(br.outcomes[m]) == 0


def test_capacity_limit():
    b = CircuitBuilder()
    qs = b.qubits(MAX_STATE_QUBITS + 1)
    for q in qs:
        b.prep(q, "0")
    with pytest.raises(CapacityError):
        run_branches(b.build())


def test_sampled_run_is_seed_deterministic():
    b = CircuitBuilder()
    q = b.qubit()
    b.prep(q, "+")
    b.measure(q, "Z")
    c = b.build()
    assert run(c, rng=3).outcomes == run(c, rng=3).outcomes


def test_unitary_circuit_channel_matches_unitary():
    b = CircuitBuilder()
    q0, q1 = b.qubits(2, input=True)
    b.gate("H", q0)
    b.gate("CNOT", q0, q1)
    c = b.build()
    u = full_operator(c.locations[1], c.dims) @ full_operator(c.locations[0], c.dims)
    ch = channel_of(c)
    assert np.allclose(ch.matrix, unitary_channel(u, c.dims).matrix, atol=1e-12)
    assert ch.is_cptp()


def test_tensor_channels_of_unitaries():
    h = embed_ideal_gate(GATES["H"]).matrix
    x = embed_ideal_gate(GATES["X"]).matrix
    a = tensor_channels(unitary_channel(h, (3,)), unitary_channel(x, (3,)))
    assert np.allclose(a.matrix, unitary_channel(np.kron(h, x), (3, 3)).matrix)


def test_opnorm():
    assert opnorm(np.diag([3.0, -5.0])) == pytest.approx(5.0)
    assert opnorm(np.zeros((0, 0))) == 0.0


@st.composite
def gate_circuits(draw):
    n = draw(st.integers(1, 3))
    b = CircuitBuilder()
    qs = b.qubits(n, input=True)
    for _ in range(draw(st.integers(1, 8))):
        if n > 1 and draw(st.booleans()):
            i, j = draw(st.lists(st.sampled_from(qs), min_size=2, max_size=2, unique=True))
            b.gate(draw(st.sampled_from(("CNOT", "CZ"))), i, j)
        else:
            b.gate(draw(st.sampled_from(("H", "S", "X", "Y", "Z"))), draw(st.sampled_from(qs)))
    return b.build()


@settings(max_examples=50, deadline=None)
@given(gate_circuits(), st.integers(0, 2**31 - 1))
def test_state_evolution_matches_explicit_matrices(c, seed):
    rng = np.random.default_rng(seed)
    D = int(np.prod(c.dims))
    psi = rng.normal(size=D) + 1j * rng.normal(size=D)
    psi /= np.linalg.norm(psi)
    expected = psi
    for loc in sorted(c.locations, key=lambda loc: loc.timestep):
        expected = full_operator(loc, c.dims) @ expected
    (br,) = run_branches(c, ExtendedState(psi, c.dims))
    order = np.argsort(br.qubits)
    got = np.transpose(br.state.tensor(), order).reshape(-1)
    assert np.allclose(got, expected, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(gate_circuits(), st.lists(st.integers(0, 2), min_size=3, max_size=3))
def test_leakage_weight_conserved_by_ideal_gates(c, levels):
    n = c.num_qubits
    psi = product_state([local_vector(3, {lv: 1, 0: 1} if lv == 2 else {lv: 1}) for lv in levels[:n]])
    (br,) = run_branches(c, psi)
    for q in range(n):
        assert leakage_weight(br.state, br.index(q)) == pytest.approx(leakage_weight(psi, q), abs=1e-12)
    assert all(loc.kind in (Kind.GATE1, Kind.GATE2) for loc in c.locations)
