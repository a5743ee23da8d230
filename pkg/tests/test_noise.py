import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakft.circuit import CircuitBuilder
from leakft.dense import CapacityError, GATES, embed_ideal_gate, opnorm
from leakft.noise import (
    LocationHamiltonians,
    NoisyCircuit,
    decompose_RL,
    epsilon_bound,
    fault_operator,
    fault_path_operator,
    ideal_circuit_hams,
    ideal_hamiltonian,
    ideal_unitary,
    is_hermitian,
    leak_rotation,
    location_unitary,
    random_hermitian,
    random_location_hams,
    random_unitary,
    zero_faults,
)


def small_circuit():
    b = CircuitBuilder()
    q0, q1 = b.qubits(2, input=True)
    b.gate("H", q0)
    b.gate("CNOT", q0, q1)
    b.wait(q1)
    return b.build()


def random_noisy(c, rng, bath_dim=1, reg=0.02, leak=0.02):
    hams = {}
    for i, loc in enumerate(c.locations):
        dims = [c.dims[q] for q in loc.qubits]
        hams[i] = random_location_hams(dims, rng, reg=reg, leak=leak, bath_dim=bath_dim)
    return NoisyCircuit(c, hams)


def test_ideal_hamiltonian_generates_gate():
    u = embed_ideal_gate(GATES["CNOT"]).matrix
    h = ideal_hamiltonian(u)
    assert is_hermitian(h)
    assert np.allclose(ideal_unitary(zero_faults(h, (3, 3))).matrix, u, atol=1e-10)


def test_ideal_circuit_hams_have_no_faults():
    c = small_circuit()
    nc = NoisyCircuit(c, ideal_circuit_hams(c))
    assert nc.epsilon() == (0.0, 0.0, 0.0)
    for i in range(len(c.locations)):
        assert opnorm(nc.location_ops(i)[1]) < 1e-10


def test_block_structure_validation():
    rng = np.random.default_rng(0)
    h = random_hermitian(3, 1.0, rng)
    z = np.zeros((3, 3))
    with pytest.raises(ValueError):
        LocationHamiltonians(z, h, z, (3,))
    with pytest.raises(ValueError):
        LocationHamiltonians(z, z, h, (3,))
    with pytest.raises(ValueError):
        LocationHamiltonians(np.ones((3, 3)) * 1j, z, z, (3,))


def test_random_hams_have_prescribed_norms():
    rng = np.random.default_rng(1)
    h = random_location_hams((3, 3), rng, reg=0.03, leak=0.05, bath_dim=2)
    assert opnorm(h.h_regular) == pytest.approx(0.03)
    assert opnorm(h.h_leak) == pytest.approx(0.05)
    eps = epsilon_bound([h])
    assert eps[0] == pytest.approx(0.06) and eps[1] == pytest.approx(0.1)
    assert LocationHamiltonians.from_dict(h.to_dict()).h_leak == pytest.approx(h.h_leak)


def test_fault_operator_norm_within_half_epsilon():
    rng = np.random.default_rng(2)
    h = random_location_hams((3,), rng, reg=0.04, leak=0.01)
    e, n = fault_operator(location_unitary(h), ideal_unitary(h))
    assert n == pytest.approx(opnorm(e))
    assert n <= epsilon_bound([h])[2] / 2 + 1e-12


def test_decompose_rl_reassembles():
    rng = np.random.default_rng(3)
    op = random_unitary(3, rng)
    r, l, rest = decompose_RL(op)
    assert np.allclose(r.matrix + l.matrix + rest, op)
    assert np.allclose(r.A, op[:2, :2])
    assert np.allclose(l.B, op[2:, :2]) and np.allclose(l.C, op[:2, 2:])


def test_leak_rotation_moves_one_into_leakage():
    u = leak_rotation(np.pi / 2)
    assert abs(u[2, 1]) == pytest.approx(1.0)
    assert u[0, 0] == pytest.approx(1.0)


def test_fault_path_capacity():
    b = CircuitBuilder()
    qs = b.qubits(4, input=True)
    for q in qs:
        b.gate("H", q)
    c = b.build()
    with pytest.raises(CapacityError):
        NoisyCircuit(c, ideal_circuit_hams(c))


def test_fault_path_module_function_matches_method():
    rng = np.random.default_rng(4)
    nc = random_noisy(small_circuit(), rng)
    a, na = fault_path_operator(nc.circuit, nc.hams, [0, 2])
    b, nb = nc.fault_path_operator([0, 2])
    assert np.allclose(a, b) and na == pytest.approx(nb)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([1, 2]), st.floats(0.001, 0.2), st.floats(0.0, 0.2))
def test_fault_paths_bounded_and_reassemble(seed, bath, reg, leak):
    rng = np.random.default_rng(seed)
    nc = random_noisy(small_circuit(), rng, bath, reg, leak)
    eps = nc.epsilon()[2]
    n = len(nc.circuit.locations)
    for k in range(1, n + 1):
        for fs in itertools.combinations(range(n), k):
            assert nc.fault_path_operator(fs)[1] <= eps**k + 1e-12
    assert np.max(np.abs(nc.fault_path_sum() - nc.noisy_evolution())) <= 1e-10
