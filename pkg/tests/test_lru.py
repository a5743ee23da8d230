import numpy as np
import pytest

from leakft.circuit import Kind
from leakft.dense import ExtendedState, channel_distance, fidelity, leakage_weight, local_vector, run_branches
from leakft.lru import (
    TELEPORT_R,
    broken_teleport_lru,
    coherent_lru_gadget,
    discarding_lru_gadget,
    ideal_lru_channel,
    ideal_lru_layer,
    leaked_input,
    lru_location_count,
    teleport_lru,
    verify_lru_contract,
)

INPUTS = {"0": {0: 1}, "1": {1: 1}, "+": {0: 1, 1: 1}, "i": {0: 1, 1: 1j}}


def test_teleport_lru_has_r_locations():
    g = teleport_lru()
    assert TELEPORT_R == 6
    assert lru_location_count(g) == 6
    assert len(g.circuit.locations) == 6
    kinds = [loc.kind for loc in g.circuit.locations]
    assert kinds.count(Kind.PREP) == 2 and kinds.count(Kind.GATE2) == 2 and kinds.count(Kind.MEASURE) == 2
    assert g.circuit.depth == 4


@pytest.mark.parametrize("make", [teleport_lru, coherent_lru_gadget, discarding_lru_gadget])
@pytest.mark.parametrize("leak_dim", [1, 2])
def test_lru_contract(make, leak_dim):
    rep = verify_lru_contract(make(leak_dim))
    assert rep.passed, rep.to_dict()


def test_broken_lru_fails_identity_only():
    rep = verify_lru_contract(broken_teleport_lru())
    assert not rep.identity_ok
    assert rep.leak_ok


@pytest.mark.parametrize("leak_dim", [1, 2])
def test_teleport_channel_equals_discarding_lru(leak_dim):
    a = teleport_lru(leak_dim).channel()
    assert channel_distance(a, ideal_lru_channel(leak_dim)) < 1e-12
    assert a.is_cptp()


def test_coherent_lru_channel_equals_discarding_lru():
    assert channel_distance(coherent_lru_gadget().channel(), ideal_lru_channel()) < 1e-12


@pytest.mark.parametrize("name", list(INPUTS))
def test_branchwise_teleportation(name):
    g = teleport_lru()
    v = local_vector(3, INPUTS[name])
    brs = run_branches(g.circuit, ExtendedState(v, (3,)))
    assert len(brs) == 4
    assert sum(b.probability for b in brs) == pytest.approx(1.0)
    for br in brs:
        assert fidelity(br.state.amplitudes, v) >= 1 - 1e-10


def test_leaked_input_comes_out_in_system_space():
    g = teleport_lru()
    for br in run_branches(g.circuit, leaked_input()):
        assert leakage_weight(br.state, br.index(g.circuit.outputs[0])) <= 1e-12


def test_ideal_lru_layer_dims():
    layer = ideal_lru_layer(2)
    assert layer.dims_in == (3, 3)
    rho = np.zeros((9, 9))
    rho[8, 8] = 1
    out = layer.apply(rho)
    assert out[0, 0] == pytest.approx(1.0)
