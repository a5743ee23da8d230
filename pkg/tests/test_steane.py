import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakft.circuit import Kind
from leakft.codes import (
    FULL,
    HAMMING,
    N,
    coset_weight_tables,
    decode_logical,
    hamming_correct,
    in_even_code,
    mask,
    parity,
    steane_code,
    syndrome,
)
from leakft.dense import GATES, embed_ideal_gate, run_branches
from leakft.lru import TELEPORT_R
from leakft.steane import GADGETS, encoder, gadget_counts, get_gadget, golden_counts


def test_hamming_columns_are_binary_positions():
    for j in range(N):
        col = HAMMING[:, j]
        assert int(col[0]) * 4 + int(col[1]) * 2 + int(col[2]) == j + 1


def test_syndrome_oracle():
    for m in range(1 << N):
        bits = [m >> j & 1 for j in range(N)]
        s = (HAMMING @ np.array(bits)) % 2
        assert syndrome(m) == int(s[0]) * 4 + int(s[1]) * 2 + int(s[2])


def test_steane_code_parameters():
    code = steane_code()
    assert code.num_generators == 6
    for a, b in itertools.combinations(code.stabilizers, 2):
        assert code.commutes(a, b)
    assert not code.commutes(code.logical_x, code.logical_z)
    assert code.distance() == 3


def test_even_code_has_eight_words():
    words = [m for m in range(1 << N) if in_even_code([m >> j & 1 for j in range(N)])]
    assert len(words) == 8
    assert all(parity(w) == 0 and syndrome(w) == 0 for w in words)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 7), st.integers(0, 1), st.integers(-1, N - 1))
def test_decode_corrects_single_flips(word_index, logical, flip):
    evens = [m for m in range(1 << N) if syndrome(m) == 0 and parity(m) == 0]
    m = evens[word_index] ^ (FULL if logical else 0)
    if flip >= 0:
        m ^= 1 << flip
    bits = [m >> j & 1 for j in range(N)]
    assert decode_logical(bits) == logical
    assert syndrome(hamming_correct(m)) == 0
    assert mask(bits) == m


def test_coset_weights():
    fixed, anyl = coset_weight_tables()
    assert fixed[0, 0] == 0
    assert fixed[FULL, 0] == 3
    assert anyl[FULL, 0] == 0
    for j in range(N):
        assert fixed[1 << j, 0] == 1 and fixed[0, 1 << j] == 1 and fixed[1 << j, 1 << j] == 1


def _pauli_expectation(state, paulis):
    """<psi| P_0 x ... x P_n |psi> on qutrit wires, with embedded single-qubit Paulis."""
    t = state.tensor()
    for q, p in enumerate(paulis):
        if p == "I":
            continue
        m = embed_ideal_gate(GATES[p], 3).matrix
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [q])), 0, q)
    return complex(np.vdot(state.tensor().reshape(-1), t.reshape(-1)))


@pytest.mark.parametrize("which,logical", [("zero", "Z"), ("plus", "X")])
def test_encoder_output_is_stabilized(which, logical):
    g = encoder(which)
    (br,) = run_branches(g.circuit)
    order = [br.index(q) for q in g.out_blocks[0]]
    rows = [[int(b) for b in row] for row in HAMMING]
    for row in rows:
        for p in ("X", "Z"):
            ps = ["I"] * N
            for j, b in enumerate(row):
                if b:
                    ps[order[j]] = p
            assert _pauli_expectation(br.state, ps) == pytest.approx(1.0)
    ps = ["I"] * N
    for j in range(N):
        ps[order[j]] = logical
    assert _pauli_expectation(br.state, ps) == pytest.approx(1.0)


def test_encoder_shape():
    g = encoder("zero")
    c = gadget_counts(g)
    assert c["locations"] == 18 and c["preps"] == 7 and c["gates"] == 9 and c["waits"] == 2


@pytest.mark.parametrize("name,loc", [
    ("verified-prep-zero", 57),
    ("steane-ec", 142),
    ("knill-ec", 142),
    ("cnot-exrec", 575),
    ("knill-ec-lru", 310),
    ("steane-ec-lru", 352),
    ("cnot-exrec-lru", 1247),
    ("cnot-exrec-lru-steane", 1415),
    ("verified-prep-zero-lru", 141),
])
def test_location_counts(name, loc):
    assert get_gadget(name).num_locations == loc


def test_lru_and_strrec_counts():
    k = get_gadget("knill-ec-lru")
    s = get_gadget("steane-ec-lru")
    assert (k.num_lrus, k.num_strrecs) == (28, 11)
    assert (s.num_lrus, s.num_strrecs) == (35, 11)
    x = get_gadget("cnot-exrec-lru")
    assert x.num_lrus == 112 and len(x.circuit.rects) == 51
    assert x.num_locations == 4 * 310 + 7
    assert get_gadget("verified-prep-zero-lru").num_strrecs == 9


def test_lru_locations_come_in_teleport_blocks():
    c = get_gadget("cnot-exrec-lru").circuit
    tagged = [loc for loc in c.locations if loc.tag == "lru"]
    assert len(tagged) % TELEPORT_R == 0
    assert sum(1 for loc in tagged if loc.kind is Kind.MEASURE) == 2 * len(tagged) // TELEPORT_R


def test_golden_manifest_matches_builders():
    golden = golden_counts()
    assert set(golden) == set(GADGETS)
    for name, counts in golden.items():
        assert gadget_counts(get_gadget(name)) == counts, name


def test_rect_names_are_unique():
    c = get_gadget("cnot-exrec-lru").circuit
    names = [r.name for r in c.rects]
    assert len(names) == len(set(names))
    owner = c.rect_of()
    assert len(owner) == sum(len(r.locations) for r in c.rects)


def test_unknown_gadget():
    with pytest.raises(KeyError):
        get_gadget("nope")
