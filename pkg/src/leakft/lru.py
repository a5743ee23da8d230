"""Leakage-reduction units.

The hardware LRU is one-bit teleportation: a Bell pair on two fresh ancillas,
a CNOT from the data into one half, and X/Z measurements of the data and that
half.  The Pauli correction X^{m_a} Z^{m_d} on the fresh output qubit is kept
in the classical frame.  A leaked data qubit is left behind and the output is
always a system-space state.

Two idealized LRUs serve the analysis: the discarding LRU (the channel that
keeps system inputs and replaces leaked ones by |0>) and a coherent invertible
version on data + two syndrome qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, CircuitBuilder, Kind
from .dense import (
    CNOT,
    CZ,
    ChannelMatrix,
    ExtendedOperator,
    H,
    basis_state,
    channel_of,
    embed_ideal_gate,
    identity_channel,
    leakage_in_image,
    partial_trace_channel,
    system_basis,
    tensor_channels,
)

TELEPORT_R = 6
LRU_TAG = "lru"


@dataclass(frozen=True)
class LruSites:
    """Where one LRU instance sits inside a larger circuit."""

    data: int
    output: int
    locations: tuple[int, ...]


def add_teleport_lru(b: CircuitBuilder, data: int, *, tag: str = LRU_TAG, good_bell: bool = True) -> LruSites:
    """Append a teleportation LRU on ``data``; returns the fresh output qubit.

    The ancillas are scheduled just in time, so no extra idle steps appear.
    """
    a = b.qubit()
    out = b.qubit()
    t = max(b.ready(data) - 2, 0)
    b.barrier([a, out], t)
    locs = [
        b.prep(a, "+" if good_bell else "0", tag=tag),
        b.prep(out, "0", tag=tag),
    ]
    locs.append(b.gate("CNOT", a, out, tag=tag))
    locs.append(b.gate("CNOT", data, a, tag=tag))
    m_d = b.measure(data, "X", tag=tag)
    m_a = b.measure(a, "Z", tag=tag)
    locs += [m_d, m_a]
    b.classical("parity", [m_a], [out], "X", tag=tag)
    b.classical("parity", [m_d], [out], "Z", tag=tag)
    return LruSites(data, out, tuple(locs))


@dataclass(frozen=True)
class LruGadget:
    """An LRU as a circuit (teleportation) or as an analysis-only map (ideal kinds)."""

    kind: str
    circuit: Circuit | None = None
    r: int = 0
    leak_dim: int = 1
    unitary: ExtendedOperator | None = field(default=None, repr=False)

    @property
    def dims(self) -> tuple[int, ...]:
        return (2 + self.leak_dim,)

    def channel(self) -> ChannelMatrix:
        """Channel from the data qubit to the output qubit (syndrome discarded)."""
        if self.kind == "ideal_discarding":
            return ideal_lru_channel(self.leak_dim)
        if self.kind == "ideal_coherent":
            d = 2 + self.leak_dim
            return partial_trace_channel(self.unitary.matrix, (d, d, d), keep=[2], inputs=[0])
        return channel_of(self.circuit)


def teleport_lru(leak_dim: int = 1, *, good_bell: bool = True) -> LruGadget:
    """Three-qubit teleportation LRU: data 0, Bell half 1, output 2."""
    b = CircuitBuilder(leak_dim)
    d = b.qubit(input=True)
    sites = add_teleport_lru(b, d, good_bell=good_bell)
    b.set_outputs([sites.output])
    c = b.build()
    return LruGadget("teleportation" if good_bell else "broken", c, TELEPORT_R, leak_dim)


def broken_teleport_lru(leak_dim: int = 1) -> LruGadget:
    """Control case: the Bell pair is replaced by |00>, so system inputs are not transmitted."""
    return teleport_lru(leak_dim, good_bell=False)


def ideal_lru_channel(leak_dim: int = 1) -> ChannelMatrix:
    """rho -> P rho P + tr(Q rho Q) |0><0| on one extended qubit."""
    d = 2 + leak_dim
    s = np.zeros((d, d, d, d), dtype=complex)
    for i in range(2):
        for j in range(2):
            s[i, j, i, j] = 1
    for k in range(2, d):
        s[0, 0, k, k] = 1
    return ChannelMatrix(s.reshape(d * d, d * d), (d,), (d,))


def ideal_lru_layer(n: int, leak_dim: int = 1) -> ChannelMatrix:
    return tensor_channels(*[ideal_lru_channel(leak_dim)] * n)


def extended_controlled_pauli(which: str, dims: tuple[int, int] | int = 3) -> ExtendedOperator:
    """Controlled-X or controlled-Z; identity whenever the control or target is leaked."""
    if which not in ("X", "Z"):
        raise ValueError("which must be 'X' or 'Z'")
    return embed_ideal_gate(CNOT if which == "X" else CZ, dims)


def _on(op: np.ndarray, qubits: list[int], dims: tuple[int, ...]) -> np.ndarray:
    n = len(dims)
    full = int(np.prod(dims))
    eye = np.eye(full, dtype=complex).reshape(list(dims) + [full])
    local = [dims[q] for q in qubits]
    k = len(qubits)
    out = np.tensordot(op.reshape(local + local), eye, axes=(list(range(k, 2 * k)), qubits))
    out = np.moveaxis(out, list(range(k)), qubits)
    del n
    return out.reshape(full, full)


def ideal_coherent_lru(leak_dim: int = 1) -> tuple[ExtendedOperator, ExtendedOperator]:
    """Coherent teleportation on (data, syndrome a, output b) and its inverse.

    With a and b starting in |0>: Bell pair on (a, b), Bell-basis rotation of
    (data, a), then controlled-X a->b and controlled-Z data->b.  The output
    qubit b carries the input for system inputs and is |0> for leaked ones.
    """
    d = 2 + leak_dim
    dims = (d, d, d)
    h = embed_ideal_gate(H, (d,)).matrix
    cx = extended_controlled_pauli("X", (d, d)).matrix
    cz = extended_controlled_pauli("Z", (d, d)).matrix
    steps = [
        _on(h, [1], dims),
        _on(cx, [1, 2], dims),
        _on(cx, [0, 1], dims),
        _on(h, [0], dims),
        _on(cx, [1, 2], dims),
        _on(cz, [0, 2], dims),
    ]
    u = np.eye(d**3, dtype=complex)
    for s in steps:
        u = s @ u
    op = ExtendedOperator(u, dims)
    return op, op.dagger


def coherent_lru_gadget(leak_dim: int = 1) -> LruGadget:
    u, _ = ideal_coherent_lru(leak_dim)
    return LruGadget("ideal_coherent", None, 0, leak_dim, u)


def discarding_lru_gadget(leak_dim: int = 1) -> LruGadget:
    return LruGadget("ideal_discarding", None, 0, leak_dim)


@dataclass
class LruReport:
    passed: bool
    identity_ok: bool
    leak_ok: bool
    identity_deviation: float
    max_output_leakage: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_lru_contract(g: LruGadget, atol: float = 1e-10) -> LruReport:
    """Check (a) identity on system inputs and (b) system-space output on leaked inputs."""
    ch = g.channel()
    d = ch.dims_in[0]
    sys_basis = system_basis((d,))
    restricted = ch.restrict_inputs(sys_basis)
    ident = identity_channel((d,)).restrict_inputs(sys_basis)
    dev = float(np.max(np.abs(restricted - ident)))
    leaked = np.eye(d)[:, 2:]
    leak = leakage_in_image(ch, leaked) if leaked.shape[1] else 0.0
    ok_a = dev <= atol
    ok_b = leak <= atol
    return LruReport(ok_a and ok_b, ok_a, ok_b, dev, leak)


def lru_location_count(g: LruGadget) -> int:
    """Fault-injectable locations (zero for the analysis-only kinds)."""
    if g.circuit is None:
        return 0
    return sum(1 for loc in g.circuit.locations if loc.kind is not Kind.WAIT)


def leaked_input(d: int = 3, level: int = 2):
    return basis_state((d,), (level,))
