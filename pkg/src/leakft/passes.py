"""LRU insertion, rectangle stretching and rectangle-local equivalence checks.

``insert_lrus`` replays a circuit and puts a teleportation LRU in front of
every input of every gate (not before preparations or measurements).  Each
gate together with the LRUs on its inputs forms an LRU-0-Rec.  ``stretch``
merges chains of consecutive rectangles and drops the LRUs between their
gates.

The correctness checks compare channels: a rectangle followed by the ideal
LRU against the ideal LRU followed by the ideal gate.  ``wave_reduce``
replaces each bad rectangle by the effective channel (ideal LRU after the
rectangle) at the position of its gates in the source circuit.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, CircuitBuilder, CircuitError, Kind, Location, Rectangle, build_circuit
from .dense import (
    GATES,
    ChannelMatrix,
    channel_of,
    embed_ideal_gate,
    leakage_in_image,
    location_operator,
    system_basis,
    unitary_channel,
)
from .lru import LRU_TAG, LruSites, add_teleport_lru, ideal_lru_layer
from .noise import leak_rotation, random_unitary

GATE_TAG = "gate"


@dataclass(frozen=True)
class RecEntry:
    """One LRU-0-Rec (a single gate) or LRU-0-StrRec (several gates).

    ``source_qubits`` are the source wires the rectangle acts on;
    ``qubits_in``/``qubits_out`` are the matching rewritten qubits before its
    first location and after its last gate.
    """

    name: str
    source_gates: tuple[int, ...]
    gates: tuple[int, ...]
    lrus: tuple[LruSites, ...]
    source_qubits: tuple[int, ...]
    qubits_in: tuple[int, ...]
    qubits_out: tuple[int, ...]

    @property
    def kind(self) -> str:
        return "strrec" if len(self.source_gates) > 1 else "rec"

    @property
    def locations(self) -> tuple[int, ...]:
        return tuple(sorted(self.gates + tuple(i for s in self.lrus for i in s.locations)))


@dataclass(frozen=True)
class RectangleMap:
    source: Circuit
    entries: tuple[RecEntry, ...]
    wire_map: tuple[int, ...]

    def entry_of_gate(self) -> dict[int, int]:
        return {g: k for k, e in enumerate(self.entries) for g in e.source_gates}

    def entry_of_location(self) -> dict[int, int]:
        return {i: k for k, e in enumerate(self.entries) for i in e.locations}

    def bad_entries(self, faults: Iterable[int]) -> set[int]:
        owner = self.entry_of_location()
        return {owner[i] for i in faults if i in owner}


def _is_rewritable_gate(loc: Location) -> bool:
    return loc.kind in (Kind.GATE1, Kind.GATE2)


def _rewrite(c: Circuit, groups: Sequence[Sequence[int]] | None) -> tuple[Circuit, RectangleMap]:
    if c.rects:
        raise CircuitError("LRU insertion expects a circuit without rectangle annotations")
    gates = [i for i, loc in enumerate(c.locations) if _is_rewritable_gate(loc)]
    group_of: dict[int, int] = {}
    glist: list[list[int]] = []
    for grp in groups or []:
        grp = sorted(grp)
        for g in grp:
            if g not in gates:
                raise CircuitError(f"location {g} is not a gate")
            if g in group_of:
                raise CircuitError(f"gate {g} appears in two groups")
            group_of[g] = len(glist)
        glist.append(grp)
    for g in gates:
        if g not in group_of:
            group_of[g] = len(glist)
            glist.append([g])

    b = CircuitBuilder()
    for q in range(c.num_qubits):
        b.qubit(input=q in c.inputs, leak_dim=c.leak_dims[q])
    cur = list(range(c.num_qubits))
    new_index: dict[int, int] = {}
    last_loc: dict[int, int] = {}
    acc: dict[int, dict] = {}
    order = sorted(range(len(c.locations)), key=lambda i: (c.locations[i].timestep, i))
    targets_of: dict[int, set[int]] = {}
    for op in c.classical:
        for s in op.sources:
            targets_of.setdefault(s, set()).update(op.targets)
    classical_at: dict[int, list] = {}
    for op in c.classical:
        classical_at.setdefault(c.classical_time(op), []).append(op)

    t_prev = None
    for i in order:
        loc = c.locations[i]
        if t_prev is not None and loc.timestep != t_prev:
            _emit_classical(b, classical_at.get(t_prev, []), new_index, cur)
        t_prev = loc.timestep
        if _is_rewritable_gate(loc):
            gid = group_of[i]
            info = acc.setdefault(gid, {"gates": [], "lrus": [], "sq": [], "qin": {}, "qout": {}})
            members = glist[gid]
            if i != members[0] and not any(last_loc.get(q) in members for q in loc.qubits):
                raise CircuitError(f"group {members} is not a chain of consecutive rectangles")
            for q in loc.qubits:
                inside = last_loc.get(q) in members
                if q not in info["qin"]:
                    info["sq"].append(q)
                    info["qin"][q] = cur[q]
                if not inside:
                    if q in info["qout"]:
                        raise CircuitError(f"group {members} re-enters wire {q}")
                    sites = add_teleport_lru(b, cur[q])
                    info["lrus"].append(sites)
                    cur[q] = sites.output
            idx = b.gate(loc.label, *[cur[q] for q in loc.qubits], tag=GATE_TAG)
            info["gates"].append(idx)
            for q in loc.qubits:
                info["qout"][q] = cur[q]
            info.setdefault("src", []).append(i)
        elif loc.kind is Kind.WAIT:
            idx = b.wait(cur[loc.qubits[0]], tag=loc.tag)
        elif loc.kind is Kind.PREP:
            idx = b.prep(cur[loc.qubits[0]], loc.label, tag=loc.tag)
        else:
            q = cur[loc.qubits[0]]
            tq = [cur[x] for x in targets_of.get(i, ())]
            at = max([b.ready(q)] + [b.ready(x) for x in tq])
            idx = b.measure(q, loc.label, tag=loc.tag, at=at)
        new_index[i] = idx
        for q in loc.qubits:
            last_loc[q] = i
    if t_prev is not None:
        _emit_classical(b, classical_at.get(t_prev, []), new_index, cur)

    entries = []
    for gid, members in enumerate(glist):
        info = acc[gid]
        sq = tuple(info["sq"])
        name = f"rec{gid}" if len(members) == 1 else f"strrec{gid}"
        entries.append(RecEntry(name, tuple(info["src"]), tuple(info["gates"]), tuple(info["lrus"]), sq,
                                tuple(info["qin"][q] for q in sq), tuple(info["qout"][q] for q in sq)))
    for e in entries:
        b.rect(e.name, e.kind, e.locations)
    for name, qs in c.blocks.items():
        b.block(name, [cur[q] for q in qs])
    b.set_outputs([cur[q] for q in c.outputs])
    out = b.build()
    return out, RectangleMap(c, tuple(entries), tuple(cur))


def _emit_classical(b: CircuitBuilder, ops, new_index, cur) -> None:
    for op in ops:
        b.classical(op.rule, [new_index[s] for s in op.sources], [cur[q] for q in op.targets], op.pauli, op.tag)


def insert_lrus(c: Circuit) -> tuple[Circuit, RectangleMap]:
    """Place a teleportation LRU before every input of every gate location."""
    return _rewrite(c, None)


def stretch(c: Circuit, rmap: RectangleMap, grouping: Sequence[Sequence[int]]) -> tuple[Circuit, RectangleMap]:
    """Merge groups of consecutive rectangles (indices into ``rmap.entries``) into stretched rectangles."""
    expected = len(rmap.source.locations) + sum(len(s.locations) for e in rmap.entries for s in e.lrus)
    if len(c.locations) != expected:
        raise CircuitError("circuit does not match its rectangle map")
    seen: set[int] = set()
    groups = []
    for grp in grouping:
        if not grp:
            continue
        src: list[int] = []
        for k in grp:
            if k in seen:
                raise CircuitError(f"rectangle {k} in two groups")
            seen.add(k)
            src.extend(rmap.entries[k].source_gates)
        groups.append(src)
    for k, e in enumerate(rmap.entries):
        if k not in seen:
            groups.append(list(e.source_gates))
    return _rewrite(rmap.source, groups)


# --- rectangle-local channels ------------------------------------------------


def extract(c: Circuit, locations: Iterable[int], inputs: Sequence[int], outputs: Sequence[int]) -> tuple[Circuit, dict[int, int]]:
    """Standalone sub-circuit on ``locations`` with the given input and output wires.

    Classical operations are kept when all their sources lie inside.  Returns
    the sub-circuit and the map from location indices of ``c`` to it.
    """
    locs = sorted(set(locations))
    inside = set(locs)
    touched: list[int] = list(inputs)
    for i in locs:
        for q in c.locations[i].qubits:
            if q not in touched:
                touched.append(q)
    for q in outputs:
        if q not in touched:
            touched.append(q)
    qmap = {q: k for k, q in enumerate(touched)}
    lmap = {i: k for k, i in enumerate(locs)}
    new_locs = [Location(c.locations[i].kind, c.locations[i].label, tuple(qmap[q] for q in c.locations[i].qubits),
                         c.locations[i].timestep, c.locations[i].tag) for i in locs]
    classical = [
        type(op)(op.rule, tuple(lmap[s] for s in op.sources), tuple(qmap[q] for q in op.targets), op.pauli, op.tag)
        for op in c.classical
        if all(s in inside for s in op.sources)
    ]
    sub = build_circuit(len(touched), [c.leak_dims[q] for q in touched], new_locs,
                        inputs=[qmap[q] for q in inputs], outputs=[qmap[q] for q in outputs], classical=classical)
    return sub, lmap


def rect_circuit(c: Circuit, rmap: RectangleMap, k: int) -> tuple[Circuit, dict[int, int]]:
    e = rmap.entries[k]
    return extract(c, e.locations, e.qubits_in, e.qubits_out)


def ideal_group_unitary(source: Circuit, gates: Sequence[int], wires: Sequence[int]) -> np.ndarray:
    """Ideal unitary of ``gates`` (in order) on ``wires`` of the source circuit."""
    dims = [source.dims[q] for q in wires]
    n = len(wires)
    D = int(np.prod(dims))
    u = np.eye(D, dtype=complex).reshape(dims + [D])
    for g in sorted(gates):
        loc = source.locations[g]
        ax = [list(wires).index(q) for q in loc.qubits]
        m = location_operator(loc, source.dims)
        local = [dims[a] for a in ax]
        k = len(ax)
        out = np.tensordot(m.reshape(local + local), u, axes=(list(range(k, 2 * k)), ax))
        u = np.moveaxis(out, list(range(k)), ax)
    del n
    return u.reshape(D, D)


@dataclass
class RecReport:
    equal: bool
    deviation: float
    output_leakage: float
    image_leakage: float
    effective: ChannelMatrix = field(repr=False)

    def to_dict(self) -> dict:
        return {"equal": self.equal, "deviation": self.deviation, "output_leakage": self.output_leakage,
                "image_leakage": self.image_leakage}


def check_rec_correctness(rec: Circuit, ideal_u: np.ndarray, faults: Mapping[int, np.ndarray] | None = None,
                          atol: float = 1e-10) -> RecReport:
    """Compare (rectangle then ideal LRU) with (ideal LRU then ideal gate).

    ``rec`` must have its data wires as inputs and outputs in matching
    order.  ``effective`` is the left-hand side, the faulty gate seen by the
    rest of the circuit once an ideal LRU follows the rectangle.
    """
    n_in, n_out = len(rec.inputs), len(rec.outputs)
    raw = channel_of(rec, faults)
    lhs = ideal_lru_layer(n_out, rec.leak_dims[rec.outputs[0]]) @ raw
    rhs = unitary_channel(ideal_u, raw.dims_out) @ ideal_lru_layer(n_in, rec.leak_dims[rec.inputs[0]])
    dev = float(np.max(np.abs(lhs.matrix - rhs.matrix)))
    sysb = system_basis(raw.dims_in)
    return RecReport(dev <= atol, dev, leakage_in_image(raw, sysb), leakage_in_image(lhs, sysb), lhs)


def check_entry(c: Circuit, rmap: RectangleMap, k: int, faults: Mapping[int, np.ndarray] | None = None,
                atol: float = 1e-10) -> RecReport:
    """check_rec_correctness for rectangle ``k`` with faults given at locations of ``c``."""
    sub, lmap = rect_circuit(c, rmap, k)
    e = rmap.entries[k]
    local = {lmap[i]: m for i, m in (faults or {}).items() if i in lmap}
    return check_rec_correctness(sub, ideal_group_unitary(rmap.source, e.source_gates, e.source_qubits), local, atol)


# --- wave reduction -------------------------------------------------------


@dataclass
class WaveResult:
    """The source circuit with an effective channel at every bad rectangle."""

    source: Circuit
    rmap: RectangleMap
    annotations: dict[int, ChannelMatrix]

    @property
    def annotated_gates(self) -> set[int]:
        return {g for k in self.annotations for g in self.rmap.entries[k].source_gates}


def wave_reduce(c: Circuit, rmap: RectangleMap, faults: Mapping[int, np.ndarray]) -> WaveResult:
    """Map faults in the rewritten circuit to effective faulty gates of the source circuit.

    Exact when no bad rectangle whose own LRU is faulty receives a leaked
    input from an upstream bad rectangle; otherwise the effective channels
    describe the behaviour on system-space inputs only.
    """
    bad = rmap.bad_entries(faults)
    stray = [i for i in faults if i not in rmap.entry_of_location()]
    if stray:
        raise CircuitError(f"faults outside every rectangle: {sorted(stray)}")
    ann = {k: check_entry(c, rmap, k, faults).effective for k in sorted(bad)}
    return WaveResult(rmap.source, rmap, ann)


def _apply_local_channel(rho: np.ndarray, s: ChannelMatrix, axes: Sequence[int], n: int) -> np.ndarray:
    k = len(axes)
    din, dout = list(s.dims_in), list(s.dims_out)
    m = s.matrix.reshape(dout + dout + din + din)
    ax = list(axes) + [n + a for a in axes]
    out = np.tensordot(m, rho, axes=(list(range(2 * k, 4 * k)), ax))
    return np.moveaxis(out, list(range(2 * k)), ax)


def source_channel(src: Circuit, rmap: RectangleMap | None = None,
                   overrides: Mapping[int, ChannelMatrix] | None = None) -> ChannelMatrix:
    """Channel of a gate-only source circuit, with rectangle ``k`` replaced by ``overrides[k]``."""
    if any(loc.kind in (Kind.PREP, Kind.MEASURE) for loc in src.locations):
        raise CircuitError("source channels are defined for gate-only circuits")
    if list(src.inputs) != list(range(src.num_qubits)) or src.num_qubits > 3:
        raise CircuitError("source channel needs all of at most 3 qubits as inputs")
    overrides = dict(overrides or {})
    n = src.num_qubits
    dims = list(src.dims)
    D = int(np.prod(dims))
    rho = np.eye(D * D, dtype=complex).reshape(dims + dims + [D * D])
    owner = rmap.entry_of_gate() if rmap else {}
    done: set[int] = set()
    for g in sorted(range(len(src.locations)), key=lambda i: (src.locations[i].timestep, i)):
        k = owner.get(g)
        if k is not None and k in overrides:
            if k in done:
                continue
            done.add(k)
            e = rmap.entries[k]
            rho = _apply_local_channel(rho, overrides[k], list(e.source_qubits), n)
            continue
        loc = src.locations[g]
        u = location_operator(loc, src.dims)
        rho = _apply_local_channel(rho, unitary_channel(u, [dims[q] for q in loc.qubits]), list(loc.qubits), n)
    s = rho.reshape(D * D, D * D)
    return ChannelMatrix(s, tuple(dims), tuple(dims))


def wave_deviation(c: Circuit, result: WaveResult, faults: Mapping[int, np.ndarray]) -> float:
    """Max entry difference, on system-space inputs, between the faulty rewritten
    circuit followed by ideal LRUs and the source circuit with effective faults."""
    lhs = ideal_lru_layer(len(c.outputs), c.leak_dims[c.outputs[0]]) @ channel_of(c, faults)
    rhs = source_channel(result.source, result.rmap, result.annotations)
    sysb = system_basis(lhs.dims_in)
    return float(np.max(np.abs(lhs.restrict_inputs(sysb) - rhs.restrict_inputs(sysb))))


# --- fault menus -------------------------------------------------------------


def single_fault_menu(c: Circuit, location: int, rng: np.random.Generator, n_random: int = 1) -> list[np.ndarray]:
    """Concrete faults for one location: leakage rotations, bit flips and random unitaries.

    Gate faults replace the ideal operation; preparation faults follow it and
    measurement faults precede it, so those are given as bare perturbations.
    """
    loc = c.locations[location]
    dims = [c.dims[q] for q in loc.qubits]
    D = int(np.prod(dims))
    base = location_operator(loc, c.dims) if loc.is_gate else np.eye(D, dtype=complex)
    menu = []
    for pos, d in enumerate(dims):
        for single in (leak_rotation(np.pi / 2, d) if d > 2 else None, embed_ideal_gate(GATES["X"], (d,)).matrix):
            if single is None:
                continue
            ops = [np.eye(x, dtype=complex) for x in dims]
            ops[pos] = single
            full = ops[0]
            for o in ops[1:]:
                full = np.kron(full, o)
            menu.append(full @ base)
    for _ in range(n_random):
        menu.append(random_unitary(D, rng))
    return menu
