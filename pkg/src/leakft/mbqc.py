"""Graph-state computation in standard form with leakage.

A basic unit simulates (Ux(phi1) Uz(theta1) x Ux(phi2) Uz(theta2)) CZ on two
wires.  Per wire the input node i is joined to a chain i - a - o of fresh |+>
nodes.  Measuring i at -theta and then a at -phi (sign flipped by the outcome
of i) leaves X^{s_a} Z^{s_i} Ux(phi) Uz(theta) on o.  Because every output
is a freshly prepared node, teleportation doubles as leakage reduction.

Measurements follow the usual adaptive convention: node v is measured in the
eigenbasis of cos(w) X + sin(w) Y with w = (-1)^s * angle + t * pi, where s
and t are parities of earlier outcomes (``s_domain`` and ``t_domain``).
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .dense import (
    CZ,
    MAX_STATE_QUBITS,
    CapacityError,
    ExtendedState,
    H,
    _apply_tensor,
    embed_ideal_gate,
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.diag([1, -1]).astype(complex)


def uz(theta: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * theta)])


def ux(phi: float) -> np.ndarray:
    return H @ uz(phi) @ H


@dataclass(frozen=True)
class Measurement:
    node: int
    angle: float
    s_domain: frozenset[int] = frozenset()
    t_domain: frozenset[int] = frozenset()

    def actual(self, outcomes: Mapping[int, int]) -> float:
        s = sum(outcomes[v] for v in self.s_domain) & 1
        t = sum(outcomes[v] for v in self.t_domain) & 1
        return (-1) ** s * self.angle + t * math.pi


@dataclass(frozen=True)
class Unit:
    """Bookkeeping for one basic unit: its CZ and the two teleportation chains (i, a, o)."""

    cz: tuple[int, int]
    chains: tuple[tuple[int, int, int], tuple[int, int, int]]
    angles: tuple[float, float, float, float]


@dataclass
class GraphPattern:
    nodes: list[int]
    inputs: list[int]
    outputs: list[int]
    edges: list[tuple[int, int]]
    schedule: list[Measurement]
    byproducts: dict[int, tuple[frozenset[int], frozenset[int]]]
    units: list[Unit] = field(default_factory=list)
    leak_dim: int = 1

    def __post_init__(self):
        measured = [m.node for m in self.schedule]
        if len(set(measured)) != len(measured):
            raise ValueError("a node is measured twice")
        if set(measured) | set(self.outputs) != set(self.nodes) or set(measured) & set(self.outputs):
            raise ValueError("every non-output node must be measured exactly once")
        seen: set[int] = set()
        for m in self.schedule:
            if not (m.s_domain | m.t_domain) <= seen:
                raise ValueError(f"measurement of {m.node} depends on a later outcome")
            seen.add(m.node)

    @property
    def dims(self) -> dict[int, int]:
        return {v: 2 + self.leak_dim for v in self.nodes}

    def target_unitary(self) -> np.ndarray:
        """The two-qubit gate the pattern simulates, as a product over its units."""
        u = np.eye(4, dtype=complex)
        for unit in self.units:
            t1, p1, t2, p2 = unit.angles
            u = np.kron(ux(p1) @ uz(t1), ux(p2) @ uz(t2)) @ CZ @ u
        return u

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "edges": [list(e) for e in self.edges],
            "schedule": [{"node": m.node, "angle": m.angle, "s_domain": sorted(m.s_domain),
                          "t_domain": sorted(m.t_domain)} for m in self.schedule],
            "byproducts": {str(v): {"x": sorted(x), "z": sorted(z)} for v, (x, z) in self.byproducts.items()},
            "units": [{"cz": list(u.cz), "chains": [list(c) for c in u.chains], "angles": list(u.angles)}
                      for u in self.units],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def basic_unit(theta1: float, phi1: float, theta2: float, phi2: float, leak_dim: int = 1) -> GraphPattern:
    """Six nodes: inputs 0 and 1, chains 0-2-4 and 1-3-5, outputs 4 and 5."""
    chains = ((0, 2, 4), (1, 3, 5))
    edges = [(0, 1)]
    schedule = []
    byproducts = {}
    for (i, a, o), (theta, phi) in zip(chains, ((theta1, phi1), (theta2, phi2))):
        edges += [(i, a), (a, o)]
        schedule.append(Measurement(i, -theta))
        schedule.append(Measurement(a, -phi, frozenset({i})))
        byproducts[o] = (frozenset({a}), frozenset({i}))
    unit = Unit((0, 1), chains, (theta1, phi1, theta2, phi2))
    return GraphPattern(list(range(6)), [0, 1], [4, 5], edges, schedule, byproducts, [unit], leak_dim)


def compose_units(a: GraphPattern, b: GraphPattern, wiring: Mapping[int, int] | None = None) -> GraphPattern:
    """Run ``b`` after ``a``; ``wiring`` maps outputs of a to inputs of b (default: in order).

    The byproducts of a are pushed through b's CZs and folded into the
    domains of b's measurements (X flips the angle sign, Z adds pi).
    """
    if not b.nodes:
        return a
    wiring = dict(wiring) if wiring is not None else dict(zip(a.outputs, b.inputs))
    if sorted(wiring) != sorted(a.outputs) or sorted(wiring.values()) != sorted(b.inputs):
        raise ValueError("wiring must map every output of the first pattern to an input of the second")
    back = {bi: ao for ao, bi in wiring.items()}
    offset = max(a.nodes) + 1
    ren = {v: back.get(v, v + offset) for v in b.nodes}
    frame: dict[int, list[set[int]]] = {ren[v]: [set(), set()] for v in b.nodes}
    for ao in a.outputs:
        x, z = a.byproducts.get(ao, (frozenset(), frozenset()))
        frame[ao] = [set(x), set(z)]
    edges = [(ren[u], ren[v]) for u, v in b.edges]
    for u, v in edges:
        # X on one end of a CZ becomes X there and Z on the other end
        xu, xv = set(frame[u][0]), set(frame[v][0])
        frame[v][1] ^= xu
        frame[u][1] ^= xv
    schedule = list(a.schedule)
    for m in b.schedule:
        node = ren[m.node]
        s = {ren[v] for v in m.s_domain} ^ frame[node][0]
        t = {ren[v] for v in m.t_domain} ^ frame[node][1]
        schedule.append(Measurement(node, m.angle, frozenset(s), frozenset(t)))
    byproducts = {}
    for o in b.outputs:
        x, z = b.byproducts.get(o, (frozenset(), frozenset()))
        byproducts[ren[o]] = (frozenset({ren[v] for v in x} ^ frame[ren[o]][0]),
                              frozenset({ren[v] for v in z} ^ frame[ren[o]][1]))
    units = list(a.units) + [
        Unit((ren[u.cz[0]], ren[u.cz[1]]), tuple(tuple(ren[v] for v in c) for c in u.chains), u.angles)
        for u in b.units
    ]
    nodes = list(a.nodes) + [ren[v] for v in b.nodes if v not in back]
    return GraphPattern(nodes, list(a.inputs), [ren[o] for o in b.outputs], list(a.edges) + edges, schedule,
                        byproducts, units, a.leak_dim)


# --- dense simulation -------------------------------------------------------


@dataclass
class PatternBranch:
    outcomes: dict[int, int]
    probability: float
    state: ExtendedState  # over the outputs, in pattern order
    leakage: list[float]
    raw: dict[int, int] = field(default_factory=dict)

    @property
    def key(self) -> tuple:
        return tuple(sorted(self.raw.items()))

    def corrected(self, p: GraphPattern) -> ExtendedState:
        """Output state with the byproduct frame undone (system levels only; leaked levels untouched)."""
        t = self.state.tensor()
        dims = self.state.dims
        for k, o in enumerate(p.outputs):
            x, z = p.byproducts.get(o, (frozenset(), frozenset()))
            if sum(self.outcomes[v] for v in x) & 1:
                t = _apply_tensor(t, embed_ideal_gate(PAULI_X, (dims[k],)).matrix, [k], dims)
            if sum(self.outcomes[v] for v in z) & 1:
                t = _apply_tensor(t, embed_ideal_gate(PAULI_Z, (dims[k],)).matrix, [k], dims)
        return ExtendedState(t.reshape(-1), dims)


Element = tuple  # ("prep", v) | ("edge", (u, v)) | ("meas", v)


def _basis_change(angle: float, d: int) -> np.ndarray:
    return embed_ideal_gate(H @ uz(-angle), (d,)).matrix


def simulate_pattern(p: GraphPattern, input_state: ExtendedState | None = None,
                     faults: Mapping[Element, np.ndarray] | None = None, prune: float = 1e-24) -> list[PatternBranch]:
    """All outcome branches of the pattern (leaked outcomes read as 0).

    Faults follow the circuit convention: after a preparation, in place of a
    CZ, before a measurement.
    """
    if len(p.nodes) > MAX_STATE_QUBITS:
        raise CapacityError(f"{len(p.nodes)} nodes exceed the dense cap of {MAX_STATE_QUBITS}")
    faults = dict(faults or {})
    dims = p.dims
    order = list(p.inputs) + [v for v in p.nodes if v not in p.inputs]
    pos = {v: k for k, v in enumerate(order)}
    ds = [dims[v] for v in order]
    if input_state is None:
        input_state = ExtendedState(np.eye(int(np.prod(ds[:len(p.inputs)])))[0], tuple(ds[:len(p.inputs)]))
    psi = input_state.amplitudes
    for v in order[len(p.inputs):]:
        d = dims[v]
        plus = np.zeros(d, dtype=complex)
        plus[:2] = 1 / np.sqrt(2)
        if ("prep", v) in faults:
            plus = faults[("prep", v)] @ plus
        psi = np.kron(psi, plus)
    t = psi.reshape(ds)
    cz = embed_ideal_gate(CZ, (3, 3)).matrix if all(d == 3 for d in ds) else None
    for u, v in p.edges:
        op = faults.get(("edge", (u, v)))
        if op is None:
            op = cz if cz is not None else embed_ideal_gate(CZ, (dims[u], dims[v])).matrix
        t = _apply_tensor(t, op, [pos[u], pos[v]], ds)
    branches = [({}, t)]
    for m in p.schedule:
        k = pos[m.node]
        new = []
        for outcomes, tb in branches:
            if ("meas", m.node) in faults:
                tb = _apply_tensor(tb, faults[("meas", m.node)], [k], ds)
            tb = _apply_tensor(tb, _basis_change(m.actual(outcomes), ds[k]), [k], ds)
            for level in range(ds[k]):
                sl = [slice(None)] * len(ds)
                sl[k] = level
                proj = np.zeros_like(tb)
                proj[tuple(sl)] = tb[tuple(sl)]
                if np.sum(np.abs(proj) ** 2) > prune:
                    new.append(({**outcomes, m.node: level if level < 2 else 0, ("raw", m.node): level}, proj))
        branches = new
    out = []
    keep = [pos[o] for o in p.outputs]
    for outcomes, tb in branches:
        sl = tuple(slice(None) if k in keep else int(outcomes[("raw", order[k])]) for k in range(len(ds)))
        red = tb[sl]
        kept = sorted(keep)
        red = np.transpose(red, [kept.index(k) for k in keep])
        prob = float(np.sum(np.abs(red) ** 2))
        st = ExtendedState(red.reshape(-1) / np.sqrt(prob), tuple(ds[k] for k in keep))
        leak = [float(np.sum(np.abs(np.take(red, range(2, ds[k]), axis=j)) ** 2)) / prob
                for j, k in enumerate(keep)]
        clean = {v: b for v, b in outcomes.items() if not isinstance(v, tuple)}
        raw = {v[1]: b for v, b in outcomes.items() if isinstance(v, tuple)}
        out.append(PatternBranch(clean, prob, st, leak, raw))
    return out


def _system_input(p: GraphPattern, levels: Sequence[int]) -> ExtendedState:
    d = 2 + p.leak_dim
    v = np.zeros((d,) * len(p.inputs), dtype=complex)
    v[tuple(levels)] = 1
    return ExtendedState(v.reshape(-1), (d,) * len(p.inputs))


def branch_maps(p: GraphPattern, faults: Mapping[Element, np.ndarray] | None = None) -> dict[tuple, np.ndarray]:
    """Per outcome branch, the byproduct-corrected linear map from system inputs to outputs."""
    n_in = len(p.inputs)
    cols = list(itertools.product((0, 1), repeat=n_in))
    maps: dict[tuple, np.ndarray] = {}
    for c, levels in enumerate(cols):
        for br in simulate_pattern(p, _system_input(p, levels), faults):
            vec = br.corrected(p).amplitudes * np.sqrt(br.probability)
            m = maps.setdefault(br.key, np.zeros((vec.size, len(cols)), dtype=complex))
            m[:, c] = vec
    return maps


def _system_rows(p: GraphPattern) -> np.ndarray:
    d = 2 + p.leak_dim
    idx = []
    for levels in itertools.product((0, 1), repeat=len(p.outputs)):
        idx.append(int(np.ravel_multi_index(levels, (d,) * len(p.outputs))))
    return np.array(idx)


@dataclass
class UnitReport:
    branches: int
    min_fidelity: float
    max_output_leakage: float
    leaked_branches: int

    @property
    def passed(self) -> bool:
        return self.min_fidelity >= 1 - 1e-10 and self.max_output_leakage <= 1e-12

    def to_dict(self) -> dict:
        return {**self.__dict__, "passed": self.passed}


def gate_fidelity(k: np.ndarray, v: np.ndarray) -> float:
    """|tr(V^dag K)|^2 / (tr(K^dag K) tr(V^dag V)): 1 iff K is proportional to V."""
    num = abs(np.trace(v.conj().T @ k)) ** 2
    den = np.real(np.trace(k.conj().T @ k)) * np.real(np.trace(v.conj().T @ v))
    return float(num / den) if den > 0 else 0.0


def verify_pattern(p: GraphPattern, seed: int = 7) -> UnitReport:
    """Branch-wise check against the target gate and leakage reduction on leaked inputs."""
    v = p.target_unitary() if len(p.inputs) == 2 else None
    rows = _system_rows(p)
    maps = branch_maps(p)
    fids = []
    for m in maps.values():
        if v is not None:
            fids.append(gate_fidelity(m[rows], v))
        # no amplitude may sit outside the output system space
        outside = np.delete(m, rows, axis=0)
        fids[-1] = fids[-1] if np.allclose(outside, 0, atol=1e-12) else 0.0
    leak_max, leaked_branches = 0.0, 0
    d = 2 + p.leak_dim
    rng = np.random.default_rng(seed)
    for w in range(len(p.inputs)):
        for level in range(2, d):
            # leaked wire w, a generic system state elsewhere
            vecs = []
            for u in range(len(p.inputs)):
                if u == w:
                    vec = np.zeros(d, dtype=complex)
                    vec[level] = 1
                else:
                    vec = np.zeros(d, dtype=complex)
                    vec[:2] = rng.normal(size=2) + 1j * rng.normal(size=2)
                    vec /= np.linalg.norm(vec)
                vecs.append(vec)
            psi = vecs[0]
            for vec in vecs[1:]:
                psi = np.kron(psi, vec)
            for br in simulate_pattern(p, ExtendedState(psi, (d,) * len(p.inputs))):
                leaked_branches += 1
                leak_max = max(leak_max, max(br.leakage))
    return UnitReport(len(maps), min(fids) if fids else 1.0, leak_max, leaked_branches)


def verify_unit(theta1: float, phi1: float, theta2: float, phi2: float) -> UnitReport:
    return verify_pattern(basic_unit(theta1, phi1, theta2, phi2))


# --- rectangle partition ----------------------------------------------------


def _chain_lru(chain: tuple[int, int, int]) -> frozenset:
    i, a, o = chain
    return frozenset({("prep", a), ("prep", o), ("edge", (i, a)), ("edge", (a, o)), ("meas", i), ("meas", a)})


def pattern_elements(p: GraphPattern) -> set:
    els = {("prep", v) for v in p.nodes if v not in p.inputs}
    els |= {("edge", tuple(e)) for e in p.edges}
    els |= {("meas", m.node) for m in p.schedule}
    return els


@dataclass
class ExRecPartition:
    """Recs: a CZ plus the teleportation chains after it; exRecs add the chains feeding the CZ."""

    recs: list[frozenset]
    exrecs: list[frozenset]
    lrus: dict[tuple[int, int], frozenset]
    preceding: list[list[tuple[int, int]]]

    def overlap(self, j: int, k: int) -> frozenset:
        return self.exrecs[j] & self.exrecs[k]

    def bad(self, faults: Iterable[Element]) -> list[bool]:
        f = set(faults)
        return [bool(e & f) for e in self.exrecs]

    def independent(self, j: int, k: int, faults: Iterable[Element]) -> bool:
        """Non-overlapping, or the earlier exRec stays bad without the shared chains."""
        shared = self.overlap(j, k)
        if not shared:
            return True
        first = min(j, k)
        return bool((self.exrecs[first] - shared) & set(faults))


def partition_exrecs(p: GraphPattern) -> ExRecPartition:
    if not p.units:
        raise ValueError("pattern is not built from basic units")
    lrus, recs, producer = {}, [], {}
    for k, u in enumerate(p.units):
        rec = {("edge", u.cz)}
        for w, chain in enumerate(u.chains):
            lrus[(k, w)] = _chain_lru(chain)
            rec |= lrus[(k, w)]
            producer[chain[2]] = (k, w)
        recs.append(frozenset(rec))
    covered = [e for r in recs for e in r]
    if len(covered) != len(set(covered)) or set(covered) != pattern_elements(p):
        raise ValueError("pattern is not built from basic units")
    exrecs, preceding = [], []
    for k, u in enumerate(p.units):
        prev = [producer[v] for v in u.cz if v in producer and producer[v][0] < k]
        preceding.append(prev)
        exrecs.append(frozenset(recs[k].union(*[lrus[x] for x in prev])))
    return ExRecPartition(recs, exrecs, lrus, preceding)


@dataclass
class GoodnessReport:
    bad: list[bool]
    independent: dict[tuple[int, int], bool]
    min_fidelity: float | None
    max_output_leakage: float

    def to_dict(self) -> dict:
        return {"bad": self.bad, "independent": {f"{j},{k}": v for (j, k), v in self.independent.items()},
                "min_fidelity": self.min_fidelity, "max_output_leakage": self.max_output_leakage}


def check_exrec_goodness(p: GraphPattern, part: ExRecPartition,
                         faults: Mapping[Element, np.ndarray] | None = None) -> GoodnessReport:
    """Classify exRecs and check the dense consequences.

    With no bad exRec the pattern must simulate its target gate branch by
    branch.  With faults, every branch is checked for output leakage: a fault
    inside a unit may corrupt its gate but must not leak past the teleported
    outputs unless it sits on an output preparation itself.
    """
    faults = dict(faults or {})
    unknown = set(faults) - pattern_elements(p)
    if unknown:
        raise ValueError(f"faults at elements not in the pattern: {sorted(map(str, unknown))}")
    bad = part.bad(faults)
    ind = {}
    for j, k in itertools.combinations(range(len(bad)), 2):
        if bad[j] and bad[k]:
            ind[(j, k)] = part.independent(j, k, faults)
    fid = None
    if not any(bad):
        v = p.target_unitary()
        rows = _system_rows(p)
        fid = min(gate_fidelity(m[rows], v) for m in branch_maps(p).values())
    leak = 0.0
    for levels in itertools.product((0, 1), repeat=len(p.inputs)):
        for br in simulate_pattern(p, _system_input(p, levels), faults):
            leak = max(leak, max(br.leakage))
    return GoodnessReport(bad, ind, fid, leak)


def leak_fault(theta: float = math.pi / 2, d: int = 3) -> np.ndarray:
    """Rotation moving |1> into the leakage level |2>."""
    from .noise import leak_rotation

    return leak_rotation(theta, d)
