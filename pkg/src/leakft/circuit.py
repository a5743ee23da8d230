"""Flat circuit representation over extended (system + leakage) qubits.

A circuit is an ordered list of locations (preparations, gates, waits and
measurements) with integer timesteps, a list of classical feed-forward
operations (Pauli-frame corrections and post-selection checks) and optional
grouping metadata: rectangles (LRU-0-Recs, stretched rectangles, encoders)
and named qubit blocks.  Everything is immutable once built; use
:class:`CircuitBuilder` to assemble circuits with ASAP scheduling.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace

DEFAULT_LEAK_DIM = 1


class CircuitError(ValueError):
    """Raised when a circuit violates a structural invariant."""


class Kind(str, enum.Enum):
    PREP = "prep"
    MEASURE = "measure"
    GATE1 = "gate1"
    GATE2 = "gate2"
    WAIT = "wait"


PREP_LABELS = ("0", "+")
MEASURE_LABELS = ("Z", "X")
GATE1_LABELS = ("I", "X", "Y", "Z", "H", "S", "SDG")
GATE2_LABELS = ("CNOT", "CZ")


@dataclass(frozen=True)
class Location:
    """One elementary operation: a preparation, gate, wait or measurement."""

    kind: Kind
    label: str
    qubits: tuple[int, ...]
    timestep: int = 0
    tag: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = 2 if self.kind is Kind.GATE2 else 1
        if len(self.qubits) != arity:
            raise CircuitError(f"{self.kind.value} location needs {arity} qubit(s), got {self.qubits}")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise CircuitError(f"two-qubit gate on repeated qubit {self.qubits}")
        if self.timestep < 0:
            raise CircuitError("negative timestep")

    @property
    def is_gate(self) -> bool:
        return self.kind in (Kind.GATE1, Kind.GATE2, Kind.WAIT)


@dataclass(frozen=True)
class ClassicalOp:
    """Classical processing of measurement outcomes.

    rule:
      ``parity``     apply ``pauli`` on every target if the XOR of the source bits is 1
      ``hamming``    apply ``pauli`` on ``targets[j]`` where j is the Hamming
                     syndrome position of the 7 source bits (Steane-style EC)
      ``logical``    apply ``pauli`` on all targets if the decoded logical bit of
                     the 7 source bits is 1 (teleported EC)
      ``postselect`` accept only if the 7 source bits lie in the even subcode
    """

    rule: str
    sources: tuple[int, ...]
    targets: tuple[int, ...] = ()
    pauli: str = "I"
    tag: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(int(s) for s in self.sources))
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        if self.rule not in ("parity", "hamming", "logical", "postselect"):
            raise CircuitError(f"unknown classical rule {self.rule!r}")
        if self.rule in ("hamming", "logical", "postselect") and len(self.sources) != 7:
            raise CircuitError(f"rule {self.rule} needs 7 source measurements")
        if self.rule == "hamming" and len(self.targets) != 7:
            raise CircuitError("hamming correction needs 7 targets")


@dataclass(frozen=True)
class Rectangle:
    """A named group of location indices (annotation only)."""

    name: str
    kind: str
    locations: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(sorted(int(i) for i in self.locations)))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    leak_dims: tuple[int, ...]
    locations: tuple[Location, ...] = ()
    inputs: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()
    classical: tuple[ClassicalOp, ...] = ()
    rects: tuple[Rectangle, ...] = ()
    blocks: Mapping[str, tuple[int, ...]] = field(default_factory=dict)

    @property
    def dims(self) -> tuple[int, ...]:
        """Full extended dimension (2 + leakage) of every qubit."""
        return tuple(2 + ell for ell in self.leak_dims)

    @property
    def depth(self) -> int:
        return 1 + max((loc.timestep for loc in self.locations), default=-1)

    def __len__(self) -> int:
        return len(self.locations)

    def measured_qubits(self) -> set[int]:
        return {loc.qubits[0] for loc in self.locations if loc.kind is Kind.MEASURE}

    def rect_of(self) -> dict[int, int]:
        """Map location index -> index of the rectangle containing it."""
        owner = {}
        for r, rect in enumerate(self.rects):
            for i in rect.locations:
                owner[i] = r
        return owner

    def classical_time(self, op: ClassicalOp) -> int:
        return max(self.locations[s].timestep for s in op.sources)

    def with_rects(self, rects: Iterable[Rectangle]) -> Circuit:
        return _validated(replace(self, rects=tuple(rects)))


def _validated(c: Circuit) -> Circuit:
    n = c.num_qubits
    if len(c.leak_dims) != n:
        raise CircuitError("leak_dims length must equal num_qubits")
    if any(ell < 0 for ell in c.leak_dims):
        raise CircuitError("negative leakage dimension")
    busy: set[tuple[int, int]] = set()
    for loc in c.locations:
        for q in loc.qubits:
            if not 0 <= q < n:
                raise CircuitError(f"qubit index {q} out of range")
            if (loc.timestep, q) in busy:
                raise CircuitError(f"overlap: qubit {q} used twice at timestep {loc.timestep}")
            busy.add((loc.timestep, q))
    inputs = set(c.inputs)
    alive: dict[int, str] = {q: "alive" for q in inputs}
    order = sorted(range(len(c.locations)), key=lambda i: (c.locations[i].timestep, i))
    for i in order:
        loc = c.locations[i]
        if loc.kind is Kind.PREP:
            q = loc.qubits[0]
            if q in alive:
                raise CircuitError(f"preparation on qubit {q} which is already in use")
            alive[q] = "alive"
            continue
        for q in loc.qubits:
            state = alive.get(q)
            if state is None:
                raise CircuitError(f"qubit {q} used before preparation and not declared an input")
            if state == "measured":
                raise CircuitError(f"use-after-measure on qubit {q}")
        if loc.kind is Kind.MEASURE:
            alive[loc.qubits[0]] = "measured"
    for op in c.classical:
        for s in op.sources:
            if not 0 <= s < len(c.locations) or c.locations[s].kind is not Kind.MEASURE:
                raise CircuitError(f"classical op source {s} is not a measurement")
        t = c.classical_time(op)
        for q in op.targets:
            if any(loc.timestep == t and q in loc.qubits for loc in c.locations):
                raise CircuitError(f"correction target {q} busy when its sources are measured")
    owner: dict[int, str] = {}
    for rect in c.rects:
        for i in rect.locations:
            if not 0 <= i < len(c.locations):
                raise CircuitError(f"rectangle {rect.name} names unknown location {i}")
            if i in owner:
                raise CircuitError(f"location {i} in rectangles {owner[i]} and {rect.name}")
            owner[i] = rect.name
    for name, qs in c.blocks.items():
        for q in qs:
            if not 0 <= q < n:
                raise CircuitError(f"block {name} names unknown qubit {q}")
    for q in c.outputs:
        if alive.get(q) != "alive":
            raise CircuitError(f"output qubit {q} is not live at the end of the circuit")
    return c


def normalize_timesteps(locations: Sequence[Location]) -> tuple[tuple[Location, ...], dict[int, int]]:
    """Compress timesteps to a contiguous range starting at 0."""
    used = sorted({loc.timestep for loc in locations})
    remap = {t: k for k, t in enumerate(used)}
    return tuple(replace(loc, timestep=remap[loc.timestep]) for loc in locations), remap


def build_circuit(
    num_qubits: int,
    dims: Sequence[int] | int | None = None,
    locations: Iterable[Location] = (),
    *,
    inputs: Iterable[int] = (),
    outputs: Iterable[int] | None = None,
    classical: Iterable[ClassicalOp] = (),
    rects: Iterable[Rectangle] = (),
    blocks: Mapping[str, Iterable[int]] | None = None,
) -> Circuit:
    """Validate and freeze a circuit.

    ``dims`` holds per-qubit leakage dimensions (an int applies to all qubits,
    default 1).  Timesteps are normalized to be contiguous from 0.  Raises
    :class:`CircuitError` on overlapping locations, use after measurement, or
    use of an unprepared qubit that is not a declared input.
    """
    if dims is None:
        dims = DEFAULT_LEAK_DIM
    if isinstance(dims, int):
        dims = [dims] * num_qubits
    locs, _ = normalize_timesteps([Location(**loc) if isinstance(loc, dict) else loc for loc in locations])
    measured = {loc.qubits[0] for loc in locs if loc.kind is Kind.MEASURE}
    touched = set(inputs) | {q for loc in locs for q in loc.qubits}
    if outputs is None:
        outputs = sorted(touched - measured)
    c = Circuit(
        num_qubits=num_qubits,
        leak_dims=tuple(int(d) for d in dims),
        locations=locs,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        classical=tuple(classical),
        rects=tuple(rects),
        blocks={k: tuple(v) for k, v in (blocks or {}).items()},
    )
    return _validated(c)


def count_locations(c: Circuit, where: Callable[[Location], bool] | None = None) -> int:
    """Number of locations satisfying ``where`` (all locations by default)."""
    if where is None:
        return len(c.locations)
    return sum(1 for loc in c.locations if where(loc))


def compose(a: Circuit, b: Circuit, wiring: Mapping[int, int] | None = None) -> Circuit:
    """Run ``b`` after ``a``.

    ``wiring`` maps input qubits of ``b`` onto live output qubits of ``a``;
    every other qubit of ``b`` receives a fresh index.  Timesteps of ``b`` are
    shifted past the depth of ``a``.  Rectangles and blocks of both circuits
    are carried over (blocks of ``b`` win on name clashes).
    """
    wiring = dict(wiring or {})
    measured_a = a.measured_qubits()
    for qb, qa in wiring.items():
        if qb not in b.inputs:
            raise CircuitError(f"wired qubit {qb} is not an input of the second circuit")
        if not 0 <= qa < a.num_qubits:
            raise CircuitError(f"wiring target {qa} out of range")
        if qa in measured_a:
            raise CircuitError(f"wiring onto measured qubit {qa}")
        if a.dims[qa] != b.dims[qb]:
            raise CircuitError(f"dimension mismatch wiring {qb}->{qa}")
    qmap: dict[int, int] = {}
    nxt = a.num_qubits
    for q in range(b.num_qubits):
        if q in wiring:
            qmap[q] = wiring[q]
        else:
            qmap[q] = nxt
            nxt += 1
    leak = list(a.leak_dims) + [0] * (nxt - a.num_qubits)
    for q in range(b.num_qubits):
        leak[qmap[q]] = b.leak_dims[q]
    shift = a.depth
    offset = len(a.locations)
    locs = list(a.locations) + [
        replace(loc, qubits=tuple(qmap[q] for q in loc.qubits), timestep=loc.timestep + shift)
        for loc in b.locations
    ]
    classical = list(a.classical) + [
        replace(op, sources=tuple(s + offset for s in op.sources), targets=tuple(qmap[q] for q in op.targets))
        for op in b.classical
    ]
    rects = list(a.rects) + [
        replace(r, locations=tuple(i + offset for i in r.locations)) for r in b.rects
    ]
    blocks = dict(a.blocks)
    blocks.update({k: tuple(qmap[q] for q in v) for k, v in b.blocks.items()})
    inputs = list(a.inputs) + [qmap[q] for q in b.inputs if q not in wiring]
    used_a = set(wiring.values())
    outputs = [q for q in a.outputs if q not in used_a] + [qmap[q] for q in b.outputs]
    return build_circuit(
        nxt, leak, locs, inputs=inputs, outputs=outputs, classical=classical, rects=rects, blocks=blocks
    )


class CircuitBuilder:
    """Incremental circuit construction with as-soon-as-possible scheduling.

    Each operation is placed at the earliest timestep at which all of its
    qubits are free.  ``barrier`` forces later operations on the given qubits
    to start no earlier than a timestep.
    """

    def __init__(self, leak_dim: int = DEFAULT_LEAK_DIM):
        self.leak_dim = leak_dim
        self._leak: list[int] = []
        self._ready: list[int] = []
        self._locs: list[Location] = []
        self._classical: list[ClassicalOp] = []
        self._rects: list[Rectangle] = []
        self._blocks: dict[str, tuple[int, ...]] = {}
        self._inputs: list[int] = []
        self._outputs: list[int] | None = None

    @property
    def num_qubits(self) -> int:
        return len(self._leak)

    @property
    def num_locations(self) -> int:
        return len(self._locs)

    def qubit(self, *, input: bool = False, leak_dim: int | None = None) -> int:
        self._leak.append(self.leak_dim if leak_dim is None else leak_dim)
        self._ready.append(0)
        q = len(self._leak) - 1
        if input:
            self._inputs.append(q)
        return q

    def qubits(self, n: int, **kw) -> list[int]:
        return [self.qubit(**kw) for _ in range(n)]

    def ready(self, q: int) -> int:
        return self._ready[q]

    def barrier(self, qubits: Iterable[int], t: int) -> None:
        for q in qubits:
            self._ready[q] = max(self._ready[q], t)

    def _add(self, kind: Kind, label: str, qubits: Sequence[int], tag: str | None, at: int | None) -> int:
        t = max(self._ready[q] for q in qubits)
        if at is not None:
            if at < t:
                raise CircuitError(f"cannot schedule {label} on {qubits} at {at}; earliest is {t}")
            t = at
        self._locs.append(Location(kind, label, tuple(qubits), t, tag))
        for q in qubits:
            self._ready[q] = t + 1
        return len(self._locs) - 1

    def prep(self, q: int, label: str = "0", tag: str | None = None, at: int | None = None) -> int:
        if label not in PREP_LABELS:
            raise CircuitError(f"unknown preparation {label!r}")
        return self._add(Kind.PREP, label, (q,), tag, at)

    def measure(self, q: int, label: str = "Z", tag: str | None = None, at: int | None = None) -> int:
        if label not in MEASURE_LABELS:
            raise CircuitError(f"unknown measurement basis {label!r}")
        return self._add(Kind.MEASURE, label, (q,), tag, at)

    def gate(self, label: str, *qubits: int, tag: str | None = None, at: int | None = None) -> int:
        if len(qubits) == 1:
            if label not in GATE1_LABELS:
                raise CircuitError(f"unknown single-qubit gate {label!r}")
            return self._add(Kind.GATE1, label, qubits, tag, at)
        if label not in GATE2_LABELS:
            raise CircuitError(f"unknown two-qubit gate {label!r}")
        return self._add(Kind.GATE2, label, qubits, tag, at)

    def wait(self, q: int, tag: str | None = None, at: int | None = None) -> int:
        return self._add(Kind.WAIT, "I", (q,), tag, at)

    def classical(self, rule: str, sources: Sequence[int], targets: Sequence[int] = (), pauli: str = "I",
                  tag: str | None = None) -> None:
        op = ClassicalOp(rule, tuple(sources), tuple(targets), pauli, tag)
        self._classical.append(op)
        t = max(self._locs[s].timestep for s in op.sources)
        self.barrier(op.targets, t + 1)

    def rect(self, name: str, kind: str, locations: Iterable[int]) -> None:
        self._rects.append(Rectangle(name, kind, tuple(locations)))

    def block(self, name: str, qubits: Sequence[int]) -> None:
        self._blocks[name] = tuple(qubits)

    def set_outputs(self, qubits: Sequence[int]) -> None:
        self._outputs = list(qubits)

    def build(self) -> Circuit:
        return build_circuit(
            self.num_qubits,
            list(self._leak),
            self._locs,
            inputs=self._inputs,
            outputs=self._outputs,
            classical=self._classical,
            rects=self._rects,
            blocks=self._blocks,
        )


# serialization ------------------------------------------------------------

_TEXT_MAGIC = "leakft-circuit 1"


def _check_token(s: str) -> str:
    if not s or any(ch.isspace() for ch in s):
        raise CircuitError(f"token {s!r} cannot be written in the text format")
    return s


def _ints(xs: Iterable[int]) -> str:
    xs = list(xs)
    return ",".join(str(x) for x in xs) if xs else "-"


def _parse_ints(s: str) -> tuple[int, ...]:
    return () if s == "-" else tuple(int(x) for x in s.split(","))


def to_text(c: Circuit) -> str:
    """Line-oriented serialization; :func:`from_text` inverts it exactly."""
    lines = [
        _TEXT_MAGIC,
        f"qubits {c.num_qubits}",
        "leak " + _ints(c.leak_dims),
        "inputs " + _ints(c.inputs),
        "outputs " + _ints(c.outputs),
    ]
    for loc in c.locations:
        tag = _check_token(loc.tag) if loc.tag is not None else "-"
        lines.append(f"L {loc.timestep} {loc.kind.value} {loc.label} {_ints(loc.qubits)} {tag}")
    for op in c.classical:
        tag = _check_token(op.tag) if op.tag is not None else "-"
        lines.append(f"C {op.rule} {op.pauli} {_ints(op.sources)} {_ints(op.targets)} {tag}")
    for r in c.rects:
        lines.append(f"R {_check_token(r.kind)} {_check_token(r.name)} {_ints(r.locations)}")
    for name, qs in c.blocks.items():
        lines.append(f"B {_check_token(name)} {_ints(qs)}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _TEXT_MAGIC:
        raise CircuitError("not a leakft circuit text file")
    head: dict[str, str] = {}
    locs, classical, rects, blocks = [], [], [], {}
    for ln in lines[1:]:
        parts = ln.split()
        key = parts[0]
        if key == "L":
            _, t, kind, label, qs, tag = parts
            locs.append(Location(Kind(kind), label, _parse_ints(qs), int(t), None if tag == "-" else tag))
        elif key == "C":
            _, rule, pauli, src, tgt, tag = parts
            classical.append(ClassicalOp(rule, _parse_ints(src), _parse_ints(tgt), pauli, None if tag == "-" else tag))
        elif key == "R":
            _, kind, name, idx = parts
            rects.append(Rectangle(name, kind, _parse_ints(idx)))
        elif key == "B":
            blocks[parts[1]] = _parse_ints(parts[2])
        else:
            head[key] = parts[1] if len(parts) > 1 else "-"
    return _validated(
        Circuit(
            num_qubits=int(head["qubits"]),
            leak_dims=_parse_ints(head["leak"]),
            locations=tuple(locs),
            inputs=_parse_ints(head["inputs"]),
            outputs=_parse_ints(head["outputs"]),
            classical=tuple(classical),
            rects=tuple(rects),
            blocks=blocks,
        )
    )


def to_dict(c: Circuit) -> dict:
    return {
        "num_qubits": c.num_qubits,
        "leak_dims": list(c.leak_dims),
        "inputs": list(c.inputs),
        "outputs": list(c.outputs),
        "locations": [
            {"timestep": loc.timestep, "kind": loc.kind.value, "label": loc.label,
             "qubits": list(loc.qubits), "tag": loc.tag}
            for loc in c.locations
        ],
        "classical": [
            {"rule": op.rule, "sources": list(op.sources), "targets": list(op.targets),
             "pauli": op.pauli, "tag": op.tag}
            for op in c.classical
        ],
        "rects": [{"name": r.name, "kind": r.kind, "locations": list(r.locations)} for r in c.rects],
        "blocks": {k: list(v) for k, v in c.blocks.items()},
    }


def from_dict(d: Mapping) -> Circuit:
    return _validated(
        Circuit(
            num_qubits=int(d["num_qubits"]),
            leak_dims=tuple(d["leak_dims"]),
            locations=tuple(
                Location(Kind(x["kind"]), x["label"], tuple(x["qubits"]), int(x["timestep"]), x.get("tag"))
                for x in d["locations"]
            ),
            inputs=tuple(d.get("inputs", ())),
            outputs=tuple(d.get("outputs", ())),
            classical=tuple(
                ClassicalOp(x["rule"], tuple(x["sources"]), tuple(x["targets"]), x["pauli"], x.get("tag"))
                for x in d.get("classical", ())
            ),
            rects=tuple(Rectangle(x["name"], x["kind"], tuple(x["locations"])) for x in d.get("rects", ())),
            blocks={k: tuple(v) for k, v in d.get("blocks", {}).items()},
        )
    )


def to_json(c: Circuit) -> str:
    return json.dumps(to_dict(c), sort_keys=True)


def from_json(s: str) -> Circuit:
    return from_dict(json.loads(s))
