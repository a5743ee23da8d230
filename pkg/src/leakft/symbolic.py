"""Worst-case symbolic error propagation through Clifford circuits with leakage.

Two layers share one semantics:

* a coarse label algebra over {I, X, Y, Z, E, L} (``propagate``, ``run_labels``);
* an exact affine engine (``AffineRun``) in which every wire carries its X
  and Z error parts as GF(2) affine forms over adversarial variables, plus a
  leak flag.  Fresh variables stand for anything a bad rectangle, a leaked
  wire or an LRU refresh may produce.  Syndrome decoders become derived
  variables, post-selection becomes linear constraints, and a question such
  as "is every accepted output within weight one of the code space" is
  settled by enumerating the affine span of the forms that matter.

A form is an int: bit 0 is the constant, bit k >= 1 is variable k.
"""

from __future__ import annotations

import enum
import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, ClassicalOp, Kind, Location
from .codes import FULL, N, ROW_MASKS, _stabilizer_masks, decode_logical, decoded_flip, in_even_code, syndrome

CONST = 1
ENUM_CAP = 24
_CHUNK = 1 << 20


class SymbolicError(ValueError):
    pass


class ErrorLabel(enum.Enum):
    I = "I"  # noqa: E741
    X = "X"
    Y = "Y"
    Z = "Z"
    E = "E"
    L = "L"

    @property
    def severity(self) -> int:
        return {"I": 0, "X": 1, "Y": 1, "Z": 1, "E": 2, "L": 3}[self.value]

    @property
    def xz(self) -> tuple[int, int]:
        return {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}[self.value]

    @classmethod
    def from_xz(cls, x: int, z: int) -> ErrorLabel:
        return {(0, 0): cls.I, (1, 0): cls.X, (1, 1): cls.Y, (0, 1): cls.Z}[(x & 1, z & 1)]

    @property
    def is_pauli(self) -> bool:
        return self.severity <= 1


def join(a: ErrorLabel, b: ErrorLabel) -> ErrorLabel:
    """Least label covering both: distinct Paulis join to E."""
    if a == b:
        return a
    if a.severity != b.severity:
        hi = a if a.severity > b.severity else b
        lo = b if hi is a else a
        if hi.is_pauli and lo is not ErrorLabel.I:
            return ErrorLabel.E
        return hi
    return ErrorLabel.E if a.severity <= 2 else ErrorLabel.L


def product(a: ErrorLabel, b: ErrorLabel) -> ErrorLabel:
    """Compose two errors on one wire (Pauli product; E and L absorb)."""
    if a.is_pauli and b.is_pauli:
        ax, az = a.xz
        bx, bz = b.xz
        return ErrorLabel.from_xz(ax ^ bx, az ^ bz)
    return a if a.severity >= b.severity else b


def _as_label(v) -> ErrorLabel:
    return v if isinstance(v, ErrorLabel) else ErrorLabel(v)


TRUSTED, FLIPPED, UNTRUSTED = 0, 1, 2


@dataclass
class LabelConfig:
    """Per-wire labels plus the status of every measurement outcome seen so far."""

    labels: dict[int, ErrorLabel] = field(default_factory=dict)
    outcomes: dict[int, int] = field(default_factory=dict)
    accepted: bool | None = True

    def copy(self) -> LabelConfig:
        return LabelConfig(dict(self.labels), dict(self.outcomes), self.accepted)

    def get(self, q: int) -> ErrorLabel:
        return self.labels.get(q, ErrorLabel.I)

    def __str__(self) -> str:
        return " ".join(f"{q}:{self.labels[q].value}" for q in sorted(self.labels))


def _clifford_xz(label: str, xs: list[int], zs: list[int]) -> None:
    if label in ("I", "X", "Y", "Z"):
        return
    if label == "H":
        xs[0], zs[0] = zs[0], xs[0]
    elif label in ("S", "SDG"):
        zs[0] ^= xs[0]
    elif label == "CNOT":
        xs[1] ^= xs[0]
        zs[0] ^= zs[1]
    elif label == "CZ":
        zs[0] ^= xs[1]
        zs[1] ^= xs[0]
    else:
        raise SymbolicError(f"unsupported gate {label!r}")


def propagate(cfg: LabelConfig, loc: Location, fault: ErrorLabel | str | None = None,
              index: int | None = None) -> list[LabelConfig]:
    """Push one location through the label algebra (returns the single worst-case config)."""
    out = cfg.copy()
    qs = loc.qubits
    if loc.kind is Kind.PREP:
        out.labels[qs[0]] = ErrorLabel.I
    elif loc.kind is Kind.MEASURE:
        lab = out.labels.pop(qs[0], ErrorLabel.I)
        if lab.is_pauli:
            x, z = lab.xz
            status = FLIPPED if (x if loc.label == "Z" else z) else TRUSTED
        else:
            status = UNTRUSTED
        out.outcomes[qs[0] if index is None else index] = status
    else:
        labs = [out.get(q) for q in qs]
        if any(lab is ErrorLabel.L for lab in labs):
            for q, lab in zip(qs, labs):
                out.labels[q] = lab if lab is ErrorLabel.L else join(lab, ErrorLabel.E)
        elif any(lab is ErrorLabel.E for lab in labs):
            if loc.kind is Kind.GATE2 or loc.label == "H":
                # an unknown error can move to every wire of the gate
                for q in qs:
                    out.labels[q] = join(out.get(q), ErrorLabel.E)
        elif loc.kind is not Kind.WAIT:
            xs = [lab.xz[0] for lab in labs]
            zs = [lab.xz[1] for lab in labs]
            _clifford_xz(loc.label, xs, zs)
            for q, x, z in zip(qs, xs, zs):
                out.labels[q] = ErrorLabel.from_xz(x, z)
    if fault is not None:
        f = _as_label(fault)
        if f not in (ErrorLabel.E, ErrorLabel.L):
            raise SymbolicError("a symbolic fault is E or L")
        targets = qs if loc.kind is not Kind.MEASURE else ()
        for q in targets:
            out.labels[q] = join(out.get(q), f)
        if loc.kind is Kind.MEASURE:
            out.outcomes[qs[0] if index is None else index] = UNTRUSTED
    return [out]


def _apply_label_classical(cfg: LabelConfig, op: ClassicalOp) -> None:
    status = [cfg.outcomes.get(s, TRUSTED) for s in op.sources]
    unknown = any(s == UNTRUSTED for s in status)
    flips = [1 if s == FLIPPED else 0 for s in status]
    if op.rule == "postselect":
        if unknown:
            cfg.accepted = None if cfg.accepted is not False else False
        elif not in_even_code(flips) and cfg.accepted is not None:
            cfg.accepted = False
        return
    pauli = ErrorLabel(op.pauli) if op.pauli != "I" else ErrorLabel.I
    if unknown:
        hit = list(op.targets)
        for q in hit:
            if cfg.get(q) is not ErrorLabel.L:
                cfg.labels[q] = join(cfg.get(q), ErrorLabel.E)
        return
    if op.rule == "parity":
        hit = list(op.targets) if sum(flips) & 1 else []
    elif op.rule == "hamming":
        s = syndrome(sum(b << j for j, b in enumerate(flips)))
        hit = [op.targets[s - 1]] if s else []
    else:
        hit = list(op.targets) if decode_logical(flips) else []
    for q in hit:
        cfg.labels[q] = product(cfg.get(q), pauli)


def _timeline(c: Circuit) -> list[tuple[str, int]]:
    """Locations and classical ops in execution order."""
    events: list[tuple[int, int, str, int]] = []
    for i, loc in enumerate(c.locations):
        events.append((loc.timestep, 0, "loc", i))
    for k, op in enumerate(c.classical):
        events.append((c.classical_time(op), 1, "op", k))
    events.sort()
    return [(kind, i) for _, _, kind, i in events]


def run_labels(c: Circuit, inputs: Mapping[int, ErrorLabel | str] | None = None,
               faults: Mapping[int, ErrorLabel | str] | None = None) -> LabelConfig:
    """Label-level run of a whole circuit, including classical corrections."""
    cfg = LabelConfig({q: _as_label(v) for q, v in (inputs or {}).items()})
    for q in c.inputs:
        cfg.labels.setdefault(q, ErrorLabel.I)
    faults = faults or {}
    for kind, i in _timeline(c):
        if kind == "loc":
            (cfg,) = propagate(cfg, c.locations[i], faults.get(i), index=i)
        else:
            _apply_label_classical(cfg, c.classical[i])
    return cfg


def ideal_decode_weight(block: Sequence[ErrorLabel | str], code=None) -> tuple[int, bool]:
    """(number of non-I wires, whether some resolution of E/L wires has zero syndrome)."""
    labs = [_as_label(v) for v in block]
    n = code.n if code is not None else N
    if len(labs) != n:
        raise SymbolicError(f"block has {len(labs)} wires, code has {n}")
    weight = sum(1 for lab in labs if lab is not ErrorLabel.I)
    x0 = sum(lab.xz[0] << j for j, lab in enumerate(labs) if lab.is_pauli)
    z0 = sum(lab.xz[1] << j for j, lab in enumerate(labs) if lab.is_pauli)
    wild = [j for j, lab in enumerate(labs) if not lab.is_pauli]
    possible = False
    for choice in itertools.product(range(4), repeat=len(wild)):
        x, z = x0, z0
        for j, p in zip(wild, choice):
            x ^= (p & 1) << j
            z ^= (p >> 1) << j
        if syndrome(x) == 0 and syndrome(z) == 0:
            possible = True
            break
    return weight, possible


# --- affine engine ---------------------------------------------------------


@dataclass(frozen=True)
class Derived:
    """A variable defined as a function of linear forms: Hamming position j or logical decode."""

    var: int
    kind: str
    forms: tuple[int, ...]
    position: int = 0

    def evaluate(self, values: Sequence[np.ndarray]) -> np.ndarray:
        s = (values[0] << 2) | (values[1] << 1) | values[2]
        if self.kind == "hamming":
            return (s == self.position + 1).astype(np.uint8)
        return values[3] ^ (s != 0).astype(np.uint8)


def _syndrome_forms(forms: Sequence[int]) -> list[int]:
    out = []
    for row in ROW_MASKS:
        f = 0
        for j in range(N):
            if row >> j & 1:
                f ^= forms[j]
        out.append(f)
    return out


def _xor(forms: Iterable[int]) -> int:
    f = 0
    for g in forms:
        f ^= g
    return f


class AffineRun:
    """Symbolic execution of a circuit with a set of bad locations.

    ``inputs`` maps an input qubit to a label: I/X/Y/Z set a fixed error,
    E a fully adversarial Pauli, L a leaked wire.
    """

    def __init__(self, c: Circuit, bad: Iterable[int] = (), inputs: Mapping[int, ErrorLabel | str] | None = None,
                 timeline: Sequence[tuple[str, int]] | None = None):
        self.circuit = c
        self.bad = frozenset(bad)
        self.nvar = 0
        self.x: dict[int, int] = {}
        self.z: dict[int, int] = {}
        self.leak: set[int] = set()
        self.flips: dict[int, int] = {}
        self.derived: list[Derived] = []
        self.derived_mask = 0
        self.constraints: list[int] = []
        inputs = inputs or {}
        for q in c.inputs:
            self._set_input(q, _as_label(inputs.get(q, ErrorLabel.I)))
        for kind, i in timeline if timeline is not None else _timeline(c):
            if kind == "loc":
                self._location(i, c.locations[i])
            else:
                self._classical(c.classical[i])

    def fresh(self) -> int:
        self.nvar += 1
        return 1 << self.nvar

    def _set_input(self, q: int, lab: ErrorLabel) -> None:
        if lab.is_pauli:
            x, z = lab.xz
            self.x[q], self.z[q] = x, z
        else:
            self.x[q], self.z[q] = self.fresh(), self.fresh()
            if lab is ErrorLabel.L:
                self.leak.add(q)

    def _location(self, i: int, loc: Location) -> None:
        qs = loc.qubits
        bad = i in self.bad
        if loc.kind is Kind.PREP:
            q = qs[0]
            self.x[q], self.z[q] = 0, 0
            self.leak.discard(q)
            if bad:
                self.leak.add(q)
            return
        if loc.kind is Kind.MEASURE:
            q = qs[0]
            if bad or q in self.leak:
                self.flips[i] = self.fresh()
            else:
                self.flips[i] = self.x[q] if loc.label == "Z" else self.z[q]
            self.x.pop(q, None)
            self.z.pop(q, None)
            self.leak.discard(q)
            return
        if bad:
            self.leak.update(qs)
            return
        if any(q in self.leak for q in qs):
            for q in qs:
                if q not in self.leak:
                    self.x[q] ^= self.fresh()
                    self.z[q] ^= self.fresh()
            return
        if loc.kind is Kind.WAIT:
            return
        xs = [self.x[q] for q in qs]
        zs = [self.z[q] for q in qs]
        _clifford_xz(loc.label, xs, zs)
        for q, x, z in zip(qs, xs, zs):
            self.x[q], self.z[q] = x, z

    def _derive(self, kind: str, forms: Sequence[int], position: int = 0) -> int:
        if all(f >> 1 == 0 for f in forms):
            # constant inputs: evaluate now
            vals = [np.array([f & 1], dtype=np.uint8) for f in forms]
            return int(Derived(0, kind, tuple(forms), position).evaluate(vals)[0])
        var = self.fresh()
        self.derived.append(Derived(var.bit_length() - 1, kind, tuple(forms), position))
        self.derived_mask |= var
        return var

    def decode_form(self, flip_forms: Sequence[int]) -> int:
        """Form of the logical decode of a transversal record (relative to the ideal record)."""
        s = _syndrome_forms(flip_forms)
        return self._derive("logical", s + [_xor(flip_forms)])

    def _apply(self, q: int, pauli: str, f: int) -> None:
        if q in self.leak or not f:
            return
        if pauli in ("X", "Y"):
            self.x[q] ^= f
        if pauli in ("Z", "Y"):
            self.z[q] ^= f

    def _classical(self, op: ClassicalOp) -> None:
        forms = [self.flips[s] for s in op.sources]
        if op.rule == "parity":
            f = _xor(forms)
            for q in op.targets:
                self._apply(q, op.pauli, f)
        elif op.rule == "hamming":
            s = _syndrome_forms(forms)
            for j, q in enumerate(op.targets):
                self._apply(q, op.pauli, self._derive("hamming", s, j))
        elif op.rule == "logical":
            f = self.decode_form(forms)
            for q in op.targets:
                self._apply(q, op.pauli, f)
        else:
            self.constraints.extend(f for f in _syndrome_forms(forms) + [_xor(forms)] if f)

    @property
    def rejected(self) -> bool:
        """Deterministically rejected (a constraint is the constant 1)."""
        return any(f == CONST for f in self.constraints)

    def block_forms(self, block: Sequence[int]) -> tuple[list[int], list[int], int]:
        """X forms, Z forms and leak mask of an output block."""
        xs, zs, lmask = [], [], 0
        for j, q in enumerate(block):
            if q in self.leak:
                lmask |= 1 << j
                xs.append(0)
                zs.append(0)
            else:
                xs.append(self.x[q])
                zs.append(self.z[q])
        return xs, zs, lmask


# --- span enumeration ------------------------------------------------------


class EnumerationCapacityError(RuntimeError):
    """The affine span to enumerate exceeds the configured cap."""


def _bits(f: int):
    f >>= 1
    k = 1
    while f:
        if f & 1:
            yield k
        f >>= 1
        k += 1


class _UnionFind:
    def __init__(self):
        self.parent: dict[int, int] = {}

    def find(self, a: int) -> int:
        self.parent.setdefault(a, a)
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _basis(forms: Iterable[int]) -> tuple[dict[int, int], int]:
    """Express each form as a combination of an independent subset; returns (coefficients, rank)."""
    pivots: dict[int, tuple[int, int]] = {}
    coeff: dict[int, int] = {}
    rank = 0
    for g in forms:
        if g in coeff:
            continue
        cur, comb = g, 0
        while cur:
            p = cur.bit_length() - 1
            if p not in pivots:
                break
            m, c = pivots[p]
            cur ^= m
            comb ^= c
        if cur == 0:
            coeff[g] = comb
        else:
            pivots[cur.bit_length() - 1] = (cur, comb ^ (1 << rank))
            coeff[g] = 1 << rank
            rank += 1
    return coeff, rank


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] == 0 or rows.shape[1] == 0:
        return rows[:1] if rows.shape[0] else rows
    if rows.shape[1] <= 63:
        w = (rows.astype(np.uint64) << np.arange(rows.shape[1], dtype=np.uint64)).sum(axis=1, dtype=np.uint64)
        _, idx = np.unique(w, return_index=True)
        return rows[np.sort(idx)]
    return np.unique(rows, axis=0)


def enumerate_outcomes(run: AffineRun, observed: Sequence[int], cap: int = ENUM_CAP) -> np.ndarray:
    """Distinct value vectors of ``observed`` over all accepted variable assignments.

    Returns a (k, len(observed)) uint8 array; k = 0 when nothing is accepted.
    Independent groups of variables are enumerated separately and combined.
    """
    if run.rejected:
        return np.zeros((0, len(observed)), dtype=np.uint8)
    dmask = run.derived_mask
    by_var = {d.var: d for d in run.derived}
    uf = _UnionFind()
    todo = list(observed) + list(run.constraints)
    seen_derived: set[int] = set()
    for f in todo:
        vs = list(_bits(f))
        for v in vs:
            uf.find(v)
            uf.union(vs[0], v)
            if v in by_var and v not in seen_derived:
                seen_derived.add(v)
                for g in by_var[v].forms:
                    todo.append(g)
                    for w in _bits(g):
                        uf.union(v, w)
    groups: dict[int, dict] = {}

    def group(f: int):
        v = next(_bits(f), None)
        if v is None:
            return None
        return groups.setdefault(uf.find(v), {"obs": [], "cons": [], "derived": []})

    for k, f in enumerate(observed):
        g = group(f)
        if g is not None:
            g["obs"].append(k)
    for f in run.constraints:
        group(f)["cons"].append(f)
    for v in sorted(seen_derived):
        groups.setdefault(uf.find(v), {"obs": [], "cons": [], "derived": []})["derived"].append(by_var[v])

    result = np.array([[f & 1 for f in observed]], dtype=np.uint8)
    for g in groups.values():
        rows = _enumerate_group(g, observed, dmask, cap)
        if rows.shape[0] == 0:
            return np.zeros((0, len(observed)), dtype=np.uint8)
        if not g["obs"]:
            continue
        k0, k1 = result.shape[0], rows.shape[0]
        if k0 * k1 > 4_000_000:
            raise EnumerationCapacityError(f"{k0 * k1} combined outcome rows")
        merged = np.repeat(result, k1, axis=0)
        merged[:, g["obs"]] = np.tile(rows, (k0, 1))
        result = merged
    return result


def _enumerate_group(g: dict, observed: Sequence[int], dmask: int, cap: int) -> np.ndarray:
    obs_forms = [observed[k] for k in g["obs"]]
    inputs = [f for d in g["derived"] for f in d.forms]
    base = lambda f: f & ~dmask & ~CONST  # noqa: E731
    coeff, rank = _basis(base(f) for f in obs_forms + g["cons"] + inputs)
    coeff.pop(0, None)
    if rank > cap:
        raise EnumerationCapacityError(f"span of rank {rank} exceeds cap {cap}")
    out = []
    total = 1 << rank
    for start in range(0, total, _CHUNK):
        a = np.arange(start, min(total, start + _CHUNK), dtype=np.uint64)
        cache: dict[int, np.ndarray] = {}
        dvals: dict[int, np.ndarray] = {}

        def value(f: int) -> np.ndarray:
            b = base(f)
            if b not in cache:
                cache[b] = (np.bitwise_count(a & np.uint64(coeff[b])) & 1).astype(np.uint8) if b else \
                    np.zeros(a.shape, dtype=np.uint8)
            v = cache[b] ^ np.uint8(f & 1)
            for var in _bits(f & dmask):
                v = v ^ dvals[var]
            return v

        for d in g["derived"]:
            dvals[d.var] = d.evaluate([value(f) for f in d.forms])
        acc = np.ones(a.shape, dtype=bool)
        for f in g["cons"]:
            acc &= value(f) == 0
        if not acc.any():
            continue
        if obs_forms:
            rows = np.stack([value(f)[acc] for f in obs_forms], axis=1)
            out.append(_unique_rows(rows))
        else:
            out.append(np.zeros((1, 0), dtype=np.uint8))
    if not out:
        return np.zeros((0, len(obs_forms)), dtype=np.uint8)
    return _unique_rows(np.concatenate(out))


# --- output predicates -----------------------------------------------------


_WEIGHT_TABLES: dict[tuple[bool, bool, int], np.ndarray] = {}
_FLIP_TABLES: dict[int, np.ndarray] = {}


def weight_table(free_x: bool, free_z: bool, leak_mask: int = 0) -> np.ndarray:
    """[x_mask, z_mask] -> minimum weight modulo stabilizers (and the freed logicals), leaked wires counted."""
    key = (free_x, free_z, leak_mask)
    if key not in _WEIGHT_TABLES:
        stab = _stabilizer_masks()
        sx = stab + ([s ^ FULL for s in stab] if free_x else [])
        sz = stab + ([s ^ FULL for s in stab] if free_z else [])
        a = np.arange(1 << N, dtype=np.uint64)
        best = np.full((1 << N, 1 << N), N + 1, dtype=np.int64)
        lm = np.uint64(leak_mask)
        for u in sx:
            ax = (a ^ np.uint64(u))[:, None]
            for v in sz:
                w = np.bitwise_count(ax | (a ^ np.uint64(v))[None, :] | lm).astype(np.int64)
                np.minimum(best, w, out=best)
        _WEIGHT_TABLES[key] = best
    return _WEIGHT_TABLES[key]


def flip_table(leak_mask: int = 0) -> np.ndarray:
    """[mask] -> 1 if some Pauli on the leaked wires makes ideal decoding flip the logical."""
    if leak_mask not in _FLIP_TABLES:
        base = np.array([decoded_flip(m) for m in range(1 << N)], dtype=np.uint8)
        subs = [s for s in range(1 << N) if s & ~leak_mask == 0]
        t = np.zeros(1 << N, dtype=np.uint8)
        for s in subs:
            t |= base[np.arange(1 << N) ^ s]
        _FLIP_TABLES[leak_mask] = t
    return _FLIP_TABLES[leak_mask]


def _masks(rows: np.ndarray, cols: Sequence[int]) -> np.ndarray:
    m = np.zeros(rows.shape[0], dtype=np.int64)
    for j, c in enumerate(cols):
        m |= rows[:, c].astype(np.int64) << j
    return m


# --- property campaigns ----------------------------------------------------

PROPERTIES = ("P0'", "P0", "P1", "P2", "P3", "P3'", "P4", "P4'")
APPLICABLE = {
    "ec": ("P0'", "P0", "P1", "P2"),
    "ga": ("P3", "P4"),
    "exrec": ("P3", "P4"),
    "prep": ("P4'",),
    "meas": ("P3'", "P4'"),
}
# property -> (bad units per case, input family, output predicate)
_PLAN = {
    "P0'": (1, "arbitrary", "dist1"),
    "P0": (1, "clean", "w1"),
    "P1": (0, "arbitrary", "dist0"),
    "P2": (0, "single", "w0"),
    "P3": (0, "single", "w1"),
    "P3'": (0, "single", "meas"),
    "P4": (1, "clean", "w1"),
    "P4'": (1, "clean", "w1"),
}


@dataclass(frozen=True)
class Unit:
    """A rectangle (or a lone location) that is either good or bad as a whole."""

    name: str
    locations: tuple[int, ...]


def fault_units(c: Circuit) -> list[Unit]:
    units = [Unit(r.name, tuple(r.locations)) for r in c.rects]
    covered = {i for u in units for i in u.locations}
    units += [Unit(f"loc{i}", (i,)) for i in range(len(c.locations)) if i not in covered]
    return units


def input_cases(blocks: Sequence[Sequence[int]], family: str) -> list[dict[int, str]]:
    wires = [q for b in blocks for q in b]
    if family == "clean" or not wires:
        return [{}]
    if family == "single":
        return [{}] + [{q: lab} for q in wires for lab in "XYZL"]
    cases = [{q: "E" for q in wires}, {q: "L" for q in wires}]
    for q in wires:
        cases.append({w: ("L" if w == q else "E") for w in wires})
    return cases


@dataclass
class PropertyReport:
    prop: str
    gadget: str
    passed: bool
    cases: int
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"property": self.prop, "gadget": self.gadget, "passed": self.passed, "cases": self.cases,
                "failures": self.failures}


def measured_records(spec) -> list[tuple[int, ...]]:
    """Transversal records whose decoded logical value is an outcome of the gadget."""
    if spec.meas_blocks:
        return list(spec.meas_blocks)
    return [op.sources for op in spec.circuit.classical if op.rule == "logical"]


def applicable(spec) -> tuple[str, ...]:
    props = APPLICABLE.get(spec.kind, ())
    if spec.kind == "ec" and measured_records(spec):
        props = props + ("P3'",)
    return props


def _observed(run: AffineRun, spec, predicate: str) -> tuple[list[int], list]:
    """Observed forms plus per-block column layout for the predicate."""
    forms: list[int] = []
    layout = []
    if predicate == "meas":
        for locs in measured_records(spec):
            layout.append(len(forms))
            forms.append(run.decode_form([run.flips[i] for i in locs]))
        return forms, layout
    for b, block in enumerate(spec.out_blocks):
        xs, zs, lmask = run.block_forms(block)
        start = len(forms)
        forms += xs + zs
        stab = spec.stabilized[b] if b < len(spec.stabilized) else None
        layout.append((list(range(start, start + N)), list(range(start + N, start + 2 * N)), lmask, stab))
    return forms, layout


def _violations(rows: np.ndarray, layout, predicate: str) -> np.ndarray:
    """Boolean mask of rows that break the predicate."""
    bad = np.zeros(rows.shape[0], dtype=bool)
    if predicate == "meas":
        for col in layout:
            bad |= rows[:, col] != 0
        return bad
    for xcols, zcols, lmask, stab in layout:
        xm, zm = _masks(rows, xcols), _masks(rows, zcols)
        if predicate == "decode":
            t = flip_table(lmask)
            bad |= (t[xm] | t[zm]) != 0
            continue
        free = predicate.startswith("dist")
        w = weight_table(free or stab == "X", free or stab == "Z", lmask)[xm, zm]
        bad |= w > int(predicate[-1])
    return bad


def _describe(rows: np.ndarray, layout, predicate: str) -> list:
    row = rows[0:1]
    if predicate == "meas":
        return [int(row[0, col]) for col in layout]
    return [{"x": int(_masks(row, xc)[0]), "z": int(_masks(row, zc)[0]), "leaked": lm} for xc, zc, lm, _ in layout]


def evaluate_case(spec, bad: Iterable[int], inputs: Mapping[int, str], predicate: str,
                  timeline=None, cap: int = ENUM_CAP) -> tuple[bool, list | None]:
    """(passes, offending output description or None)."""
    run = AffineRun(spec.circuit, bad, inputs, timeline)
    forms, layout = _observed(run, spec, predicate)
    try:
        rows = enumerate_outcomes(run, forms, cap)
    except EnumerationCapacityError as e:
        return False, [f"undecided: {e}"]
    bad_rows = _violations(rows, layout, predicate)
    if bad_rows.any():
        return False, _describe(rows[bad_rows], layout, predicate)
    return True, None


def check_property(spec, prop: str, *, max_failures: int = 5) -> PropertyReport:
    """Exhaustive campaign for one property on a gadget (see ``APPLICABLE``)."""
    if prop not in PROPERTIES:
        raise SymbolicError(f"unknown property {prop!r}")
    if prop not in applicable(spec):
        raise SymbolicError(f"property {prop} does not apply to gadget {spec.name}")
    nbad, family, predicate = _PLAN[prop]
    if spec.kind == "meas" or prop == "P3'":
        predicate = "meas"
    units = fault_units(spec.circuit) if nbad else [None]
    cases = input_cases(spec.in_blocks, family)
    timeline = _timeline(spec.circuit)
    report = PropertyReport(prop, spec.name, True, 0)
    for unit in units:
        bad = unit.locations if unit is not None else ()
        for inputs in cases:
            report.cases += 1
            ok, detail = evaluate_case(spec, bad, inputs, predicate, timeline)
            if not ok:
                report.passed = False
                if len(report.failures) < max_failures:
                    report.failures.append({"bad": unit.name if unit else None,
                                            "inputs": {str(q): v for q, v in inputs.items()},
                                            "outputs": detail})
    return report


def check_properties(spec, props: Sequence[str] | None = None) -> list[PropertyReport]:
    return [check_property(spec, p) for p in (props or applicable(spec))]


def inject_and_run(spec, faulted: Iterable[str] = (), inputs: Mapping[int, str] | None = None) -> LabelConfig:
    """Worst-case labels on the output wires with the named rectangles bad."""
    units = {u.name: u for u in fault_units(spec.circuit)}
    bad: set[int] = set()
    for name in faulted:
        if name not in units:
            raise SymbolicError(f"unknown rectangle {name!r}")
        bad.update(units[name].locations)
    run = AffineRun(spec.circuit, bad, inputs)
    wires = [q for b in spec.out_blocks for q in b] or list(spec.circuit.outputs)
    live = [q for q in wires if q not in run.leak]
    forms = [run.x[q] for q in live] + [run.z[q] for q in live]
    cfg = LabelConfig()
    rows = enumerate_outcomes(run, forms)
    for q in wires:
        cfg.labels[q] = ErrorLabel.L if q in run.leak else ErrorLabel.I
    for k, q in enumerate(live):
        seen = {(int(r[k]), int(r[k + len(live)])) for r in rows}
        lab = ErrorLabel.I
        for x, z in seen:
            lab = join(lab, ErrorLabel.from_xz(x, z))
        cfg.labels[q] = lab
    for i, f in run.flips.items():
        cfg.outcomes[i] = TRUSTED if f == 0 else FLIPPED if f == CONST else UNTRUSTED
    cfg.accepted = False if run.rejected or rows.shape[0] == 0 else (None if run.constraints else True)
    return cfg


# --- malignant pairs -------------------------------------------------------


@dataclass
class MalignantReport:
    gadget: str
    units: int
    total_pairs: int
    malignant: int
    undecided: int
    pairs: list[tuple[str, str]]

    def to_dict(self) -> dict:
        return {"gadget": self.gadget, "units": self.units, "total_pairs": self.total_pairs,
                "malignant": self.malignant, "undecided": self.undecided,
                "pairs": [list(p) for p in self.pairs]}


_WORKER: dict = {}


def _pair_worker_init(spec) -> None:
    _WORKER["spec"] = spec
    _WORKER["units"] = fault_units(spec.circuit)
    _WORKER["timeline"] = _timeline(spec.circuit)


def _pair_chunk(pairs: Sequence[tuple[int, int]]) -> list[tuple[int, int, int]]:
    """(a, b, status) for every malignant or undecided pair; status 1 = malignant, 2 = undecided."""
    spec, units, timeline = _WORKER["spec"], _WORKER["units"], _WORKER["timeline"]
    out = []
    for a, b in pairs:
        ok, detail = evaluate_case(spec, units[a].locations + units[b].locations, {}, "decode", timeline)
        if not ok:
            undecided = bool(detail) and isinstance(detail[0], str)
            out.append((a, b, 2 if undecided else 1))
    return out


def count_malignant_pairs(spec, jobs: int = 1, chunk: int = 64) -> MalignantReport:
    """Mark every unordered pair of bad rectangles whose joint failure can defeat ideal decoding.

    Undecided pairs (span above the enumeration cap) are counted as malignant.
    Results do not depend on ``jobs`` or enumeration order.
    """
    units = fault_units(spec.circuit)
    pairs = list(itertools.combinations(range(len(units)), 2))
    batches = [pairs[i:i + chunk] for i in range(0, len(pairs), chunk)]
    found: list[tuple[int, int, int]] = []
    if jobs <= 1:
        _pair_worker_init(spec)
        for batch in batches:
            found += _pair_chunk(batch)
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs, initializer=_pair_worker_init, initargs=(spec,)) as ex:
            for part in ex.map(_pair_chunk, batches):
                found += part
    found.sort()
    names = [(units[a].name, units[b].name) for a, b, _ in found]
    undecided = sum(1 for *_, s in found if s == 2)
    return MalignantReport(spec.name, len(units), len(pairs), len(found), undecided, names)
