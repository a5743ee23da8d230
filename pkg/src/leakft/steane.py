"""[[7,1,3]] gadgets: encoders, verified ancillas, Steane and Knill EC, CNOT exRec.

Location accounting (plain variants):

* encoder: 7 preparations, 9 CNOTs in three rounds, 2 waits for the qubits
  idle in rounds two and three: 18 locations;
* verified ancilla: two encoders, a transversal CNOT into the check copy,
  a transversal check measurement while the kept copy waits: 57 locations;
* one EC (either style): two verified ancillas (114), two transversal
  two-qubit layers (14) and two transversal measurements (14): 142;
* CNOT exRec: four ECs and the transversal CNOT: 4 * 142 + 7 = 575.

LRU variants place a teleportation LRU after every encoder output (28 per
EC); the Steane-style EC also protects the incoming data block (7 more).
Each LRU variant is grouped into eleven stretched rectangles: one per
encoder and one per transversal position.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from importlib import resources

from .circuit import Circuit, CircuitBuilder, Kind
from .codes import N, steane_code  # noqa: F401  (re-exported)
from .lru import LRU_TAG, TELEPORT_R, add_teleport_lru

# CNOT rounds of the |0> encoder: pivots 0, 1, 3 start in |+>
ENCODER_ROUNDS = (
    ((3, 6), (1, 5), (0, 4)),
    ((3, 4), (1, 6), (0, 2)),
    ((3, 5), (1, 2), (0, 6)),
)
ENCODER_WAITS = {1: (5,), 2: (4,)}
PIVOTS = (0, 1, 3)


@dataclass(frozen=True)
class GadgetSpec:
    """A gadget circuit plus the block structure the property checks need.

    ``stabilized`` names, per output block, the logical Pauli that fixes the
    ideal output ("Z" for |0>, "X" for |+>), so errors equal to it are ignored.
    """

    name: str
    kind: str
    circuit: Circuit
    lru: bool
    in_blocks: tuple[tuple[int, ...], ...] = ()
    out_blocks: tuple[tuple[int, ...], ...] = ()
    meas_blocks: tuple[tuple[int, ...], ...] = ()
    stabilized: tuple[str | None, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def num_locations(self) -> int:
        return len(self.circuit.locations)

    @property
    def num_lrus(self) -> int:
        return sum(1 for loc in self.circuit.locations if loc.tag == LRU_TAG) // TELEPORT_R

    @property
    def num_strrecs(self) -> int:
        return sum(1 for r in self.circuit.rects if r.kind == "strrec")


class _Groups:
    """Collects location indices per named rectangle while a gadget is built."""

    def __init__(self):
        self.groups: dict[str, list[int]] = {}

    def add(self, name: str | None, *locs: int) -> None:
        if name is not None:
            self.groups.setdefault(name, []).extend(locs)

    def emit(self, b: CircuitBuilder, kind: str = "strrec") -> None:
        for name, locs in self.groups.items():
            b.rect(name, kind, locs)


def add_encoder(b: CircuitBuilder, which: str, tag: str = "encoder") -> tuple[list[int], list[int]]:
    """Encode |0> (which="zero") or |+> (which="plus") on seven fresh qubits."""
    qs = b.qubits(N)
    t0 = max(b.ready(q) for q in qs)
    locs = []
    plus_set = PIVOTS if which == "zero" else tuple(q for q in range(N) if q not in PIVOTS)
    first_use = {q: min(r for r, rnd in enumerate(ENCODER_ROUNDS) if any(q in g for g in rnd)) for q in range(N)}
    for q in range(N):
        # qubits first touched in round r are prepared just before it
        locs.append(b.prep(qs[q], "+" if q in plus_set else "0", tag=tag, at=t0 + first_use[q]))
    for r, rnd in enumerate(ENCODER_ROUNDS):
        t = t0 + 1 + r
        for c, tg in rnd:
            pair = (qs[c], qs[tg]) if which == "zero" else (qs[tg], qs[c])
            locs.append(b.gate("CNOT", *pair, tag=tag, at=t))
        for q in ENCODER_WAITS.get(r, ()):
            locs.append(b.wait(qs[q], tag=tag, at=t))
    return qs, locs


def add_lru_layer(b: CircuitBuilder, qs: Sequence[int], groups: _Groups | None, names: Sequence[str] | None) -> list[int]:
    out = []
    for j, q in enumerate(qs):
        sites = add_teleport_lru(b, q)
        if groups is not None:
            groups.add(names[j], *sites.locations)
        out.append(sites.output)
    return out


def _trans(j: int, prefix: str) -> str:
    return f"{prefix}trans{j}"


def add_verified_prep(b: CircuitBuilder, which: str, *, lru: bool, groups: _Groups | None = None,
                      prefix: str = "") -> tuple[list[int], int]:
    """Two encoders, LRUs on their outputs (LRU variant), transversal check.

    The |0> check copies X errors of the kept block into the check block and
    measures it in Z; the |+> check copies Z errors and measures in X.  The
    run is accepted when the check outcomes form an even codeword.  Returns
    the kept block and the number of classical ops added.
    """
    kept, lk = add_encoder(b, which)
    check, lc = add_encoder(b, which)
    tname = [_trans(j, prefix) for j in range(N)]
    if groups is not None:
        groups.add(f"{prefix}enc_{which}_kept", *lk)
        groups.add(f"{prefix}enc_{which}_check", *lc)
    if lru:
        kept = add_lru_layer(b, kept, groups, tname)
        check = add_lru_layer(b, check, groups, tname)
    t = max(b.ready(q) for q in kept + check)
    meas = []
    for j in range(N):
        pair = (kept[j], check[j]) if which == "zero" else (check[j], kept[j])
        g = b.gate("CNOT", *pair, tag="verify", at=t)
        m = b.measure(check[j], "Z" if which == "zero" else "X", tag="verify", at=t + 1)
        w = b.wait(kept[j], tag="verify", at=t + 1)
        meas.append(m)
        if groups is not None:
            groups.add(tname[j], g, m, w)
    b.classical("postselect", meas, tag=f"{prefix}verify_{which}")
    return kept, 1


def add_steane_ec(b: CircuitBuilder, data: Sequence[int], *, lru: bool, groups: _Groups | None = None,
                  prefix: str = "", correct_x: bool = True) -> list[int]:
    """Steane-style EC: X syndrome from a |+> ancilla, Z syndrome from a |0> ancilla."""
    tname = [_trans(j, prefix) for j in range(N)]
    anc_plus, _ = add_verified_prep(b, "plus", lru=lru, groups=groups, prefix=prefix)
    anc_zero, _ = add_verified_prep(b, "zero", lru=lru, groups=groups, prefix=prefix)
    data = list(data)
    if lru:
        data = add_lru_layer(b, data, groups, tname)
    t = max(b.ready(q) for q in data + anc_plus + anc_zero)
    mx, mz = [], []
    for j in range(N):
        g1 = b.gate("CNOT", data[j], anc_plus[j], tag="ec", at=t)
        g2 = b.gate("CNOT", anc_zero[j], data[j], tag="ec", at=t + 1)
        # measured with the other ancilla so the X correction finds the data idle
        m1 = b.measure(anc_plus[j], "Z", tag="ec", at=t + 2)
        m2 = b.measure(anc_zero[j], "X", tag="ec", at=t + 2)
        mx.append(m1)
        mz.append(m2)
        if groups is not None:
            groups.add(tname[j], g1, g2, m1, m2)
    if correct_x:
        b.classical("hamming", mx, data, "X", tag=f"{prefix}syndrome_x")
    b.classical("hamming", mz, data, "Z", tag=f"{prefix}syndrome_z")
    return data


def add_knill_ec(b: CircuitBuilder, data: Sequence[int], *, lru: bool, groups: _Groups | None = None,
                 prefix: str = "") -> list[int]:
    """Teleported EC: logical Bell pair from verified |+> and |0>, Bell measurement with the data."""
    tname = [_trans(j, prefix) for j in range(N)]
    half_b, _ = add_verified_prep(b, "plus", lru=lru, groups=groups, prefix=prefix)
    half_a, _ = add_verified_prep(b, "zero", lru=lru, groups=groups, prefix=prefix)
    data = list(data)
    t = max(b.ready(q) for q in half_a + half_b)
    t = max([t + 1] + [b.ready(q) for q in data])
    md, mb = [], []
    for j in range(N):
        g1 = b.gate("CNOT", half_b[j], half_a[j], tag="ec", at=t - 1)
        g2 = b.gate("CNOT", data[j], half_b[j], tag="ec", at=t)
        m1 = b.measure(data[j], "X", tag="ec", at=t + 1)
        m2 = b.measure(half_b[j], "Z", tag="ec", at=t + 1)
        md.append(m1)
        mb.append(m2)
        if groups is not None:
            groups.add(tname[j], g1, g2, m1, m2)
    b.classical("logical", mb, half_a, "X", tag=f"{prefix}frame_x")
    b.classical("logical", md, half_a, "Z", tag=f"{prefix}frame_z")
    return half_a


def _ec(style: str):
    return add_steane_ec if style == "steane" else add_knill_ec


# --- public constructors -------------------------------------------------------


def encoder(which: str) -> GadgetSpec:
    b = CircuitBuilder()
    qs, _ = add_encoder(b, which)
    b.block("out", qs)
    c = b.build()
    return GadgetSpec(f"encoder-{which}", "prep", c, False, (), (tuple(qs),), (), ("Z" if which == "zero" else "X",))


def verified_prep(which: str, lru: bool = False) -> GadgetSpec:
    b = CircuitBuilder()
    g = _Groups() if lru else None
    kept, _ = add_verified_prep(b, which, lru=lru, groups=g)
    if g is not None:
        g.emit(b)
    b.block("out", kept)
    b.set_outputs(kept)
    c = b.build()
    name = f"verified-prep-{which}" + ("-lru" if lru else "")
    return GadgetSpec(name, "prep", c, lru, (), (tuple(kept),), (), ("Z" if which == "zero" else "X",))


def _ec_gadget(style: str, lru: bool, **kw) -> GadgetSpec:
    b = CircuitBuilder()
    data = b.qubits(N, input=True)
    g = _Groups() if lru else None
    out = _ec(style)(b, data, lru=lru, groups=g, **kw)
    if g is not None:
        g.emit(b)
    b.block("in", data)
    b.block("out", out)
    b.set_outputs(out)
    c = b.build()
    name = f"{style}-ec" + ("-lru" if lru else "")
    return GadgetSpec(name, "ec", c, lru, (tuple(data),), (tuple(out),), (), (None,))


def steane_ec(lru: bool = False) -> GadgetSpec:
    return _ec_gadget("steane", lru)


def knill_ec(lru: bool = False) -> GadgetSpec:
    return _ec_gadget("knill", lru)


def broken_fixture() -> GadgetSpec:
    """Steane EC (LRU variant) whose X correction is never applied: fails the no-fault properties."""
    spec = _ec_gadget("steane", True, correct_x=False)
    return GadgetSpec("broken-fixture", "ec", spec.circuit, True, spec.in_blocks, spec.out_blocks, (), (None,))


def add_transversal_cnot(b: CircuitBuilder, ctrl: Sequence[int], tgt: Sequence[int], groups: _Groups | None,
                         prefix: str = "ga") -> list[int]:
    t = max(b.ready(q) for q in list(ctrl) + list(tgt))
    locs = []
    for j in range(N):
        i = b.gate("CNOT", ctrl[j], tgt[j], tag="ga", at=t)
        locs.append(i)
        if groups is not None:
            groups.add(f"{prefix}{j}", i)
    return locs


def transversal_cnot(lru: bool = False) -> GadgetSpec:
    b = CircuitBuilder()
    c1 = b.qubits(N, input=True)
    c2 = b.qubits(N, input=True)
    g = _Groups() if lru else None
    add_transversal_cnot(b, c1, c2, g)
    if g is not None:
        g.emit(b, "rec")
    c = b.build()
    return GadgetSpec("cnot-ga" + ("-lru" if lru else ""), "ga", c, lru, (tuple(c1), tuple(c2)),
                      (tuple(c1), tuple(c2)), (), (None, None))


def transversal_measurement(basis: str = "Z") -> GadgetSpec:
    """Measure every qubit of a block; the logical outcome is decoded classically."""
    b = CircuitBuilder()
    qs = b.qubits(N, input=True)
    meas = [b.measure(q, basis, tag="meas") for q in qs]
    b.set_outputs([])
    c = b.build()
    return GadgetSpec(f"measure-{basis.lower()}", "meas", c, False, (tuple(qs),), (), (tuple(meas),), ())


def cnot_exrec(lru: bool = False, ec: str = "knill") -> GadgetSpec:
    """Leading EC on both blocks, transversal CNOT, trailing EC on both blocks.

    With ``lru`` every EC is the LRU variant and each EC is grouped into its
    eleven stretched rectangles; each transversal CNOT is its own rectangle.
    """
    if ec not in ("knill", "steane"):
        raise ValueError("ec must be 'knill' or 'steane'")
    b = CircuitBuilder()
    d1 = b.qubits(N, input=True)
    d2 = b.qubits(N, input=True)
    g = _Groups() if lru else None
    add = _ec(ec)
    x1 = add(b, d1, lru=lru, groups=g, prefix="lec1_")
    x2 = add(b, d2, lru=lru, groups=g, prefix="lec2_")
    ga = _Groups() if lru else None
    add_transversal_cnot(b, x1, x2, ga)
    y1 = add(b, x1, lru=lru, groups=g, prefix="tec1_")
    y2 = add(b, x2, lru=lru, groups=g, prefix="tec2_")
    if g is not None:
        g.emit(b)
        ga.emit(b, "rec")
    b.block("in1", d1)
    b.block("in2", d2)
    b.block("out1", y1)
    b.block("out2", y2)
    b.set_outputs(y1 + y2)
    c = b.build()
    name = "cnot-exrec" + ("-lru" if lru else "") + ("" if ec == "knill" else "-steane")
    return GadgetSpec(name, "exrec", c, lru, (tuple(d1), tuple(d2)), (tuple(y1), tuple(y2)), (), (None, None),
                      {"ec": ec})


GADGETS = {
    "encoder-zero": lambda: encoder("zero"),
    "encoder-plus": lambda: encoder("plus"),
    "verified-prep-zero": lambda: verified_prep("zero"),
    "verified-prep-plus": lambda: verified_prep("plus"),
    "verified-prep-zero-lru": lambda: verified_prep("zero", True),
    "verified-prep-plus-lru": lambda: verified_prep("plus", True),
    "steane-ec": lambda: steane_ec(False),
    "steane-ec-lru": lambda: steane_ec(True),
    "knill-ec": lambda: knill_ec(False),
    "knill-ec-lru": lambda: knill_ec(True),
    "cnot-ga": lambda: transversal_cnot(False),
    "cnot-ga-lru": lambda: transversal_cnot(True),
    "measure-z": lambda: transversal_measurement("Z"),
    "measure-x": lambda: transversal_measurement("X"),
    "cnot-exrec": lambda: cnot_exrec(False),
    "cnot-exrec-lru": lambda: cnot_exrec(True),
    "cnot-exrec-steane": lambda: cnot_exrec(False, "steane"),
    "cnot-exrec-lru-steane": lambda: cnot_exrec(True, "steane"),
    "broken-fixture": broken_fixture,
}


def get_gadget(name: str) -> GadgetSpec:
    try:
        return GADGETS[name]()
    except KeyError:
        raise KeyError(f"unknown gadget {name!r}; known: {', '.join(sorted(GADGETS))}") from None


def gadget_counts(spec: GadgetSpec) -> dict:
    c = spec.circuit
    return {
        "locations": spec.num_locations,
        "lrus": spec.num_lrus,
        "rectangles": len(c.rects),
        "strrecs": spec.num_strrecs,
        "preps": sum(1 for loc in c.locations if loc.kind is Kind.PREP),
        "gates": sum(1 for loc in c.locations if loc.kind in (Kind.GATE1, Kind.GATE2)),
        "waits": sum(1 for loc in c.locations if loc.kind is Kind.WAIT),
        "measurements": sum(1 for loc in c.locations if loc.kind is Kind.MEASURE),
    }


def golden_counts() -> dict:
    """The checked-in manifest of regression-locked counts."""
    return json.loads(resources.files("leakft").joinpath("data/golden_counts.json").read_text())
