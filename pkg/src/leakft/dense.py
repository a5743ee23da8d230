"""Exact state-vector and channel simulation on extended qubits.

Every qubit lives in C^2 (+) C^ell.  Ideal gates act as the textbook unitary
on the all-system subspace and as the identity on anything with a leaked
component.  Measurements return 0/1 for system outcomes and the raw level
(2, 3, ...) for leaked outcomes; classical processing reads a leaked outcome
as bit 0.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, ClassicalOp, Kind, Location
from .codes import decode_logical, in_even_code

MAX_STATE_QUBITS = 10
MAX_CHANNEL_QUBITS = 3
ATOL = 1e-10


class CapacityError(RuntimeError):
    """Register too large for dense simulation."""


SQ2 = 1 / np.sqrt(2)
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
H = SQ2 * np.array([[1, 1], [1, -1]], dtype=complex)
S = np.diag([1, 1j])
SDG = np.diag([1, -1j])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)

GATES = {"I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "S": S, "SDG": SDG, "CNOT": CNOT, "CZ": CZ}
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def is_unitary(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=atol)


def opnorm(m: np.ndarray) -> float:
    """Operator (sup) norm: largest singular value."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


@dataclass(frozen=True)
class ExtendedOperator:
    """A matrix acting on a few extended qubits with local dims ``dims``."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = int(np.prod(self.dims))
        if m.shape != (d, d):
            raise ValueError(f"operator shape {m.shape} does not match dims {self.dims}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(self.dims))

    @property
    def dagger(self) -> ExtendedOperator:
        return ExtendedOperator(self.matrix.conj().T, self.dims)

    def __matmul__(self, other: ExtendedOperator) -> ExtendedOperator:
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return ExtendedOperator(self.matrix @ other.matrix, self.dims)


def system_indices(dims: Sequence[int]) -> np.ndarray:
    """Flat indices of the all-system basis states |b_0 b_1 ...>, b_i in {0,1}."""
    idx = []
    for bits in itertools.product((0, 1), repeat=len(dims)):
        idx.append(int(np.ravel_multi_index(bits, dims)))
    return np.array(idx)


def system_projector(dims: Sequence[int]) -> np.ndarray:
    d = int(np.prod(dims))
    p = np.zeros((d, d))
    s = system_indices(dims)
    p[s, s] = 1
    return p


def embed_ideal_gate(u: np.ndarray, dims: Sequence[int] | int = 3, check: bool = True) -> ExtendedOperator:
    """Embed a 2^k x 2^k unitary so that it acts as identity on leaked components."""
    u = np.asarray(u, dtype=complex)
    k = int(round(np.log2(u.shape[0])))
    if isinstance(dims, int):
        dims = (dims,) * k
    dims = tuple(dims)
    if k not in (1, 2) or u.shape != (2**k, 2**k) or len(dims) != k:
        raise ValueError("expected a one- or two-qubit unitary matching dims")
    if check and not is_unitary(u):
        raise ValueError("ideal gate is not unitary")
    d = int(np.prod(dims))
    m = np.eye(d, dtype=complex)
    s = system_indices(dims)
    m[np.ix_(s, s)] = u
    return ExtendedOperator(m, dims)


# --- states -----------------------------------------------------------------


@dataclass(frozen=True)
class ExtendedState:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != int(np.prod(self.dims)):
            raise ValueError("amplitude vector does not match dims")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "dims", tuple(self.dims))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)


def basis_state(dims: Sequence[int], levels: Sequence[int]) -> ExtendedState:
    a = np.zeros(int(np.prod(dims)), dtype=complex)
    a[np.ravel_multi_index(tuple(levels), tuple(dims))] = 1
    return ExtendedState(a, tuple(dims))


def product_state(vectors: Sequence[np.ndarray]) -> ExtendedState:
    vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
    a = vecs[0]
    for v in vecs[1:]:
        a = np.kron(a, v)
    return ExtendedState(a, tuple(len(v) for v in vecs))


def local_vector(d: int, coeffs: Mapping[int, complex] | Sequence[complex]) -> np.ndarray:
    """Single-qubit vector of dimension d from {level: amplitude} or a short list."""
    v = np.zeros(d, dtype=complex)
    items = coeffs.items() if isinstance(coeffs, Mapping) else enumerate(coeffs)
    for k, c in items:
        v[k] = c
    return v / np.linalg.norm(v)


def _apply_tensor(psi: np.ndarray, matrix: np.ndarray, qubits: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Apply ``matrix`` on ``qubits`` of a tensor whose leading axes are the register."""
    k = len(qubits)
    local = [dims[q] for q in qubits]
    m = matrix.reshape(local + local)
    out = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits))


def apply(state: ExtendedState, op: ExtendedOperator, qubits: Sequence[int]) -> ExtendedState:
    qubits = list(qubits)
    if tuple(state.dims[q] for q in qubits) != op.dims:
        raise ValueError("operator dims do not match the targeted qubits")
    out = _apply_tensor(state.tensor(), op.matrix, qubits, state.dims)
    return ExtendedState(out.reshape(-1), state.dims)


def leakage_weight(state: ExtendedState, qubit: int) -> float:
    """Probability mass of ``qubit`` outside its system subspace."""
    t = np.moveaxis(state.tensor(), qubit, 0)
    return float(np.sum(np.abs(t[2:]) ** 2) / max(np.sum(np.abs(t) ** 2), 1e-300))


def reduced_density(state: ExtendedState, keep: Sequence[int]) -> np.ndarray:
    keep = list(keep)
    rest = [q for q in range(len(state.dims)) if q not in keep]
    t = np.transpose(state.tensor(), keep + rest)
    dk = int(np.prod([state.dims[q] for q in keep]))
    m = t.reshape(dk, -1)
    return m @ m.conj().T


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for normalized vectors (global phase ignored)."""
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


# --- circuit execution -----------------------------------------------------

FaultPattern = Mapping[int, np.ndarray]


def location_operator(loc: Location, dims: Sequence[int]) -> np.ndarray:
    local = [dims[q] for q in loc.qubits]
    if loc.kind is Kind.WAIT:
        return np.eye(int(np.prod(local)), dtype=complex)
    return embed_ideal_gate(GATES[loc.label], local, check=False).matrix


def outcome_bit(raw: int) -> int:
    """Classical bit of a raw outcome; leaked outcomes read as 0."""
    return raw if raw in (0, 1) else 0


def _classical_value(op: ClassicalOp, bits: Sequence[int]):
    if op.rule == "parity":
        return sum(bits) % 2
    if op.rule == "hamming":
        s = 0
        for j, b in enumerate(bits):
            if b:
                s ^= j + 1
        return s
    if op.rule == "logical":
        return decode_logical(bits)
    return in_even_code(bits)


@dataclass
class Branch:
    """One measurement-outcome branch.

    ``tensor`` is unnormalized; its leading axes are the live qubits listed in
    ``live`` (measured qubits are dropped, prepared qubits are appended) and
    any trailing axes are batch axes carried along untouched.
    """

    outcomes: dict[int, int]
    tensor: np.ndarray
    live: list[int]
    accepted: bool = True

    def bits(self, sources: Sequence[int]) -> list[int]:
        return [outcome_bit(self.outcomes[s]) for s in sources]

    def axes(self, qubits: Sequence[int]) -> list[int]:
        return [self.live.index(q) for q in qubits]

    def apply(self, matrix: np.ndarray, qubits: Sequence[int], dims: Sequence[int]) -> None:
        ax = self.axes(qubits)
        local = [dims[q] for q in qubits]
        k = len(ax)
        m = np.asarray(matrix).reshape(local + local)
        out = np.tensordot(m, self.tensor, axes=(list(range(k, 2 * k)), ax))
        self.tensor = np.moveaxis(out, list(range(k)), ax)


def _measure_split(branch: Branch, loc_index: int, loc: Location, dims: Sequence[int],
                   fault: np.ndarray | None, prune: float) -> list[Branch]:
    q = loc.qubits[0]
    d = dims[q]
    if fault is not None:
        branch.apply(fault, [q], dims)
    if loc.label == "X":
        branch.apply(embed_ideal_gate(H, (d,)).matrix, [q], dims)
    ax = branch.live.index(q)
    live = branch.live[:ax] + branch.live[ax + 1:]
    out = []
    for level in range(d):
        part = np.take(branch.tensor, level, axis=ax)
        if np.sum(np.abs(part) ** 2) <= prune:
            continue
        outcomes = dict(branch.outcomes)
        outcomes[loc_index] = level
        out.append(Branch(outcomes, part, list(live), branch.accepted))
    return out


def _apply_classical(branch: Branch, op: ClassicalOp, dims: Sequence[int]) -> None:
    value = _classical_value(op, branch.bits(op.sources))
    if op.rule == "postselect":
        branch.accepted = branch.accepted and bool(value)
        return
    if op.rule == "hamming":
        targets = [op.targets[value - 1]] if value else []
    else:
        targets = list(op.targets) if value else []
    for q in targets:
        branch.apply(embed_ideal_gate(PAULIS[op.pauli], (dims[q],)).matrix, [q], dims)


def evolve(c: Circuit, psi: np.ndarray, live: Sequence[int], faults: FaultPattern | None = None,
           prune: float = 1e-28, max_live: int = MAX_STATE_QUBITS) -> list[Branch]:
    """Run ``c`` on ``psi`` whose leading axes are the qubits ``live``.

    Returns every measurement branch whose weight exceeds ``prune``.  Faults
    map a location index to an operator on that location's qubits: it replaces
    the ideal gate, follows a preparation, and precedes a measurement.
    """
    faults = dict(faults or {})
    for i in faults:
        if not 0 <= i < len(c.locations):
            raise KeyError(f"fault at nonexistent location {i}")
    dims = c.dims
    by_time: dict[int, list[int]] = {}
    for i, loc in enumerate(c.locations):
        by_time.setdefault(loc.timestep, []).append(i)
    classical_at: dict[int, list[ClassicalOp]] = {}
    for op in c.classical:
        classical_at.setdefault(c.classical_time(op), []).append(op)
    branches = [Branch({}, np.asarray(psi, dtype=complex), list(live))]
    for t in range(c.depth):
        for i in by_time.get(t, []):
            loc = c.locations[i]
            qs = list(loc.qubits)
            fault = faults.get(i)
            if loc.kind is Kind.MEASURE:
                nxt = []
                for b in branches:
                    nxt.extend(_measure_split(b, i, loc, dims, fault, prune))
                branches = nxt
                continue
            if loc.kind is Kind.PREP:
                q = qs[0]
                for b in branches:
                    if q in b.live:
                        raise ValueError(f"preparation on qubit {q} which is not fresh")
                    if len(b.live) + 1 > max_live:
                        raise CapacityError(f"more than {max_live} live qubits")
                    fresh = np.zeros(dims[q], dtype=complex)
                    fresh[0] = 1
                    b.tensor = np.moveaxis(np.multiply.outer(fresh, b.tensor), 0, len(b.live))
                    b.live.append(q)
                m = embed_ideal_gate(H, (dims[q],)).matrix if loc.label == "+" else None
                if fault is not None:
                    m = np.asarray(fault) if m is None else np.asarray(fault) @ m
            else:
                m = np.asarray(fault) if fault is not None else location_operator(loc, dims)
            if m is not None:
                for b in branches:
                    b.apply(m, qs, dims)
        for op in classical_at.get(t, []):
            for b in branches:
                _apply_classical(b, op, dims)
    return branches


def _input_tensor(c: Circuit, input_state: ExtendedState | None) -> np.ndarray:
    dims = c.dims
    if len(c.inputs) > MAX_STATE_QUBITS:
        raise CapacityError(f"{len(c.inputs)} input qubits exceed the dense cap of {MAX_STATE_QUBITS}")
    in_dims = tuple(dims[q] for q in c.inputs)
    if input_state is None:
        input_state = basis_state(in_dims, [0] * len(c.inputs))
    if in_dims != input_state.dims:
        raise ValueError("input state dims do not match circuit inputs")
    return input_state.amplitudes.reshape(in_dims)


def _final_order(c: Circuit, live: Sequence[int]) -> list[int]:
    outs = [q for q in c.outputs if q in live]
    return outs + [q for q in live if q not in outs]


@dataclass
class RunResult:
    """One branch: raw outcomes, probability and the normalized state of the live qubits.

    ``qubits`` lists the circuit qubits carried by ``state``, outputs first.
    """

    outcomes: dict[int, int]
    probability: float
    state: ExtendedState
    qubits: list[int]
    accepted: bool = True

    def bits(self, sources: Sequence[int]) -> list[int]:
        return [outcome_bit(self.outcomes[s]) for s in sources]

    def index(self, qubit: int) -> int:
        return self.qubits.index(qubit)


def run_branches(c: Circuit, input_state: ExtendedState | None = None,
                 faults: FaultPattern | None = None) -> list[RunResult]:
    """All measurement branches with their probabilities and normalized states."""
    psi = _input_tensor(c, input_state)
    out = []
    for b in evolve(c, psi, c.inputs, faults):
        order = _final_order(c, b.live)
        t = np.transpose(b.tensor, [b.live.index(q) for q in order]) if order else b.tensor
        p = float(np.sum(np.abs(t) ** 2))
        st = ExtendedState(t.reshape(-1) / np.sqrt(p), tuple(c.dims[q] for q in order))
        out.append(RunResult(b.outcomes, p, st, order, b.accepted))
    return out


def run(c: Circuit, input_state: ExtendedState | None = None, faults: FaultPattern | None = None,
        rng: np.random.Generator | int | None = None) -> RunResult:
    """Sample one branch (deterministic given ``rng`` seed)."""
    rng = np.random.default_rng(rng)
    branches = run_branches(c, input_state, faults)
    if len(branches) == 1:
        return branches[0]
    p = np.array([b.probability for b in branches])
    return branches[int(rng.choice(len(branches), p=p / p.sum()))]


# --- channels --------------------------------------------------------------


@dataclass(frozen=True)
class ChannelMatrix:
    """Superoperator S with vec(rho_out) = S vec(rho_in) (row-major vec)."""

    matrix: np.ndarray
    dims_in: tuple[int, ...]
    dims_out: tuple[int, ...]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        dout = int(np.prod(self.dims_out))
        return (self.matrix @ np.asarray(rho).reshape(-1)).reshape(dout, dout)

    def __matmul__(self, other: ChannelMatrix) -> ChannelMatrix:
        """Composition: (self @ other) applies ``other`` first."""
        return ChannelMatrix(self.matrix @ other.matrix, other.dims_in, self.dims_out)

    def restrict_inputs(self, basis: np.ndarray) -> np.ndarray:
        """Matrix of the map on operators supported on span(basis columns)."""
        v = np.asarray(basis)
        din = v.shape[0]
        cols = []
        for i in range(v.shape[1]):
            for j in range(v.shape[1]):
                rho = np.outer(v[:, i], v[:, j].conj())
                cols.append(self.matrix @ rho.reshape(-1))
        assert din == int(np.prod(self.dims_in))
        return np.array(cols).T

    def choi(self) -> np.ndarray:
        din = int(np.prod(self.dims_in))
        dout = int(np.prod(self.dims_out))
        s = self.matrix.reshape(dout, dout, din, din)
        return np.transpose(s, (2, 0, 3, 1)).reshape(din * dout, din * dout)

    def is_cptp(self, atol: float = 1e-8) -> bool:
        j = self.choi()
        if not np.allclose(j, j.conj().T, atol=atol):
            return False
        if np.linalg.eigvalsh((j + j.conj().T) / 2).min() < -atol:
            return False
        din = int(np.prod(self.dims_in))
        dout = int(np.prod(self.dims_out))
        tr = np.einsum("iaja->ij", j.reshape(din, dout, din, dout))
        return bool(np.allclose(tr, np.eye(din), atol=atol))


def unitary_channel(u: np.ndarray, dims: Sequence[int]) -> ChannelMatrix:
    u = np.asarray(u)
    return ChannelMatrix(np.kron(u, u.conj()), tuple(dims), tuple(dims))


def identity_channel(dims: Sequence[int]) -> ChannelMatrix:
    return unitary_channel(np.eye(int(np.prod(dims))), dims)


def channel_of(c: Circuit, faults: FaultPattern | None = None, *, inputs: Sequence[int] | None = None,
               outputs: Sequence[int] | None = None, accepted_only: bool = False) -> ChannelMatrix:
    """Exact channel from ``inputs`` to ``outputs`` of ``c``.

    Declared inputs not listed in ``inputs`` start in |0>; every live qubit
    not in ``outputs`` is traced out, and measurement outcomes are summed
    over.  With ``accepted_only`` rejected post-selection branches are
    dropped (the map is then trace non-increasing).
    """
    inputs = list(c.inputs if inputs is None else inputs)
    outputs = list(c.outputs if outputs is None else outputs)
    if any(q not in c.inputs for q in inputs):
        raise ValueError("channel inputs must be declared circuit inputs")
    if len(outputs) > MAX_CHANNEL_QUBITS or len(inputs) > MAX_CHANNEL_QUBITS:
        raise CapacityError("channel extraction is capped at 3 extended qubits")
    dims = c.dims
    din = [dims[q] for q in inputs]
    dout = [dims[q] for q in outputs]
    Din = int(np.prod(din)) if din else 1
    fixed = [q for q in c.inputs if q not in inputs]
    zero = np.zeros(int(np.prod([dims[q] for q in fixed])) if fixed else 1, dtype=complex)
    zero[0] = 1
    psi = np.einsum("ib,r->irb", np.eye(Din, dtype=complex), zero).reshape(din + [dims[q] for q in fixed] + [Din])
    Dout = int(np.prod(dout)) if dout else 1
    s = np.zeros((Dout, Dout, Din, Din), dtype=complex)
    for b in evolve(c, psi, inputs + fixed, faults, prune=1e-30):
        if accepted_only and not b.accepted:
            continue
        if any(q not in b.live for q in outputs):
            raise ValueError("channel outputs must be live at the end of the circuit")
        rest = [q for q in b.live if q not in outputs]
        k = np.transpose(b.tensor, [b.live.index(q) for q in outputs + rest] + [len(b.live)])
        k = k.reshape(Dout, -1, Din)
        s += np.einsum("ori,prj->opij", k, k.conj())
    return ChannelMatrix(s.reshape(Dout * Dout, Din * Din), tuple(din), tuple(dout))


def channel_distance(a: ChannelMatrix, b: ChannelMatrix) -> float:
    """Max absolute entry difference of two superoperators (phase-free comparison)."""
    return float(np.max(np.abs(a.matrix - b.matrix))) if a.matrix.size else 0.0


def system_basis(dims: Sequence[int]) -> np.ndarray:
    d = int(np.prod(dims))
    s = system_indices(dims)
    v = np.zeros((d, len(s)))
    v[s, np.arange(len(s))] = 1
    return v


def leakage_in_image(ch: ChannelMatrix, input_basis: np.ndarray | None = None) -> float:
    """Largest output weight outside the all-system subspace over basis inputs."""
    dout = ch.dims_out
    P = system_projector(dout)
    Q = np.eye(P.shape[0]) - P
    din = int(np.prod(ch.dims_in))
    vecs = np.eye(din) if input_basis is None else input_basis
    worst = 0.0
    n = vecs.shape[1]
    # basis states and pairwise superpositions cover coherences
    probes = [vecs[:, i] for i in range(n)]
    probes += [(vecs[:, i] + vecs[:, j]) / np.sqrt(2) for i in range(n) for j in range(i + 1, n)]
    probes += [(vecs[:, i] + 1j * vecs[:, j]) / np.sqrt(2) for i in range(n) for j in range(i + 1, n)]
    for v in probes:
        rho = ch.apply(np.outer(v, v.conj()))
        worst = max(worst, float(np.real(np.trace(Q @ rho))))
    return worst


def to_json_pairs(a: np.ndarray) -> list:
    """Nested lists of (re, im) pairs for JSON debugging dumps."""
    a = np.asarray(a)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [to_json_pairs(x) for x in a]


def tensor_channels(*chs: ChannelMatrix) -> ChannelMatrix:
    """Channel acting as ``chs[0] (x) chs[1] (x) ...`` on consecutive registers."""
    out = chs[0]
    for b in chs[1:]:
        a = out
        ai, ao = int(np.prod(a.dims_in)), int(np.prod(a.dims_out))
        bi, bo = int(np.prod(b.dims_in)), int(np.prod(b.dims_out))
        sa = a.matrix.reshape(ao, ao, ai, ai)
        sb = b.matrix.reshape(bo, bo, bi, bi)
        s = np.einsum("pqij,rskl->prqsikjl", sa, sb).reshape((ao * bo) ** 2, (ai * bi) ** 2)
        out = ChannelMatrix(s, a.dims_in + b.dims_in, a.dims_out + b.dims_out)
    return out


def partial_trace_channel(u: np.ndarray, dims: Sequence[int], keep: Sequence[int], inputs: Sequence[int],
                          ancilla_levels: Mapping[int, int] | None = None) -> ChannelMatrix:
    """Channel from ``inputs`` to ``keep`` of the unitary ``u`` with other qubits starting in fixed levels."""
    dims = list(dims)
    n = len(dims)
    anc = dict(ancilla_levels or {})
    others = [q for q in range(n) if q not in inputs]
    din = [dims[q] for q in inputs]
    Din = int(np.prod(din))
    start = np.zeros(dims + [Din], dtype=complex)
    for k, levels in enumerate(itertools.product(*[range(d) for d in din])):
        idx = [0] * n
        for q, l in zip(inputs, levels):
            idx[q] = l
        for q in others:
            idx[q] = anc.get(q, 0)
        start[tuple(idx) + (k,)] = 1
    psi = np.tensordot(np.asarray(u).reshape(dims + dims), start, axes=(list(range(n, 2 * n)), list(range(n))))
    rest = [q for q in range(n) if q not in keep]
    Dout = int(np.prod([dims[q] for q in keep]))
    k = np.moveaxis(psi, list(keep) + rest, list(range(n))).reshape(Dout, -1, Din)
    s = np.einsum("ori,prj->opij", k, k.conj())
    return ChannelMatrix(s.reshape(Dout * Dout, Din * Din), tuple(din), tuple(dims[q] for q in keep))
