"""Hamiltonian noise model at location granularity.

Each location evolves for a time ``t0`` under H_ideal + H_regular + H_leak.
H_regular acts inside the all-system subspace (optionally coupled to a small
per-location bath); H_leak only couples system and leakage subspaces.  The
difference between the noisy and ideal location unitaries is the fault
operator E, and fault paths are products with E inserted at a chosen subset
of locations.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, schur

from .circuit import Circuit, Kind
from .dense import CapacityError, ExtendedOperator, location_operator, opnorm, system_projector

HERMITIAN_ATOL = 1e-10
BLOCK_ATOL = 1e-14


def is_hermitian(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return np.allclose(m, np.asarray(m).conj().T, atol=atol)


def _projectors(dims: Sequence[int], bath_dim: int) -> tuple[np.ndarray, np.ndarray]:
    p = np.kron(system_projector(dims), np.eye(bath_dim))
    return p, np.eye(p.shape[0]) - p


@dataclass(frozen=True)
class LocationHamiltonians:
    """Generators of one location on (extended qubits) x (bath).

    All three matrices act on the same space of dimension prod(dims) * bath_dim.
    """

    h_ideal: np.ndarray
    h_regular: np.ndarray
    h_leak: np.ndarray
    dims: tuple[int, ...]
    t0: float = 1.0
    bath_dim: int = 1

    def __post_init__(self):
        d = int(np.prod(self.dims)) * self.bath_dim
        for name in ("h_ideal", "h_regular", "h_leak"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if m.shape != (d, d):
                raise ValueError(f"{name} has shape {m.shape}, expected {(d, d)}")
            if not is_hermitian(m):
                raise ValueError(f"{name} is not Hermitian")
            object.__setattr__(self, name, m)
        object.__setattr__(self, "dims", tuple(self.dims))
        p, q = _projectors(self.dims, self.bath_dim)
        if np.max(np.abs(p @ self.h_regular @ q), initial=0) > BLOCK_ATOL:
            raise ValueError("h_regular couples system and leakage subspaces")
        if max(np.max(np.abs(p @ self.h_leak @ p), initial=0), np.max(np.abs(q @ self.h_leak @ q), initial=0)) > BLOCK_ATOL:
            raise ValueError("h_leak must only couple system and leakage subspaces")

    @property
    def dim(self) -> int:
        return self.h_ideal.shape[0]

    def to_dict(self) -> dict:
        def pairs(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in m]

        return {"dims": list(self.dims), "t0": self.t0, "bath_dim": self.bath_dim,
                "h_ideal": pairs(self.h_ideal), "h_regular": pairs(self.h_regular), "h_leak": pairs(self.h_leak)}

    @classmethod
    def from_dict(cls, d: Mapping) -> LocationHamiltonians:
        def mat(x):
            a = np.asarray(x, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        return cls(mat(d["h_ideal"]), mat(d["h_regular"]), mat(d["h_leak"]), tuple(d["dims"]),
                   float(d.get("t0", 1.0)), int(d.get("bath_dim", 1)))


def zero_faults(h_ideal: np.ndarray, dims: Sequence[int], t0: float = 1.0, bath_dim: int = 1) -> LocationHamiltonians:
    h = np.asarray(h_ideal, dtype=complex)
    if h.shape[0] != int(np.prod(dims)) * bath_dim:
        h = np.kron(h, np.eye(bath_dim))
    z = np.zeros_like(h)
    return LocationHamiltonians(h, z, z.copy(), tuple(dims), t0, bath_dim)


def ideal_hamiltonian(u: np.ndarray, t0: float = 1.0) -> np.ndarray:
    """Hermitian H with exp(-i t0 H) = u, from the Schur form of the unitary."""
    t, z = schur(np.asarray(u, dtype=complex), output="complex")
    phases = np.angle(np.diag(t))
    h = -(z * phases) @ z.conj().T / t0
    return (h + h.conj().T) / 2


def location_unitary(h: LocationHamiltonians | Sequence[LocationHamiltonians]) -> ExtendedOperator:
    """exp(-i t0 (H_ideal + H_regular + H_leak)); a sequence is applied as time segments in order."""
    segs = [h] if isinstance(h, LocationHamiltonians) else list(h)
    u = np.eye(segs[0].dim, dtype=complex)
    for s in segs:
        u = expm(-1j * s.t0 * (s.h_ideal + s.h_regular + s.h_leak)) @ u
    return ExtendedOperator(u, _op_dims(segs[0]))


def ideal_unitary(h: LocationHamiltonians | Sequence[LocationHamiltonians]) -> ExtendedOperator:
    segs = [h] if isinstance(h, LocationHamiltonians) else list(h)
    u = np.eye(segs[0].dim, dtype=complex)
    for s in segs:
        u = expm(-1j * s.t0 * s.h_ideal) @ u
    return ExtendedOperator(u, _op_dims(segs[0]))


def _op_dims(h: LocationHamiltonians) -> tuple[int, ...]:
    return h.dims + ((h.bath_dim,) if h.bath_dim > 1 else ())


def fault_operator(u: ExtendedOperator | np.ndarray, u0: ExtendedOperator | np.ndarray) -> tuple[np.ndarray, float]:
    """E = U - U0 and its operator norm."""
    a = u.matrix if isinstance(u, ExtendedOperator) else np.asarray(u)
    b = u0.matrix if isinstance(u0, ExtendedOperator) else np.asarray(u0)
    if a.shape != b.shape:
        raise ValueError("operators have different dimensions")
    e = a - b
    return e, opnorm(e)


def epsilon_bound(hams: Iterable[LocationHamiltonians]) -> tuple[float, float, float]:
    """(eps_reg, eps_leak, eps) with eps_x = 2 max_loc t0 ||h_x|| and eps = eps_reg + eps_leak."""
    hams = list(hams)
    if not hams:
        raise ValueError("need at least one location")
    eps_reg = 2 * max(h.t0 * opnorm(h.h_regular) for h in hams)
    eps_leak = 2 * max(h.t0 * opnorm(h.h_leak) for h in hams)
    return eps_reg, eps_leak, eps_reg + eps_leak


# --- fault paths on small circuits -----------------------------------------


@dataclass
class NoisyCircuit:
    """A gate-only circuit with Hamiltonians per location and a bath per location."""

    circuit: Circuit
    hams: Mapping[int, LocationHamiltonians]
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        c = self.circuit
        if any(not loc.is_gate for loc in c.locations):
            raise ValueError("fault paths are defined on gate and wait locations only")
        for i, loc in enumerate(c.locations):
            h = self.hams[i]
            if h.dims != tuple(c.dims[q] for q in loc.qubits):
                raise ValueError(f"Hamiltonian dims at location {i} do not match its qubits")
        total = int(np.prod(c.dims)) * int(np.prod([self.hams[i].bath_dim for i in range(len(c.locations))]))
        if c.num_qubits > 3 or total > 4096:
            raise CapacityError("fault paths are capped at 3 extended qubits plus small baths")

    @property
    def full_dims(self) -> list[int]:
        baths = [self.hams[i].bath_dim for i in range(len(self.circuit.locations))]
        return list(self.circuit.dims) + baths

    def _embed(self, i: int, m: np.ndarray) -> np.ndarray:
        """Lift an operator on location i's qubits (+ its bath) to the full space."""
        c = self.circuit
        loc = c.locations[i]
        full = self.full_dims
        axes = list(loc.qubits) + ([c.num_qubits + i] if self.hams[i].bath_dim > 1 else [])
        d = int(np.prod(full))
        eye = np.eye(d, dtype=complex).reshape(full + [d])
        local = [full[a] for a in axes]
        k = len(axes)
        mm = m.reshape(local + local)
        out = np.tensordot(mm, eye, axes=(list(range(k, 2 * k)), axes))
        out = np.moveaxis(out, list(range(k)), axes)
        return out.reshape(d, d)

    def _ordered(self) -> list[int]:
        c = self.circuit
        return sorted(range(len(c.locations)), key=lambda i: (c.locations[i].timestep, i))

    def location_ops(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(U0, E) lifted to the full space."""
        if i not in self._cache:
            h = self.hams[i]
            u0 = ideal_unitary(h).matrix
            e, _ = fault_operator(location_unitary(h), u0)
            self._cache[i] = (self._embed(i, u0), self._embed(i, e))
        return self._cache[i]

    def fault_path_operator(self, fault_set: Iterable[int]) -> tuple[np.ndarray, float]:
        fs = set(fault_set)
        d = int(np.prod(self.full_dims))
        out = np.eye(d, dtype=complex)
        for i in self._ordered():
            u0, e = self.location_ops(i)
            out = (e if i in fs else u0) @ out
        return out, opnorm(out)

    def noisy_evolution(self) -> np.ndarray:
        d = int(np.prod(self.full_dims))
        out = np.eye(d, dtype=complex)
        for i in self._ordered():
            u0, e = self.location_ops(i)
            out = (u0 + e) @ out
        return out

    def fault_path_sum(self) -> np.ndarray:
        """Sum over every subset of locations of the fault-path operators."""
        n = len(self.circuit.locations)
        total = 0
        for k in range(n + 1):
            for fs in itertools.combinations(range(n), k):
                total = total + self.fault_path_operator(fs)[0]
        return total

    def epsilon(self) -> tuple[float, float, float]:
        return epsilon_bound(self.hams[i] for i in range(len(self.circuit.locations)))


def fault_path_operator(c: Circuit, hams: Mapping[int, LocationHamiltonians], fault_set: Iterable[int]) -> tuple[np.ndarray, float]:
    """Product of ideal unitaries with E inserted at ``fault_set``; returns (operator, norm)."""
    return NoisyCircuit(c, hams).fault_path_operator(fault_set)


# --- R / L decomposition ---------------------------------------------------


@dataclass(frozen=True)
class RegularError:
    """Block form [[A, 0], [0, 0]] on one extended qubit."""

    matrix: np.ndarray

    @property
    def A(self) -> np.ndarray:
        return self.matrix[:2, :2]


@dataclass(frozen=True)
class LeakageError:
    """Block form [[0, C], [B, 0]] on one extended qubit."""

    matrix: np.ndarray

    @property
    def B(self) -> np.ndarray:
        return self.matrix[2:, :2]

    @property
    def C(self) -> np.ndarray:
        return self.matrix[:2, 2:]


def decompose_RL(op: np.ndarray) -> tuple[RegularError, LeakageError, np.ndarray]:
    """Split an operator on one extended qubit into system, coupling and leakage blocks."""
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1] or op.shape[0] < 2:
        raise ValueError("expected a square operator on one extended qubit")
    d = op.shape[0]
    p = np.zeros((d, d))
    p[0, 0] = p[1, 1] = 1
    q = np.eye(d) - p
    return RegularError(p @ op @ p), LeakageError(p @ op @ q + q @ op @ p), q @ op @ q


# --- random draws ------------------------------------------------------------


def random_hermitian(d: int, norm: float, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (a + a.conj().T) / 2
    n = opnorm(h)
    return h * (norm / n) if n > 0 else h


def random_location_hams(dims: Sequence[int], rng: np.random.Generator, *, reg: float = 0.01, leak: float = 0.01,
                         t0: float = 1.0, bath_dim: int = 1, ideal_norm: float = 1.0) -> LocationHamiltonians:
    """Random location generators with prescribed fault-Hamiltonian norms.

    The ideal part acts only on the system subspace (identity on leaked
    components); the regular part lives on system x bath; the leakage part is
    a pure system-leakage coupling.
    """
    dims = tuple(dims)
    p, q = _projectors(dims, bath_dim)
    d = p.shape[0]
    s = np.kron(system_projector(dims), np.eye(bath_dim))
    hi = random_hermitian(int(np.prod(dims)), ideal_norm, rng)
    hi = np.kron(system_projector(dims) @ hi @ system_projector(dims), np.eye(bath_dim))
    hr = s @ random_hermitian(d, 1.0, rng) @ s
    hr = hr * (reg / opnorm(hr)) if opnorm(hr) > 0 else hr
    raw = random_hermitian(d, 1.0, rng)
    hl = p @ raw @ q + q @ raw @ p
    hl = hl * (leak / opnorm(hl)) if opnorm(hl) > 0 else hl
    return LocationHamiltonians(hi, hr, hl, dims, t0, bath_dim)


def ideal_circuit_hams(c: Circuit) -> dict[int, LocationHamiltonians]:
    """Fault-free generators reproducing the circuit's ideal location unitaries."""
    out = {}
    for i, loc in enumerate(c.locations):
        if loc.kind in (Kind.PREP, Kind.MEASURE):
            raise ValueError("only gate and wait locations have unitary generators")
        dims = [c.dims[q] for q in loc.qubits]
        out[i] = zero_faults(ideal_hamiltonian(location_operator(loc, c.dims)), dims)
    return out


def leak_rotation(theta: float, d: int = 3, level: int = 2) -> np.ndarray:
    """exp(-i theta (|level><1| + |1><level|)): a Rabi rotation from |1> into the leakage level."""
    g = np.zeros((d, d), dtype=complex)
    g[level, 1] = g[1, level] = 1
    return expm(-1j * theta * g)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
