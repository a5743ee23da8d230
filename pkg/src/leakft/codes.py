"""The [[7,1,3]] Steane code: check matrix, decoding and Pauli classification."""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

N = 7
# column j of the Hamming check matrix is the binary expansion of j + 1
HAMMING = np.array([[(j + 1) >> (2 - r) & 1 for j in range(N)] for r in range(3)], dtype=np.uint8)
ROW_MASKS = tuple(int(sum(1 << j for j in range(N) if HAMMING[r, j])) for r in range(3))
FULL = (1 << N) - 1


@dataclass(frozen=True)
class CssCode:
    """A CSS stabilizer code in binary symplectic form [x | z]."""

    n: int
    k: int
    stabilizers: np.ndarray
    logical_x: np.ndarray
    logical_z: np.ndarray

    @property
    def num_generators(self) -> int:
        return self.stabilizers.shape[0]

    def commutes(self, a: np.ndarray, b: np.ndarray) -> bool:
        n = self.n
        return int(a[:n] @ b[n:] + a[n:] @ b[:n]) % 2 == 0

    def distance(self) -> int:
        """Smallest weight of a Pauli commuting with all stabilizers but not in the stabilizer group."""
        n = self.n
        stab_span = _span(self.stabilizers)
        best = n
        for w in range(1, n + 1):
            for support in itertools.combinations(range(n), w):
                for paulis in itertools.product((1, 2, 3), repeat=w):
                    v = np.zeros(2 * n, dtype=np.uint8)
                    for q, p in zip(support, paulis):
                        v[q] = p & 1
                        v[n + q] = p >> 1
                    if all(self.commutes(v, s) for s in self.stabilizers) and v.tobytes() not in stab_span:
                        return w
            if w >= best:
                break
        return best


def _span(rows: np.ndarray) -> set[bytes]:
    out = set()
    for coeffs in itertools.product((0, 1), repeat=rows.shape[0]):
        v = (np.array(coeffs, dtype=np.uint8) @ rows) % 2
        out.add(v.astype(np.uint8).tobytes())
    return out


def steane_code() -> CssCode:
    z = np.zeros_like(HAMMING)
    stabs = np.vstack([np.hstack([HAMMING, z]), np.hstack([z, HAMMING])]).astype(np.uint8)
    ones = np.ones(N, dtype=np.uint8)
    zeros = np.zeros(N, dtype=np.uint8)
    return CssCode(N, 1, stabs, np.hstack([ones, zeros]), np.hstack([zeros, ones]))


def mask(bits: Sequence[int]) -> int:
    return sum(1 << j for j, b in enumerate(bits) if b)


def syndrome(m: int) -> int:
    """Hamming syndrome of a 7-bit mask: XOR of (j+1) over its support (0 means none)."""
    s = 0
    for j in range(N):
        if m >> j & 1:
            s ^= j + 1
    return s


def parity(m: int) -> int:
    return bin(m).count("1") & 1


def decode_logical(bits: Sequence[int]) -> int:
    """Logical value of a transversal measurement record after single-error correction."""
    m = mask(bits)
    s = syndrome(m)
    if s:
        m ^= 1 << (s - 1)
    return parity(m)


def in_even_code(bits: Sequence[int]) -> bool:
    """True iff the string is a codeword of the even subcode (no detectable error, logical 0)."""
    m = mask(bits)
    return syndrome(m) == 0 and parity(m) == 0


def _stabilizer_masks() -> list[int]:
    stab = [0]
    for r in ROW_MASKS:
        stab = stab + [s ^ r for s in stab]
    return stab


@lru_cache(maxsize=None)
def coset_weight_tables() -> tuple[np.ndarray, np.ndarray]:
    """Minimum weights of a Pauli error modulo stabilizers, indexed [x_mask, z_mask].

    The first table keeps the logical class fixed (the weight of the error
    itself up to stabilizers); the second also minimizes over logical
    operators (the distance of the corrupted state to the code space).
    Y counts as weight one.
    """
    stab = _stabilizer_masks()
    size = 1 << N
    a = np.arange(size, dtype=np.uint64)
    fixed = np.full((size, size), N + 1, dtype=np.int64)
    anyl = fixed.copy()
    for lx in (0, FULL):
        for lz in (0, FULL):
            cand = np.full((size, size), N + 1, dtype=np.int64)
            for sx in stab:
                ax = (a ^ np.uint64(sx ^ lx))[:, None]
                for sz in stab:
                    bz = (a ^ np.uint64(sz ^ lz))[None, :]
                    cand = np.minimum(cand, np.bitwise_count(ax | bz).astype(np.int64))
            if lx == 0 and lz == 0:
                fixed = cand
            anyl = np.minimum(anyl, cand)
    return fixed, anyl


def hamming_correct(m: int) -> int:
    """Apply single-error correction to a 7-bit mask."""
    s = syndrome(m)
    return m ^ (1 << (s - 1)) if s else m


def decoded_flip(m: int) -> int:
    """Logical flip left by one Pauli type after ideal Hamming decoding."""
    return parity(hamming_correct(m))


def syndrome_pair(x_mask: int, z_mask: int) -> tuple[int, int]:
    return syndrome(x_mask), syndrome(z_mask)
