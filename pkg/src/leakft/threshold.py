"""Threshold arithmetic: the pair-count formula, LRU scaling and pair-count bounds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .lru import TELEPORT_R

ALPHA = 2 * TELEPORT_R + 1  # a gate plus an LRU on each of its (at most two) inputs
REFERENCE_BOUND = 2.73e-5  # probabilistic threshold for the plain CNOT exRec without leakage


@dataclass(frozen=True)
class ThresholdParams:
    A: int
    alpha: int = ALPHA
    r: int = TELEPORT_R
    base_threshold: float | None = REFERENCE_BOUND
    N: int | None = None

    def __post_init__(self):
        if self.A < 1:
            raise ValueError("A must be at least 1")
        if self.alpha > 2 * self.r + 1:
            raise ValueError("alpha cannot exceed 2r+1")
        if self.N is not None and self.N < 2:
            raise ValueError("N must be at least 2")


@dataclass
class BoundReport:
    kind: str
    value: float
    inputs: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "inputs": self.inputs, "note": self.note}


def epsilon_c(A: int, alpha: int) -> float:
    """Critical fault strength 1/(e A alpha)."""
    if A < 1 or alpha < 1:
        raise ValueError("A and alpha must be at least 1")
    return 1.0 / (math.e * A * alpha)


def scaled_probabilistic_bound(base: float, r: int) -> float:
    """A threshold for LRU-free circuits divided by the LRU blow-up 2r+1."""
    if base <= 0 or r < 0:
        raise ValueError("base must be positive and r non-negative")
    return base / (2 * r + 1)


def pair_count_exact(N: int) -> Fraction:
    if N < 2:
        raise ValueError("N must be at least 2")
    return Fraction(1, math.comb(N, 2))


def pair_count_bound(N: int) -> float:
    """1 / C(N, 2): every pair of locations counted as malignant."""
    return float(pair_count_exact(N))


def malignant_bound(M: int) -> float:
    """1 / M for M malignant pairs; M = 0 means no pair can fail, reported as unbounded."""
    if M < 0:
        raise ValueError("M must be non-negative")
    if M == 0:
        warnings.warn("no malignant pairs: the pair-count bound is unbounded", RuntimeWarning, stacklevel=2)
        return math.inf
    return 1.0 / M


def sig(x: float, digits: int = 2) -> str:
    """Format to a fixed number of significant figures (e.g. 2.1e-06)."""
    return f"{x:.{digits - 1}e}"


def threshold_report(N: int = 1247, malignant: int | None = None, alpha: int = ALPHA,
                     base: float = REFERENCE_BOUND, r: int = TELEPORT_R) -> list[BoundReport]:
    """All bounds side by side; the formula value and the probabilistic bounds are kept apart."""
    A = math.comb(N, 2)
    out = [
        BoundReport("pair-formula", epsilon_c(A, alpha), {"A": A, "alpha": alpha},
                    "critical fault strength 1/(e A alpha) with A = all location pairs"),
        BoundReport("factor-scaling", scaled_probabilistic_bound(base, r), {"base": base, "r": r},
                    "probabilistic bound degraded by 2r+1"),
        BoundReport("crude-pairs", pair_count_bound(N), {"N": N}, "1/C(N,2)"),
    ]
    if malignant is not None:
        value = malignant_bound(malignant) if malignant else math.inf
        out.append(BoundReport("malignant-pairs", value, {"M": malignant}, "1/M over rectangle pairs"))
    return out
