"""Fault-tolerant circuits with leakage: circuit IR, dense qutrit simulation,
leakage-reduction units, rectangle passes, symbolic property checks, Steane
gadgets, threshold arithmetic and graph-state patterns."""

from .circuit import Circuit, CircuitBuilder, CircuitError, Kind, Location, build_circuit, count_locations
from .codes import steane_code
from .dense import CapacityError, ExtendedOperator, ExtendedState, channel_of, embed_ideal_gate, run, run_branches
from .lru import teleport_lru, verify_lru_contract
from .steane import GadgetSpec, cnot_exrec, get_gadget, knill_ec, steane_ec
from .symbolic import check_property, count_malignant_pairs, inject_and_run
from .threshold import epsilon_c, malignant_bound, pair_count_bound, scaled_probabilistic_bound

__all__ = [
    "CapacityError",
    "Circuit",
    "CircuitBuilder",
    "CircuitError",
    "ExtendedOperator",
    "ExtendedState",
    "GadgetSpec",
    "Kind",
    "Location",
    "build_circuit",
    "channel_of",
    "check_property",
    "cnot_exrec",
    "count_locations",
    "count_malignant_pairs",
    "embed_ideal_gate",
    "epsilon_c",
    "get_gadget",
    "inject_and_run",
    "knill_ec",
    "malignant_bound",
    "pair_count_bound",
    "run",
    "run_branches",
    "scaled_probabilistic_bound",
    "steane_code",
    "steane_ec",
    "teleport_lru",
    "verify_lru_contract",
]
