"""End-to-end acceptance checks, one test per criterion.

Each test prints a one-line verdict; the terminal summary repeats the
verdicts as ``criterion N: PASS|FAIL``.
"""

import itertools
import math
import os
import time

import numpy as np
import pytest

from leakft.circuit import CircuitBuilder
from leakft.dense import ExtendedState, fidelity, leakage_weight, local_vector, run_branches
from leakft.lru import TELEPORT_R, leaked_input, teleport_lru
from leakft.mbqc import verify_unit
from leakft.noise import NoisyCircuit, random_location_hams
from leakft.passes import check_entry, insert_lrus, single_fault_menu, stretch, wave_deviation, wave_reduce
from leakft.steane import get_gadget
from leakft.symbolic import applicable, check_property, count_malignant_pairs
from leakft.threshold import (
    ALPHA,
    REFERENCE_BOUND,
    epsilon_c,
    malignant_bound,
    pair_count_bound,
    scaled_probabilistic_bound,
    sig,
)


def verdict(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


@pytest.mark.criterion(1, "golden counts")
def test_criterion_1_golden_counts():
    t = time.perf_counter()
    plain = get_gadget("cnot-exrec").num_locations
    ec = get_gadget("knill-ec-lru")
    exrec = get_gadget("cnot-exrec-lru").num_locations
    strrecs = get_gadget("steane-ec-lru").num_strrecs
    elapsed = time.perf_counter() - t
    got = (plain, ec.num_lrus, TELEPORT_R, ALPHA, exrec, strrecs)
    ok = got == (575, 28, 6, 13, 1247, 11) and elapsed < 1.0
    assert verdict(1, ok, f"counts={got} in {elapsed:.2f}s"), got


@pytest.mark.criterion(2, "threshold numerics")
def test_criterion_2_threshold_numerics():
    scaled = sig(scaled_probabilistic_bound(REFERENCE_BOUND, TELEPORT_R))
    crude = pair_count_bound(1247)
    eps = epsilon_c(math.comb(1247, 2), ALPHA)
    ok = (
        scaled == "2.1e-06"
        and 1.28e-6 <= crude < 1.29e-6
        and math.isclose(eps, 1 / (math.e * 776_881 * 13), rel_tol=1e-15)
        and math.isclose(eps, 3.642567980379158e-08, rel_tol=1e-12)
        and math.isclose(epsilon_c(1, 1), 1 / math.e, rel_tol=1e-15)
    )
    assert verdict(2, ok, f"scaled={scaled} crude={crude:.4e} eps_c={eps:.6e}")


@pytest.mark.criterion(3, "teleportation LRU contract")
def test_criterion_3_lru_contract():
    g = teleport_lru()
    out = g.circuit.outputs[0]
    worst_fid, worst_leak = 1.0, 0.0
    for coeffs in ({0: 1}, {1: 1}, {0: 1, 1: 1}, {0: 1, 1: 1j}):
        v = local_vector(3, coeffs)
        for br in run_branches(g.circuit, ExtendedState(v, (3,))):
            worst_fid = min(worst_fid, fidelity(br.state.amplitudes, v))
    for br in run_branches(g.circuit, leaked_input()):
        worst_leak = max(worst_leak, leakage_weight(br.state, br.index(out)))
    ok = worst_fid >= 1 - 1e-10 and worst_leak <= 1e-12
    assert verdict(3, ok, f"min fidelity={worst_fid:.15f} max leaked-input leakage={worst_leak:.2e}")


def _random_small_circuit(rng):
    n = int(rng.integers(1, 4))
    b = CircuitBuilder()
    qs = b.qubits(n, input=True)
    for _ in range(int(rng.integers(1, 5))):
        if n > 1 and rng.random() < 0.5:
            i, j = rng.choice(n, size=2, replace=False)
            b.gate(str(rng.choice(["CNOT", "CZ"])), qs[i], qs[j])
        else:
            kind = str(rng.choice(["H", "S", "X", "Z", "wait"]))
            q = qs[int(rng.integers(n))]
            if kind == "wait":
                b.wait(q)
            else:
                b.gate(kind, q)
    return b.build()


@pytest.mark.criterion(4, "fault-path bounds on random Hamiltonians")
def test_criterion_4_fault_paths():
    rng = np.random.default_rng(20240611)
    draws, worst_ratio, worst_sum = 0, 0.0, 0.0
    while draws < 120:
        c = _random_small_circuit(rng)
        bath = int(rng.choice([1, 2]))
        hams = {i: random_location_hams([c.dims[q] for q in loc.qubits], rng, reg=float(rng.uniform(0.001, 0.2)),
                                        leak=float(rng.uniform(0.0, 0.2)), bath_dim=bath)
                for i, loc in enumerate(c.locations)}
        nc = NoisyCircuit(c, hams)
        eps = nc.epsilon()[2]
        n = len(c.locations)
        for k in (1, 2, 3):
            for fs in itertools.combinations(range(n), k):
                worst_ratio = max(worst_ratio, nc.fault_path_operator(fs)[1] / eps**k)
        worst_sum = max(worst_sum, float(np.max(np.abs(nc.fault_path_sum() - nc.noisy_evolution()))))
        draws += 1
    ok = worst_ratio <= 1 + 1e-12 and worst_sum <= 1e-10
    assert verdict(4, ok, f"draws={draws} max ||path||/eps^k={worst_ratio:.4f} max reassembly error={worst_sum:.2e}")


@pytest.mark.criterion(5, "rectangle correctness and wave reduction")
def test_criterion_5_rectangles():
    b = CircuitBuilder()
    q0, q1 = b.qubits(2, input=True)
    b.gate("CNOT", q0, q1)
    b.gate("H", q1)
    b.gate("S", q0)
    src = b.build()
    c, rm = insert_lrus(src)
    fault_free = max(check_entry(c, rm, k).deviation for k in range(len(rm.entries)))
    s, rs = stretch(c, rm, [[0, 1]])
    strrec = rs.entries[0]
    assert strrec.kind == "strrec" and len(strrec.source_gates) == 2
    fault_free = max(fault_free, check_entry(s, rs, 0).deviation)

    rec = rm.entries[0]
    assert len(rec.locations) == 13
    rng = np.random.default_rng(5)
    worst_image, worst_wave, cases, exact_bad = 0.0, 0.0, 0, True
    for loc in rec.locations:
        for f in single_fault_menu(c, loc, rng, n_random=2):
            faults = {loc: f}
            worst_image = max(worst_image, check_entry(c, rm, 0, faults).image_leakage)
            res = wave_reduce(c, rm, faults)
            exact_bad &= set(res.annotations) == {0} and res.annotated_gates == set(rec.source_gates)
            worst_wave = max(worst_wave, wave_deviation(c, res, faults))
            cases += 1
    ok = fault_free <= 1e-10 and worst_image <= 1e-9 and exact_bad and worst_wave <= 1e-9
    assert verdict(5, ok, f"fault-free deviation={fault_free:.1e} single-fault cases={cases} "
                          f"max image leakage={worst_image:.1e} wave deviation={worst_wave:.1e} "
                          f"annotations exact={exact_bad}")


@pytest.mark.criterion(6, "property campaigns on LRU gadgets")
def test_criterion_6_properties():
    results = {}
    for name in ("steane-ec-lru", "knill-ec-lru", "cnot-exrec-lru"):
        spec = get_gadget(name)
        for p in applicable(spec):
            results[(name, p)] = check_property(spec, p).passed
    failed = [k for k, v in results.items() if not v]
    ok = not failed
    assert verdict(6, ok, f"{len(results)} campaigns, failed={failed}")


@pytest.mark.criterion(7, "malignant-pair bound")
def test_criterion_7_malignant_pairs():
    jobs = max(1, int(os.environ.get("LEAKFT_JOBS", "1")))
    rep = count_malignant_pairs(get_gadget("cnot-exrec-lru"), jobs=jobs)
    bound = malignant_bound(rep.malignant) if rep.malignant else math.inf
    ok = bound >= 1.28e-6 and bound >= pair_count_bound(1247)
    assert verdict(7, ok, f"malignant={rep.malignant}/{rep.total_pairs} undecided={rep.undecided} "
                          f"bound={bound:.3e}")


@pytest.mark.criterion(8, "MBQC basic unit on the angle grid")
def test_criterion_8_mbqc_grid():
    grid = (0.0, math.pi / 4, math.pi / 2)
    worst_fid, worst_leak, branches = 1.0, 0.0, set()
    for angles in itertools.product(grid, repeat=4):
        rep = verify_unit(*angles)
        worst_fid = min(worst_fid, rep.min_fidelity)
        worst_leak = max(worst_leak, rep.max_output_leakage)
        branches.add(rep.branches)
    ok = worst_fid >= 1 - 1e-10 and worst_leak <= 1e-12 and branches == {16}
    assert verdict(8, ok, f"81 angle tuples, branches={sorted(branches)} min fidelity={worst_fid:.15f} "
                          f"max leakage={worst_leak:.1e}")
