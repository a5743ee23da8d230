"""Command-line front end: count, check, threshold, simulate, export.

Exit codes: 0 success, 1 property failure, 2 usage error, 3 capacity error.
Reports are JSON (``--json``) with a short human summary on stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from . import circuit as ir
from .dense import CapacityError, ExtendedState, leakage_weight, local_vector, run_branches
from .lru import TELEPORT_R, broken_teleport_lru, teleport_lru
from .mbqc import basic_unit, verify_pattern
from .steane import GADGETS, gadget_counts, get_gadget
from .symbolic import EnumerationCapacityError, SymbolicError, applicable, check_property, count_malignant_pairs
from .threshold import ALPHA, REFERENCE_BOUND, BoundReport, epsilon_c, threshold_report

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("LEAKFT_JOBS", "1")))
    except ValueError:
        return 1


def _gadget_name(name: str, lru: bool) -> str:
    if lru and not name.endswith("-lru") and f"{name}-lru" in GADGETS:
        return f"{name}-lru"
    if lru and name.startswith("cnot-exrec") and "-lru" not in name:
        return name.replace("cnot-exrec", "cnot-exrec-lru")
    return name


def _load(name: str, lru: bool):
    full = _gadget_name(name, lru)
    if full not in GADGETS:
        raise UsageError(f"unknown gadget {name!r}; known: lru, {', '.join(sorted(GADGETS))}")
    return get_gadget(full)


def _write_reports(args, report: dict, rows: list[dict] | None = None) -> None:
    if getattr(args, "json", None):
        Path(args.json).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    if getattr(args, "csv", None) and rows:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


# --- commands ----------------------------------------------------------------


def cmd_count(args) -> int:
    if args.target == "lru":
        counts = {"locations": TELEPORT_R, "lrus": 1, "rectangles": 0, "strrecs": 0}
        name = "teleport-lru"
    else:
        spec = _load(args.target, args.lru)
        counts = gadget_counts(spec)
        name = spec.name
    key = {"rects": "rectangles", "rectangles": "rectangles"}.get(args.what, args.what)
    if key != "all" and key not in counts:
        raise UsageError(f"--what must be one of all, {', '.join(counts)}")
    if key == "all":
        for k, v in counts.items():
            print(f"{k}: {v}")
    else:
        print(counts[key])
    _write_reports(args, {"gadget": name, "counts": counts}, [{"gadget": name, **counts}])
    return EXIT_OK


def cmd_check(args) -> int:
    spec = _load(args.target, args.lru)
    props = list(applicable(spec)) if args.props == "all" else [p.strip() for p in args.props.split(",")]
    reports = []
    for p in props:
        try:
            r = check_property(spec, p)
        except SymbolicError as e:
            raise UsageError(str(e)) from None
        reports.append(r)
        status = "pass" if r.passed else "FAIL"
        print(f"{spec.name} {p}: {status} ({r.cases} cases)")
        for f in r.failures[:1]:
            print(f"  counterexample: {json.dumps(f)}")
    out = {"gadget": spec.name, "properties": [r.to_dict() for r in reports]}
    if args.pairs:
        m = count_malignant_pairs(spec, jobs=args.jobs)
        print(f"malignant pairs: {m.malignant} of {m.total_pairs} ({m.undecided} undecided)")
        out["malignant"] = m.to_dict()
    rows = [{"gadget": spec.name, "property": r.prop, "passed": r.passed, "cases": r.cases} for r in reports]
    _write_reports(args, out, rows)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_threshold(args) -> int:
    picked = args.formula or args.scale or args.crude or args.malignant is not None or args.campaign
    malignant = args.malignant
    if args.campaign:
        malignant = count_malignant_pairs(get_gadget("cnot-exrec-lru"), jobs=args.jobs).malignant
    reports = threshold_report(args.N, malignant, args.alpha, args.base, args.r)
    by_kind = {r.kind: r for r in reports}
    if args.formula and args.A is not None:
        by_kind["pair-formula"] = BoundReport("pair-formula", epsilon_c(args.A, args.alpha),
                                              {"A": args.A, "alpha": args.alpha}, "1/(e A alpha)")
    wanted = []
    if args.formula:
        wanted.append("pair-formula")
    if args.scale:
        wanted.append("factor-scaling")
    if args.crude:
        wanted.append("crude-pairs")
    if malignant is not None:
        wanted.append("malignant-pairs")
    if not picked:
        wanted = list(by_kind)
    for k in wanted:
        r = by_kind[k]
        print(f"{k}: {r.value:.6g}  {json.dumps(r.inputs)}")
    _write_reports(args, {"bounds": [by_kind[k].to_dict() for k in wanted]},
                   [{"kind": k, "value": by_kind[k].value} for k in wanted])
    return EXIT_OK


_INPUTS = {
    "zero": {0: 1},
    "one": {1: 1},
    "plus": {0: 1, 1: 1},
    "i": {0: 1, 1: 1j},
    "leaked": {2: 1},
}


def _parse_angle(text: str) -> float:
    t = text.strip().lower().replace(" ", "")
    if "pi" in t:
        num, _, den = t.partition("/")
        coef = num.replace("*", "").replace("pi", "")
        c = {"": 1.0, "+": 1.0, "-": -1.0}.get(coef)
        if c is None:
            c = float(coef)
        return c * math.pi / (float(den) if den else 1.0)
    return float(t)


def cmd_simulate(args) -> int:
    if args.target == "empty":
        print("identity: no locations, state unchanged")
        _write_reports(args, {"target": "empty", "identity": True})
        return EXIT_OK
    if args.target == "lru":
        g = broken_teleport_lru() if args.broken else teleport_lru()
        if args.input not in _INPUTS:
            raise UsageError(f"--input must be one of {', '.join(_INPUTS)}")
        psi = ExtendedState(local_vector(3, _INPUTS[args.input]), (3,))
        rows = []
        for br in run_branches(g.circuit, psi):
            out_leak = leakage_weight(br.state, br.index(g.circuit.outputs[0]))
            rows.append({"outcomes": json.dumps({str(k): v for k, v in sorted(br.outcomes.items())}),
                         "probability": round(br.probability, 12), "output_leakage": out_leak})
            print(f"branch {rows[-1]['outcomes']}: p={br.probability:.6f} output leakage={out_leak:.3e}")
        _write_reports(args, {"target": "lru", "input": args.input, "branches": rows}, rows)
        return EXIT_OK
    if args.target == "mbqc-unit":
        angles = [_parse_angle(a) for a in args.angles.split(",")]
        if len(angles) != 4:
            raise UsageError("--angles needs four comma-separated values")
        rep = verify_pattern(basic_unit(*angles), seed=args.seed)
        print(f"branches={rep.branches} min fidelity={rep.min_fidelity:.12f} "
              f"max output leakage={rep.max_output_leakage:.3e}")
        _write_reports(args, {"target": "mbqc-unit", "angles": angles, **rep.to_dict()})
        return EXIT_OK if rep.passed else EXIT_FAIL
    if args.target == "circuit":
        if not args.file:
            raise UsageError("simulate circuit needs --file")
        text = Path(args.file).read_text()
        c = ir.from_json(text) if text.lstrip().startswith("{") else ir.from_text(text)
        rows = []
        for br in run_branches(c):
            rows.append({"outcomes": json.dumps({str(k): v for k, v in sorted(br.outcomes.items())}),
                         "probability": round(br.probability, 12),
                         "leakage": json.dumps([round(leakage_weight(br.state, k), 12) for k in range(len(br.qubits))])})
            print(f"branch {rows[-1]['outcomes']}: p={br.probability:.6f}")
        _write_reports(args, {"target": "circuit", "branches": rows}, rows)
        return EXIT_OK
    raise UsageError(f"unknown simulate target {args.target!r}")


def cmd_export(args) -> int:
    if args.target == "mbqc-unit":
        angles = [_parse_angle(a) for a in args.angles.split(",")]
        text = basic_unit(*angles).to_json()
    else:
        spec = _load(args.target, args.lru)
        text = ir.to_json(spec.circuit) if args.format == "json" else ir.to_text(spec.circuit)
    if args.output:
        Path(args.output).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="leakft", description="Leakage-aware fault-tolerance toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, target=True):
        if target:
            sp.add_argument("target")
            sp.add_argument("--lru", action="store_true", help="use the LRU variant of the gadget")
        sp.add_argument("--json", help="write the JSON report here")
        sp.add_argument("--csv", help="write a CSV summary here")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=_default_jobs())

    sp = sub.add_parser("count", help="location / LRU / rectangle counts")
    common(sp)
    sp.add_argument("--what", default="locations")
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("check", help="property campaigns")
    common(sp)
    sp.add_argument("--props", default="all")
    sp.add_argument("--pairs", action="store_true", help="also count malignant rectangle pairs")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("threshold", help="threshold bounds")
    common(sp, target=False)
    sp.add_argument("--formula", action="store_true", help="critical strength 1/(e A alpha)")
    sp.add_argument("--scale", action="store_true", help="base threshold divided by 2r+1")
    sp.add_argument("--crude", action="store_true", help="1/C(N,2)")
    sp.add_argument("--campaign", action="store_true", help="count malignant pairs on the LRU CNOT exRec")
    sp.add_argument("--malignant", type=int)
    sp.add_argument("--N", type=int, default=1247)
    sp.add_argument("--A", type=int)
    sp.add_argument("--alpha", type=int, default=ALPHA)
    sp.add_argument("--base", type=float, default=REFERENCE_BOUND)
    sp.add_argument("--r", type=int, default=TELEPORT_R)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("simulate", help="dense runs: lru, mbqc-unit, circuit, empty")
    common(sp, target=False)
    sp.add_argument("target")
    sp.add_argument("--input", default="plus")
    sp.add_argument("--broken", action="store_true")
    sp.add_argument("--angles", default="0,0,0,0")
    sp.add_argument("--file")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("export", help="write a gadget circuit or MBQC pattern")
    common(sp)
    sp.add_argument("--format", choices=("text", "json"), default="json")
    sp.add_argument("--angles", default="0,0,0,0")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_export)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CapacityError, EnumerationCapacityError) as e:
        print(f"capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ir.CircuitError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
